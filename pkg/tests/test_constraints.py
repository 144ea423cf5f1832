import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowgauntlet.advcraft import (
    DEPENDENTS,
    adjust_dependencies,
    dependency_residual,
    feature_mask,
    touched_columns,
)
from flowgauntlet.errors import UnknownFeature
from flowgauntlet.flowdata import FEATURES

I = {f: i for i, f in enumerate(FEATURES)}


def flow(**kw):
    base = dict(SrcWin=8192, sHops=3, sTtl=252, dTtl=125, SrcBytes=600, DstBytes=400, Dur=2.0,
                TotBytes=1000, Rate=500.0)
    base.update(kw)
    return np.array([base[f] for f in FEATURES], dtype=np.float64)


def test_srcwin_no_change():
    x = flow(SrcWin=1234)
    np.testing.assert_array_equal(adjust_dependencies(x, "SrcWin"), x)


def test_dur_sets_rate():
    out = adjust_dependencies(flow(Dur=2.0, TotBytes=1000), "Dur", epsilon=1e-9)
    assert out[I["Rate"]] == pytest.approx(500.0, rel=1e-9)


def test_shops_sets_ttl():
    assert adjust_dependencies(flow(sHops=5), "sHops", initial_ttl=255)[I["sTtl"]] == 250


def test_ttl_sets_hops():
    assert adjust_dependencies(flow(sTtl=240), "sTtl")[I["sHops"]] == 15
    # dTtl row reads sTtl, as the repair table is written
    assert adjust_dependencies(flow(sTtl=240, dTtl=100), "dTtl")[I["sHops"]] == 15


def test_src_bytes_updates_total_then_duration():
    out = adjust_dependencies(flow(SrcBytes=1600), "SrcBytes")
    assert out[I["TotBytes"]] == 2000
    assert out[I["Dur"]] == pytest.approx(2000 / 500.0)


def test_tot_bytes_holds_src_fixed():
    out = adjust_dependencies(flow(TotBytes=1500), "TotBytes")
    assert out[I["SrcBytes"]] == 600 and out[I["DstBytes"]] == 900
    out = adjust_dependencies(flow(TotBytes=100), "TotBytes")
    assert out[I["DstBytes"]] == 0 and out[I["SrcBytes"]] == 100


def test_rate_sets_duration():
    assert adjust_dependencies(flow(Rate=250.0), "Rate")[I["Dur"]] == pytest.approx(4.0)


def test_unknown_feature():
    with pytest.raises(UnknownFeature):
        adjust_dependencies(flow(), "Bogus")
    with pytest.raises(UnknownFeature):
        dependency_residual(flow(), "Bogus")


def test_matrix_input():
    X = np.stack([flow(Dur=1.0), flow(Dur=4.0)])
    out = adjust_dependencies(X, "Dur")
    np.testing.assert_allclose(out[:, I["Rate"]], [1000.0, 250.0])


def test_mask_and_touched():
    np.testing.assert_array_equal(feature_mask("Dur"), np.eye(9)[I["Dur"]])
    assert touched_columns("SrcBytes") == [I["SrcBytes"], I["TotBytes"], I["Dur"]]


positive = st.floats(1e-3, 1e7)


@settings(max_examples=200, deadline=None)
@given(feature=st.sampled_from(sorted(DEPENDENTS)), src=positive, dst=positive, dur=positive,
       rate=positive, hops=st.floats(0, 64), ttl=st.floats(0, 255), value=positive)
def test_repair_locality_and_residual(feature, src, dst, dur, rate, hops, ttl, value):
    x = flow(SrcBytes=src, DstBytes=dst, Dur=dur, TotBytes=src + dst, Rate=rate, sHops=hops,
             sTtl=ttl)
    if feature in ("sHops", "sTtl", "dTtl"):
        value = min(value, 255.0)
    x[I[feature]] = value
    out = adjust_dependencies(x, feature)
    untouched = [j for j in range(9) if j not in touched_columns(feature)]
    np.testing.assert_array_equal(out[untouched], x[untouched])
    assert out[I[feature]] == x[I[feature]]
    assert dependency_residual(out, feature)[0] < 1e-6
