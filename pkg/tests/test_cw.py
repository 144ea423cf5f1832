import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowgauntlet.advcraft import (
    CwConfig,
    cw_batch,
    cw_gradient,
    cw_loss,
    dependency_residual,
    feature_mask,
    generate_cw_adversary,
    generate_relative_noise,
    touched_columns,
)
from flowgauntlet.errors import WrongModelKind
from flowgauntlet.flowdata import FEATURES
from flowgauntlet.models import MlpModel, MlpParams, train_decision_tree, train_mlp

from conftest import identity_scaler, logistic_toy, two_clusters

TOY_CFG = CwConfig(c=50.0, learning_rate=0.01, iterations=2000)


def constant_model(p):
    """Surrogate returning P(malware) = p everywhere."""
    logit = np.log(p / (1 - p)) if 0 < p < 1 else (-60.0 if p == 0 else 60.0)
    return MlpModel.from_weights([np.zeros((9, 1))], [np.array([logit])])


def toy_batch(n=3):
    X = np.zeros((n, 9))
    X[:, 0] = 2.0
    return X


# -- noise -------------------------------------------------------------------

def test_noise_zero_cases():
    x = np.random.default_rng(0).normal(size=(5, 9))
    np.testing.assert_array_equal(generate_relative_noise(x, np.ones(9), 0.0, 1), 0.0)
    np.testing.assert_array_equal(generate_relative_noise(x, np.zeros(9), 0.1, 1), 0.0)


def test_noise_bounds():
    x = np.full((10_000, 9), 2.0)
    noise = generate_relative_noise(x, feature_mask("Dur"), 0.1, seed=3)
    col = noise[:, FEATURES.index("Dur")]
    assert col.min() >= -0.2 and col.max() <= 0.2
    assert col.min() < -0.19 and col.max() > 0.19
    assert np.count_nonzero(np.delete(noise, FEATURES.index("Dur"), axis=1)) == 0


# -- loss --------------------------------------------------------------------

def test_loss_examples():
    x = np.ones(9)
    assert cw_loss(x, x, constant_model(0.0), 0, c=1.0, kappa=0.0) == 0.0
    assert cw_loss(x, x, constant_model(0.9), 0, c=1.0, kappa=0.0) == pytest.approx(0.8)
    x2 = x.copy()
    x2[0] += 2.0
    assert cw_loss(x, x2, constant_model(0.0), 0, c=123.0, kappa=0.0) == pytest.approx(4.0)


def test_loss_target_malware_flips_sign():
    x = np.ones(9)
    assert cw_loss(x, x, constant_model(0.1), 1, c=1.0, kappa=0.0) == pytest.approx(0.8)


def test_loss_rejects_trees():
    ds = two_clusters(20, d=9)
    with pytest.raises(WrongModelKind):
        cw_loss(ds.X[0], ds.X[0], train_decision_tree(ds), 0, 1.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(p=st.floats(0.001, 0.999), kappa=st.floats(0, 1), c=st.floats(0.01, 100),
       target=st.integers(0, 1))
def test_kappa_floor(p, kappa, c, target):
    x = np.zeros(9)
    assert cw_loss(x, x, constant_model(p), target, c, kappa) >= -c * kappa - 1e-12


def test_gradient_matches_finite_difference():
    ds = two_clusters(50, d=9)
    m = train_mlp(ds, MlpParams(activation="tanh", epochs=0, seed=2))
    rng = np.random.default_rng(1)
    x = rng.normal(size=9)
    xp = x + rng.normal(scale=0.3, size=9)
    g = cw_gradient(x, xp, m, 0, 5.0, 0.0)
    h = 1e-5
    fd = np.array([(cw_loss(x, xp + h * e, m, 0, 5.0, 0.0) - cw_loss(x, xp - h * e, m, 0, 5.0, 0.0))
                   / (2 * h) for e in np.eye(9)])
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


# -- single-run attack -------------------------------------------------------

def test_zero_iterations_is_noise_only():
    x = np.random.default_rng(0).normal(size=(4, 9))
    mask = feature_mask("Dur")
    cfg = CwConfig(iterations=0)
    got = generate_cw_adversary(logistic_toy(), x, 0, mask, cfg, seed=7)
    np.testing.assert_array_equal(got, x + generate_relative_noise(x, mask, 0.1, seed=7))


def test_zero_mask_is_identity():
    x = np.random.default_rng(0).normal(size=(4, 9))
    got = generate_cw_adversary(logistic_toy(), x, 0, np.zeros(9), CwConfig(iterations=50), seed=1)
    np.testing.assert_array_equal(got, x)


def test_toy_attack_flips():
    model = logistic_toy(3.0, column=0)
    x = toy_batch()
    adv = generate_cw_adversary(model, x, 0, feature_mask("SrcWin"), TOY_CFG, seed=0)
    assert np.all(adv[:, 0] < 0)
    assert np.all(model.predict_array(adv) == 0)
    np.testing.assert_array_equal(adv[:, 1:], x[:, 1:])


def test_checkpoint_snapshots_match_separate_runs():
    model = logistic_toy()
    x = toy_batch()
    mask = feature_mask("SrcWin")
    snaps = generate_cw_adversary(model, x, 0, mask, TOY_CFG, seed=4, checkpoints=[5, 100])
    for k in (5, 100):
        alone = generate_cw_adversary(model, x, 0, mask, TOY_CFG.replace(iterations=k), seed=4)
        np.testing.assert_array_equal(snaps[k], alone)


def test_inner_clip():
    cfg = TOY_CFG.replace(clip_min=1.0, clip_max=3.0)
    adv = generate_cw_adversary(logistic_toy(), toy_batch(), 0, feature_mask("SrcWin"), cfg, seed=0)
    assert np.all((adv[:, 0] >= 1.0) & (adv[:, 0] <= 3.0))


def test_config_validation():
    with pytest.raises(ValueError):
        CwConfig(c=0)
    with pytest.raises(ValueError):
        CwConfig(clip_min=2.0, clip_max=1.0)


# -- batch pipeline ----------------------------------------------------------

def test_toy_batch_flips_at_2000():
    scaler = identity_scaler()
    bounds = (np.full(9, -10.0), np.full(9, 10.0))
    res = cw_batch(logistic_toy(), scaler, toy_batch(), 0, "SrcWin", bounds, seed=0, cfg=TOY_CFG,
                   checkpoints=[5, 2000])
    assert np.sum(logistic_toy().predict_array(res[2000].perturbed) == 0) >= 2
    assert res[2000].surrogate_misclassification_rate >= 2 / 3


def test_batch_bounds_narrow_with_config():
    scaler = identity_scaler()
    bounds = (np.full(9, -10.0), np.full(9, 10.0))
    cfg = TOY_CFG.replace(clip_min=0.5)
    adv = cw_batch(logistic_toy(), scaler, toy_batch(), 0, "SrcWin", bounds, cfg=cfg)
    assert np.all(adv[:, 0] >= 0.5)


def test_batch_chunks_are_seeded_per_chunk():
    scaler = identity_scaler()
    bounds = (np.full(9, -10.0), np.full(9, 10.0))
    x = np.tile(toy_batch(1), (7, 1))
    cfg = TOY_CFG.replace(iterations=3, batch_size=3)
    a = cw_batch(logistic_toy(), scaler, x, 0, "SrcWin", bounds, seed=[1, 2], cfg=cfg)
    b = cw_batch(logistic_toy(), scaler, x, 0, "SrcWin", bounds, seed=[1, 2], cfg=cfg)
    assert a.tobytes() == b.tobytes() and a.shape == x.shape
    assert len(np.unique(a[:, 0])) == 7


@pytest.mark.parametrize("feature", ["Dur", "SrcBytes", "DstBytes", "TotBytes", "Rate", "sHops",
                                     "sTtl", "SrcWin"])
def test_batch_locality_bounds_residual(prepared, feature):
    scaler, train, _, test, train_o = prepared
    sur = train_mlp(train, MlpParams(epochs=10, seed=0))
    X = test.X[test.y == 1][:40]
    bounds = (train_o.X.min(axis=0), train_o.X.max(axis=0))
    cfg = CwConfig(c=50.0, learning_rate=0.01, iterations=50)
    adv = cw_batch(sur, scaler, X, 0, feature, bounds, seed=0, cfg=cfg)
    keep = [j for j in range(9) if j not in touched_columns(feature)]
    np.testing.assert_array_equal(adv[:, keep], X[:, keep])
    j = FEATURES.index(feature)
    orig = scaler.inverse_array(adv)
    assert np.all(orig[:, j] >= bounds[0][j] * (1 - 1e-12) - 1e-9)
    assert np.all(orig[:, j] <= bounds[1][j] * (1 + 1e-12) + 1e-9)
    assert dependency_residual(orig, feature).max() < 1e-6
