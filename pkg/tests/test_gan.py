import numpy as np
import pytest

from flowgauntlet.advcraft import (
    GanConfig,
    composite,
    dependency_residual,
    feature_mask,
    gan_generate_adversaries,
    touched_columns,
    train_evasion_gan,
)
from flowgauntlet.errors import LengthMismatch, WrongModelKind
from flowgauntlet.flowdata import FEATURES
from flowgauntlet.models import MlpParams, train_decision_tree, train_mlp

from conftest import two_clusters

SMALL = GanConfig(latent_dim=8, gen_hidden=16, disc_hidden=16, epochs=5, batch_size=32,
                  learning_rate=1e-3)


@pytest.fixture(scope="module")
def toy():
    ds = two_clusters(200, d=9, gap=3.0, seed=0)
    sub = train_mlp(ds, MlpParams(epochs=20, learning_rate=1e-2, seed=0))
    return ds.X[ds.y == 0], ds.X[ds.y == 1], sub


@pytest.fixture(scope="module")
def flow_setup(prepared):
    scaler, train, _, test, train_o = prepared
    sub = train_mlp(train, MlpParams(epochs=10, seed=0))
    bounds = (train_o.X.min(axis=0), train_o.X.max(axis=0))
    lo, hi = (scaler.transform_array(b[None, :])[0] for b in bounds)
    return scaler, train, test, sub, bounds, (lo, hi)


def test_composite_rule():
    rng = np.random.default_rng(0)
    base, gen = rng.normal(size=(20, 9)), rng.normal(scale=5, size=(20, 9))
    mask = feature_mask("Dur")
    lo, hi = np.full(9, -1.0), np.full(9, 1.0)
    out = composite(base, gen, mask, lo, hi)
    j = FEATURES.index("Dur")
    np.testing.assert_array_equal(np.delete(out, j, axis=1), np.delete(base, j, axis=1))
    np.testing.assert_array_equal(out[:, j], np.clip(gen[:, j], -1, 1))


def test_history_decreases_on_toy(toy):
    benign, malware, sub = toy
    cfg = GanConfig(latent_dim=16, gen_hidden=32, disc_hidden=32, epochs=200, batch_size=64,
                    learning_rate=1e-3)
    mask = np.zeros(9)
    mask[:3] = 1
    gen, _ = train_evasion_gan(benign, malware, sub, mask, cfg, seed=0)
    assert len(gen.history) == 200
    assert gen.history[-1] < gen.history[0]


def test_training_is_deterministic(toy):
    benign, malware, sub = toy
    mask = feature_mask("Dur")
    a, _ = train_evasion_gan(benign, malware, sub, mask, SMALL, seed=3, snapshot_epochs=(2,))
    b, _ = train_evasion_gan(benign, malware, sub, mask, SMALL, seed=3, snapshot_epochs=(2,))
    z = np.random.default_rng(0).standard_normal((5, 8))
    np.testing.assert_array_equal(a(z), b(z))
    np.testing.assert_array_equal(a.snapshots[2](z), b.snapshots[2](z))
    assert a.history == b.history


def test_critic_weights_clamped(toy):
    benign, malware, sub = toy
    _, disc = train_evasion_gan(benign, malware, sub, feature_mask("Dur"), SMALL, seed=0)
    assert max(np.abs(p).max() for p in disc.params) <= SMALL.weight_clamp


def test_generator_output_within_bounds(toy):
    benign, malware, sub = toy
    lo, hi = np.full(9, -2.0), np.full(9, 2.0)
    cfg = GanConfig(latent_dim=8, gen_hidden=16, disc_hidden=16, epochs=2, bounds=(lo, hi))
    gen, _ = train_evasion_gan(benign, malware, sub, feature_mask("Dur"), cfg, seed=0)
    out = gen(np.random.default_rng(0).standard_normal((100, 8)))
    assert np.all((out >= lo) & (out <= hi))


def test_gan_input_checks(toy):
    benign, malware, sub = toy
    with pytest.raises(WrongModelKind):
        train_evasion_gan(benign, malware, train_decision_tree(two_clusters(20, d=9)),
                          feature_mask("Dur"), SMALL)
    with pytest.raises(LengthMismatch):
        train_evasion_gan(benign, malware[:, :5], sub, feature_mask("Dur"), SMALL)


def test_generate_zero_mask_returns_base(flow_setup):
    scaler, train, test, sub, bounds, std_bounds = flow_setup
    base = test.X[test.y == 1][:30]
    gen, _ = train_evasion_gan(train.X[train.y == 0], base, sub, feature_mask("Dur"),
                               SMALL, seed=0)
    np.testing.assert_array_equal(
        gan_generate_adversaries(gen, base, np.zeros(9), bounds, 0, scaler), base)


@pytest.mark.parametrize("features", [("Dur",), ("Rate",), ("SrcBytes",), ("sHops",),
                                      ("Dur", "SrcWin")])
def test_generate_repair_bounds_determinism(flow_setup, features):
    scaler, train, test, sub, bounds, std_bounds = flow_setup
    base = test.X[test.y == 1][:50]
    mask = sum(feature_mask(f) for f in features)
    cfg = GanConfig(**{**SMALL.__dict__, "bounds": std_bounds})
    gen, _ = train_evasion_gan(train.X[train.y == 0], base, sub, mask, cfg, seed=1)
    a = gan_generate_adversaries(gen, base, mask, bounds, 9, scaler)
    b = gan_generate_adversaries(gen, base, mask, bounds, 9, scaler)
    assert a.tobytes() == b.tobytes()
    touched = set().union(*(touched_columns(f) for f in features))
    keep = [j for j in range(9) if j not in touched]
    np.testing.assert_array_equal(a[:, keep], base[:, keep])
    orig = scaler.inverse_array(a)
    for f in features:
        j = FEATURES.index(f)
        assert np.all(orig[:, j] >= bounds[0][j] - 1e-9 * max(1, abs(bounds[0][j])))
        assert np.all(orig[:, j] <= bounds[1][j] + 1e-9 * max(1, abs(bounds[1][j])))
        assert not np.array_equal(a[:, j], base[:, j])
    assert dependency_residual(orig, features[0]).max() < 1e-6
