"""WGAN-style evasion: a generator proposes values for the masked feature(s).

The critic compares composited samples against real benign flows; the
substitute detector's malware probability is added to the generator loss
so generated values drift toward what the detector calls benign.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import LengthMismatch, WrongModelKind
from ..models import MlpModel
from ..models.nn import Adam, DenseNet, sigmoid
from .constraints import EPSILON, INITIAL_TTL
from .cw import finalize_batch


@dataclass(frozen=True)
class GanConfig:
    """GAN settings.

    ``bounds`` is an optional ``(lo, hi)`` pair of per-column vectors in the
    units of the training matrices (standardized); by default the column
    ranges of the supplied real and base samples are used. The generator's
    tanh output is rescaled onto these bounds.
    """

    latent_dim: int = 100
    gen_hidden: int = 128
    disc_hidden: int = 128
    disc_iters: int = 5
    gen_iters: int = 1
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-4
    weight_clamp: float = 0.01
    bounds: tuple = None

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if min(self.gen_hidden, self.disc_hidden, self.disc_iters, self.batch_size) < 1:
            raise ValueError("hidden sizes, disc_iters and batch_size must be >= 1")
        if self.gen_iters < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("gen_iters >= 1, epochs >= 0 and learning_rate > 0 required")
        if self.weight_clamp is not None and self.weight_clamp <= 0:
            raise ValueError("weight_clamp must be positive or None")


class Generator:
    """Latent vector to a full-width sample, rescaled onto ``[lo, hi]``."""

    def __init__(self, net, lo, hi, latent_dim):
        self.net = net
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.latent_dim = latent_dim
        self.history = []  # mean substitute score of composited samples per epoch
        self.snapshots = {}

    @property
    def half_range(self):
        return (self.hi - self.lo) / 2.0

    @property
    def center(self):
        return (self.hi + self.lo) / 2.0

    def forward(self, z, keep=False):
        if keep:
            out, cache = self.net.forward(z, keep=True)
            return out * self.half_range + self.center, cache
        return self.net.forward(z) * self.half_range + self.center

    def __call__(self, z):
        return self.forward(z)

    def sample_latent(self, rng, n):
        return rng.standard_normal((n, self.latent_dim))

    def copy(self):
        g = Generator(self.net.copy(), self.lo, self.hi, self.latent_dim)
        g.history = list(self.history)
        return g


def composite(base, generated, mask, lo, hi):
    """Base rows with the masked columns replaced by clipped generated values."""
    m = np.asarray(mask, dtype=bool)
    out = np.array(base, dtype=np.float64, copy=True)
    out[:, m] = np.clip(generated[:, m], lo[m], hi[m])
    return out


def _clamp(net, c):
    if c is None:
        return
    for p in net.params:
        np.clip(p, -c, c, out=p)


def train_evasion_gan(benign_real, malware_base, substitute, mask, cfg=None, seed=0,
                      snapshot_epochs=()):
    """Train generator and critic; returns ``(generator, discriminator)``.

    Each epoch walks the shuffled benign rows in batches. Per batch the
    critic takes ``disc_iters`` steps on ``mean D(fake) - mean D(real)``
    (weights clamped after each), then the generator takes ``gen_iters``
    steps on ``-mean D(fake) + mean C(fake)``, where ``fake`` composites
    generated masked columns onto randomly drawn malware base rows.
    ``generator.history`` holds the mean substitute score per epoch and
    ``generator.snapshots`` copies taken after each epoch in
    ``snapshot_epochs``.
    """
    if not isinstance(substitute, MlpModel):
        raise WrongModelKind(f"the substitute detector must be an MLP, got {substitute.kind}")
    cfg = cfg or GanConfig()
    real = np.atleast_2d(np.asarray(benign_real, dtype=np.float64))
    base = np.atleast_2d(np.asarray(malware_base, dtype=np.float64))
    mask = np.asarray(mask, dtype=np.float64)
    d = real.shape[1]
    if base.shape[1] != d or mask.shape != (d,):
        raise LengthMismatch(f"widths differ: real {d}, base {base.shape[1]}, mask {mask.shape}")
    m_bool = mask > 0
    if cfg.bounds is None:
        both = np.vstack([real, base])
        lo, hi = both.min(axis=0), both.max(axis=0)
    else:
        lo, hi = (np.asarray(b, dtype=np.float64) for b in cfg.bounds)

    rng = np.random.default_rng(seed)
    gen = Generator(DenseNet.init([cfg.latent_dim, cfg.gen_hidden, d], ["relu", "tanh"], rng),
                    lo, hi, cfg.latent_dim)
    disc = DenseNet.init([d, cfg.disc_hidden, 1], ["relu", "identity"], rng)
    _clamp(disc, cfg.weight_clamp)
    opt_g = Adam(cfg.learning_rate)
    opt_d = Adam(cfg.learning_rate)
    snapshot_epochs = {int(e) for e in snapshot_epochs}
    if 0 in snapshot_epochs:
        gen.snapshots[0] = gen.copy()

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(real))
        scores = []
        for start in range(0, len(real), cfg.batch_size):
            x_real = real[order[start:start + cfg.batch_size]]
            b = len(x_real)
            rows = base[rng.integers(0, len(base), size=b)]
            fake = composite(rows, gen(gen.sample_latent(rng, b)), mask, lo, hi)

            for _ in range(cfg.disc_iters):
                out_f, cache_f = disc.forward(fake, keep=True)
                out_r, cache_r = disc.forward(x_real, keep=True)
                g_f, _ = disc.backward(cache_f, np.full_like(out_f, 1.0 / b))
                g_r, _ = disc.backward(cache_r, np.full_like(out_r, -1.0 / b))
                opt_d.step(disc.params, [a + c for a, c in zip(g_f, g_r)])
                _clamp(disc, cfg.weight_clamp)

            for _ in range(cfg.gen_iters):
                rows = base[rng.integers(0, len(base), size=b)]
                raw, cache_g = gen.forward(gen.sample_latent(rng, b), keep=True)
                fake = composite(rows, raw, mask, lo, hi)
                out_f, cache_f = disc.forward(fake, keep=True)
                _, dd = disc.backward(cache_f, np.ones_like(out_f), want_params=False)
                z, dz = substitute.logit_and_grad(fake)
                p = sigmoid(z)
                scores.append(p)
                d_fake = (-dd + (p * (1.0 - p))[:, None] * dz) / b
                inside = m_bool & (raw >= lo) & (raw <= hi)
                d_raw = np.where(inside, d_fake, 0.0) * gen.half_range
                g_g, _ = gen.net.backward(cache_g, d_raw)
                opt_g.step(gen.net.params, g_g)
        gen.history.append(float(np.mean(np.concatenate(scores))) if scores else float("nan"))
        if epoch in snapshot_epochs:
            gen.snapshots[epoch] = gen.copy()
    return gen, disc


def gan_generate_adversaries(generator, malware_base, mask, bounds, seed, scaler,
                             initial_ttl=INITIAL_TTL, epsilon=EPSILON):
    """Composite fresh generator output onto ``malware_base`` and repair it.

    ``bounds`` is the original-scale train-set ``(min, max)``. The same
    clip / dependency-repair / re-standardize tail as the C&W batch is
    applied once per masked feature. Returns a standardized matrix.
    """
    base = np.atleast_2d(np.asarray(malware_base, dtype=np.float64))
    mask = np.asarray(mask, dtype=np.float64)
    if not mask.any():
        return base.copy()
    rng = np.random.default_rng(seed)
    raw = generator(generator.sample_latent(rng, len(base)))
    lo, hi = (np.asarray(scaler.transform_array(np.atleast_2d(b)))[0] for b in bounds)
    proposed = composite(base, raw, mask, lo, hi)
    out = base
    for j in np.flatnonzero(mask):
        out, _, _ = finalize_batch(scaler, out, proposed, scaler.features[j], bounds,
                                   initial_ttl, epsilon)
    return out
