"""Feature-masked Carlini-Wagner style attack on an MLP surrogate."""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import WrongModelKind
from ..models import MlpModel, Objective, input_gradient
from ..models.nn import sigmoid
from .constraints import EPSILON, INITIAL_TTL, adjust_dependencies, feature_mask, touched_columns


@dataclass(frozen=True)
class CwConfig:
    """Attack settings.

    ``clip_min``/``clip_max`` are original-scale bounds for the attacked
    feature. :func:`cw_batch` intersects them with the train-set range and
    converts them to standardized units; :func:`generate_cw_adversary` on
    its own applies them as given, in the units of its input. ``None``
    means unbounded on that side.
    """

    c: float = 0.01
    kappa: float = 0.0
    learning_rate: float = 1e-4
    iterations: int = 2000
    noise_magnitude: float = 0.1
    clip_min: object = None
    clip_max: object = None
    batch_size: int = 10_000

    def __post_init__(self):
        if self.c <= 0 or self.kappa < 0 or self.learning_rate <= 0:
            raise ValueError("c > 0, kappa >= 0 and learning_rate > 0 required")
        if self.noise_magnitude < 0 or self.iterations < 0 or self.batch_size < 1:
            raise ValueError("noise_magnitude >= 0, iterations >= 0, batch_size >= 1 required")
        if self.clip_min is not None and self.clip_max is not None:
            if np.any(np.asarray(self.clip_min) > np.asarray(self.clip_max)):
                raise ValueError("clip_min must not exceed clip_max")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class AdversarialBatch:
    originals: np.ndarray  # standardized
    perturbed: np.ndarray  # standardized, after clipping and repair
    feature: str
    checkpoint: int
    mean_l2_original_scale: float
    surrogate_misclassification_rate: float
    origin: str = "cw"


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_relative_noise(x, mask, magnitude, seed=None):
    """``u * x * magnitude`` with ``u ~ U[-1, 1]``, zeroed outside ``mask``."""
    x = np.asarray(x, dtype=np.float64)
    u = _rng(seed).uniform(-1.0, 1.0, size=x.shape)
    return u * x * magnitude * np.asarray(mask, dtype=np.float64)


def _margin_probs(p, target_class):
    # (Z_target, Z_other) on the probability pair, as in the loss definition
    if target_class == 0:
        return 1.0 - p, p
    return p, 1.0 - p


def cw_loss(x, x_prime, model, target_class, c, kappa):
    """Squared L2 distance plus ``c * max(Z_other - Z_target, -kappa)``.

    Vectors give a scalar; matrices give one loss per row.
    """
    if not isinstance(model, MlpModel):
        raise WrongModelKind(f"C&W needs an MLP surrogate, got {model.kind}")
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    single = x_prime.ndim == 1
    p = model.predict_proba_array(np.atleast_2d(x_prime))
    z_target, z_other = _margin_probs(p, target_class)
    f = np.maximum(z_other - z_target, -kappa)
    dist = np.sum((np.atleast_2d(x_prime) - np.atleast_2d(x)) ** 2, axis=1)
    loss = dist + c * f
    return float(loss[0]) if single else loss


def cw_gradient(x, x_prime, model, target_class, c, kappa):
    """Gradient of :func:`cw_loss` with respect to ``x_prime`` (row-wise)."""
    g = input_gradient(model, x_prime, Objective.CW_F, target_class=target_class, kappa=kappa)
    return 2.0 * (np.asarray(x_prime) - np.asarray(x)) + c * g


def _clip_masked(xp, mask_bool, lo, hi):
    if lo is None and hi is None:
        return xp
    clipped = np.clip(xp, -np.inf if lo is None else lo, np.inf if hi is None else hi)
    return np.where(mask_bool, clipped, xp)


def generate_cw_adversary(model, x, target_class, mask, cfg, seed=None, checkpoints=None):
    """Masked gradient descent on the C&W loss from a noisy start.

    Returns the final ``x'``; with ``checkpoints`` (iteration counts) returns
    a dict of snapshots instead, taken after that many updates.
    """
    if not isinstance(model, MlpModel):
        raise WrongModelKind(f"C&W needs an MLP surrogate, got {model.kind}")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    mask = np.asarray(mask, dtype=np.float64)
    mask_bool = np.broadcast_to(mask > 0, x.shape)
    xp = x + generate_relative_noise(x, mask, cfg.noise_magnitude, seed)
    wanted = set() if checkpoints is None else {int(k) for k in checkpoints}
    n_iter = max(wanted) if wanted else cfg.iterations
    snaps = {}
    if 0 in wanted:
        snaps[0] = xp.copy()
    if not mask.any():
        return {k: x.copy() for k in wanted} if checkpoints is not None else x.copy()
    for it in range(1, n_iter + 1):
        grad = cw_gradient(x, xp, model, target_class, cfg.c, cfg.kappa) * mask
        xp = xp - cfg.learning_rate * grad
        xp = _clip_masked(xp, mask_bool, cfg.clip_min, cfg.clip_max)
        if it in wanted:
            snaps[it] = xp.copy()
    if checkpoints is not None:
        return snaps
    return xp


def finalize_batch(scaler, originals, perturbed, feature, bounds, initial_ttl=INITIAL_TTL,
                   epsilon=EPSILON):
    """Shared tail of every attack: clip, repair in original units, re-standardize.

    Only the attacked column and its dependents are rewritten; every other
    column of the result is the corresponding column of ``originals``.
    Returns ``(standardized_result, original_scale_result, original_scale_input)``.
    """
    features = tuple(scaler.features)
    j = features.index(feature)
    orig_o = scaler.inverse_array(originals)
    pert_o = orig_o.copy()
    pert_o[:, j] = scaler.inverse_column(perturbed[:, j], feature)
    lo, hi = bounds
    pert_o[:, j] = np.clip(pert_o[:, j], lo[j], hi[j])
    pert_o = adjust_dependencies(pert_o, feature, initial_ttl, epsilon, features)
    out = np.array(originals, dtype=np.float64, copy=True)
    for col in touched_columns(feature, features):
        out[:, col] = scaler.transform_column(pert_o[:, col], features[col])
    return out, pert_o, orig_o


def standardized_bounds(scaler, bounds, feature):
    j = scaler.features.index(feature)
    lo, hi = bounds
    return (float(scaler.transform_column(lo[j], feature)),
            float(scaler.transform_column(hi[j], feature)))


def _narrow(bounds, j, clip_min, clip_max):
    lo, hi = (np.array(b, dtype=np.float64, copy=True) for b in bounds)
    if clip_min is not None:
        lo[j] = max(lo[j], float(clip_min))
    if clip_max is not None:
        hi[j] = min(hi[j], float(clip_max))
    if lo[j] > hi[j]:
        raise ValueError("configured clip range does not overlap the train-set range")
    return lo, hi


def mean_l2(a, b):
    return float(np.mean(np.linalg.norm(a - b, axis=1))) if len(a) else 0.0


def surrogate_misclassification(model, X_std):
    if len(X_std) == 0:
        return 0.0
    return float(np.mean(sigmoid(model.logits(X_std)) < 0.5))


def cw_batch(model, scaler, samples, target_class, feature, bounds, iterations=None, c=None,
             seed=0, cfg=None, checkpoints=None, initial_ttl=INITIAL_TTL, epsilon=EPSILON):
    """Craft C&W adversaries for one feature on standardized ``samples``.

    ``bounds`` is the original-scale train-set ``(min, max)`` per column.
    Rows are processed in chunks of ``cfg.batch_size``; chunk ``k`` draws its
    noise from ``(*seed, k)``, where ``seed`` is an int or a sequence of
    ints. Returns a standardized matrix, or a dict of
    :class:`AdversarialBatch` keyed by checkpoint when ``checkpoints`` is
    given.
    """
    cfg = cfg or CwConfig()
    if iterations is not None:
        cfg = cfg.replace(iterations=iterations)
    if c is not None:
        cfg = cfg.replace(c=c)
    bounds = _narrow(bounds, scaler.features.index(feature), cfg.clip_min, cfg.clip_max)
    lo_s, hi_s = standardized_bounds(scaler, bounds, feature)
    cfg = cfg.replace(clip_min=lo_s, clip_max=hi_s)
    mask = feature_mask(feature, scaler.features)
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    wanted = sorted({int(k) for k in checkpoints}) if checkpoints is not None else [cfg.iterations]

    pieces = {k: [] for k in wanted}
    for b, start in enumerate(range(0, len(samples), cfg.batch_size)):
        chunk = samples[start:start + cfg.batch_size]
        rng = np.random.default_rng([*np.ravel(seed).astype(int).tolist(), b])
        snaps = generate_cw_adversary(model, chunk, target_class, mask, cfg, seed=rng,
                                      checkpoints=wanted)
        for k in wanted:
            pieces[k].append(snaps[k])

    results = {}
    for k in wanted:
        raw = np.vstack(pieces[k]) if pieces[k] else np.empty((0, samples.shape[1]))
        out, pert_o, orig_o = finalize_batch(scaler, samples, raw, feature, bounds,
                                             initial_ttl, epsilon)
        results[k] = AdversarialBatch(
            originals=samples,
            perturbed=out,
            feature=feature,
            checkpoint=k,
            mean_l2_original_scale=mean_l2(orig_o, pert_o),
            surrogate_misclassification_rate=surrogate_misclassification(model, out),
            origin="cw",
        )
    if checkpoints is not None:
        return results
    return results[cfg.iterations].perturbed
