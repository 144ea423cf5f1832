"""Checkpointed per-feature attack campaigns with transfer to target models."""

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..advcraft import (
    AdversarialBatch,
    CwConfig,
    GanConfig,
    cw_batch,
    feature_mask,
    gan_generate_adversaries,
    train_evasion_gan,
    write_adversarial_csv,
)
from ..advcraft.cw import mean_l2, surrogate_misclassification
from ..errors import UnknownFeature
from ..flowdata import (
    SplitSpec,
    feature_bounds,
    fit_scaler,
    load_flow_csv,
    split,
    transform,
)
from ..hyperopt import MLP_SPACE, GaConfig, canonical_kind, classifier_fitness_fn, params_for
from ..models import MlpParams, train_model, train_mlp
from .synth import SyntheticSpec, generate_synthetic_flows

log = logging.getLogger(__name__)

ATTACKS = ("cw", "gan")


@dataclass(frozen=True)
class TargetSpec:
    """A model the crafted samples are transferred to."""

    name: str
    kind: str = "random_forest"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CampaignConfig:
    """Everything a campaign needs; ``data_path`` of ``None`` means synthetic data.

    ``iterations_override`` replaces the optimization length of every
    checkpoint (labels are kept), e.g. ``0`` for noise-only batches.
    ``max_samples`` caps the malware pool (first rows, in test order).
    With ``surrogate_tuner`` set, the surrogate's architecture is chosen by
    GA on the validation split, starting from ``surrogate`` for the
    untouched fields.
    """

    features: tuple = ("Dur", "SrcBytes")
    checkpoints: tuple = (5, 100, 750, 1000, 2000)
    attack: str = "cw"
    surrogate: MlpParams = MlpParams()
    surrogate_tuner: GaConfig = None
    targets: tuple = (TargetSpec("random_forest"),)
    seed: int = 0
    data_path: str = None
    synthetic: SyntheticSpec = SyntheticSpec()
    split: SplitSpec = SplitSpec()
    cw: CwConfig = CwConfig()
    gan: GanConfig = GanConfig()
    transfer_on_successful: bool = True
    max_samples: int = None
    iterations_override: int = None

    def __post_init__(self):
        cps = tuple(int(c) for c in self.checkpoints)
        if not cps or any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 0:
            raise ValueError("checkpoints must be non-negative and strictly increasing")
        object.__setattr__(self, "checkpoints", cps)
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.attack not in ATTACKS:
            raise ValueError(f"attack must be one of {ATTACKS}")
        if not self.features:
            raise ValueError("no features to attack")
        names = [t.name for t in self.targets]
        if len(set(names)) != len(names):
            raise ValueError("target names must be unique")


@dataclass(frozen=True, eq=False)
class CampaignInputs:
    """Prepared data and models; all matrices standardized."""

    scaler: object
    train: object
    validation: object
    test: object
    bounds: tuple  # original-scale train (min, max)
    surrogate: object
    targets: dict
    pool: np.ndarray  # surrogate-detected malware from the test split


@dataclass(frozen=True)
class CampaignRow:
    feature: str
    checkpoint: int
    mean_l2: float
    surrogate_misclass: float
    target_misclass: dict
    n: int
    n_transfer: int = 0
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass(eq=False)
class CampaignReport:
    rows: list
    attack: str = "cw"
    transfer_subset: str = "successful"
    baseline: dict = field(default_factory=dict)
    target_names: tuple = ()
    batches: list = field(default_factory=list, repr=False)
    batch_files: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)


def prepare_inputs(cfg):
    """Load or synthesize flows, split, scale, and fit surrogate and targets."""
    ds = load_flow_csv(cfg.data_path) if cfg.data_path else generate_synthetic_flows(cfg.synthetic)
    parts = split(ds, cfg.split)
    scaler = fit_scaler(parts.train)
    train = transform(scaler, parts.train)
    test = transform(scaler, parts.test)
    validation = transform(scaler, parts.validation)
    surrogate_params = cfg.surrogate
    if cfg.surrogate_tuner is not None:
        space = cfg.surrogate_tuner.space or MLP_SPACE
        base = asdict(cfg.surrogate)
        fitness = classifier_fitness_fn(train, validation, "mlp", space, base, cfg.seed)
        best = cfg.surrogate_tuner.run(space, fitness).best
        surrogate_params = params_for("mlp", best.as_dict(space), base)
    surrogate = train_mlp(train, surrogate_params)
    targets = {}
    for i, t in enumerate(cfg.targets):
        kind = canonical_kind(t.kind)
        params = params_for(kind, t.params)
        targets[t.name] = train_model(kind, train, params, seed=cfg.seed + i)
    detected = surrogate.predict_array(test.X) == 1
    pool = test.X[(test.y == 1) & detected]
    if cfg.max_samples is not None:
        pool = pool[: cfg.max_samples]
    return CampaignInputs(scaler, train, validation, test, feature_bounds(parts.train), surrogate,
                          targets, pool)


def _rate_benign(model, X):
    if len(X) == 0:
        return None
    return float(np.mean(model.predict_array(X) == 0))


def _evaluate(batch, inputs, on_successful):
    adv = batch.perturbed
    fooled = inputs.surrogate.predict_array(adv) == 0 if len(adv) else np.zeros(0, bool)
    subset = adv[fooled] if on_successful else adv
    rates = {name: _rate_benign(m, subset) for name, m in inputs.targets.items()}
    return CampaignRow(batch.feature, batch.checkpoint, batch.mean_l2_original_scale,
                       batch.surrogate_misclassification_rate, rates, len(adv), len(subset))


def _cw_batches(cfg, inputs, feature, j):
    steps = cfg.checkpoints if cfg.iterations_override is None else (cfg.iterations_override,)
    res = cw_batch(inputs.surrogate, inputs.scaler, inputs.pool, 0, feature, inputs.bounds,
                   seed=[cfg.seed, j], cfg=cfg.cw, checkpoints=steps)
    if cfg.iterations_override is None:
        return [res[k] for k in cfg.checkpoints]
    only = res[cfg.iterations_override]
    return [AdversarialBatch(only.originals, only.perturbed, feature, k,
                             only.mean_l2_original_scale,
                             only.surrogate_misclassification_rate, "cw")
            for k in cfg.checkpoints]


def _gan_batches(cfg, inputs, feature, j):
    scaler, pool = inputs.scaler, inputs.pool
    mask = feature_mask(feature, scaler.features)
    lo, hi = (scaler.transform_array(np.atleast_2d(b))[0] for b in inputs.bounds)
    if cfg.iterations_override is not None:
        wanted = (cfg.iterations_override,)
    else:
        wanted = cfg.checkpoints
    gcfg = replace(cfg.gan, bounds=(lo, hi), epochs=max(wanted))
    benign = inputs.train.X[inputs.train.y == 0]
    gen, _ = train_evasion_gan(benign, pool, inputs.surrogate, mask, gcfg, seed=[cfg.seed, j],
                               snapshot_epochs=wanted)
    out = []
    for k in cfg.checkpoints:
        e = k if cfg.iterations_override is None else cfg.iterations_override
        adv = gan_generate_adversaries(gen.snapshots[e], pool, mask, inputs.bounds,
                                       [cfg.seed, j, e], scaler)
        l2 = mean_l2(scaler.inverse_array(pool), scaler.inverse_array(adv))
        out.append(AdversarialBatch(pool, adv, feature, k, l2,
                                    surrogate_misclassification(inputs.surrogate, adv), "gan"))
    return out


def run_attack_campaign(cfg, inputs=None, batch_dir=None):
    """Attack every configured feature and score each checkpoint.

    A failure while attacking one feature marks that feature's cells as
    failed and the campaign continues. With ``batch_dir`` each feature's
    batches are written to ``<batch_dir>/adv_<attack>_<feature>.csv``.
    """
    inputs = inputs or prepare_inputs(cfg)
    features = tuple(inputs.scaler.features)
    names = tuple(inputs.targets)
    report = CampaignReport(
        rows=[], attack=cfg.attack,
        transfer_subset="successful" if cfg.transfer_on_successful else "all",
        baseline={"surrogate": surrogate_misclassification(inputs.surrogate, inputs.pool),
                  **{n: _rate_benign(m, inputs.pool) for n, m in inputs.targets.items()}},
        target_names=names,
    )
    craft = _cw_batches if cfg.attack == "cw" else _gan_batches
    for j, feature in enumerate(cfg.features):
        try:
            if feature not in features:
                raise UnknownFeature(feature)
            batches = craft(cfg, inputs, feature, j)
        except Exception as exc:  # noqa: BLE001 - one bad feature must not sink the run
            log.error("attack on %s failed: %s", feature, exc)
            for k in cfg.checkpoints:
                report.rows.append(CampaignRow(feature, k, None, None, dict.fromkeys(names), 0,
                                               0, f"{type(exc).__name__}: {exc}"))
            continue
        for b in batches:
            report.rows.append(_evaluate(b, inputs, cfg.transfer_on_successful))
        report.batches.extend(batches)
        if batch_dir is not None:
            report.batch_files.append(write_adversarial_csv(
                batches, inputs.scaler, Path(batch_dir) / f"adv_{cfg.attack}_{feature}.csv"))
    return report
