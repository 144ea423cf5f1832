"""JSON run configuration: section validation and conversion to library objects.

Every key is checked against the fields it maps onto; an unknown or
ill-typed key raises :class:`ConfigError` naming its dotted path. Paths are
resolved against the directory holding the config file.
"""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .advcraft import CwConfig, GanConfig
from .errors import ConfigError
from .flowdata import SplitSpec
from .hyperopt import GaConfig, canonical_kind, params_for
from .models import MlpParams
from .pipeline import CampaignConfig, SyntheticSpec, TargetSpec

SECTIONS = ("data", "features", "model", "tuner", "attack", "conformal", "report", "seed")

DATA_KEYS = {"path", "synthetic", "split"}
FEATURE_KEYS = {"bins", "threshold", "thresholds", "selected"}
MODEL_KEYS = {"kind", "params", "path"}
TUNER_KEYS = {"kind", "budget", "population", "generations", "tournament", "mutation_prob",
              "particles", "iterations", "w", "c1", "c2", "seed"}
ATTACK_KEYS = {"kind", "features", "checkpoints", "cw", "gan", "surrogate",
               "surrogate_tuner", "targets", "transfer_on_successful", "max_samples",
               "iterations_override"}
CONFORMAL_KEYS = {"alpha", "alpha_lo", "alpha_hi", "n_points", "trials"}
REPORT_KEYS = {"campaign"}

TUNER_DEFAULTS = {
    "budget": 20, "population": 10, "generations": 5, "tournament": 3, "mutation_prob": 0.2,
    "particles": 10, "iterations": 5, "w": 0.9, "c1": 1.5, "c2": 2.0,
}


def _check_keys(section, doc, allowed):
    if not isinstance(doc, dict):
        raise ConfigError(section, f"{section} must be a JSON object")
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}", f"unknown configuration key: {section}.{key}")


def _build(cls, section, doc, exclude=()):
    """Instantiate dataclass ``cls`` from ``doc``, naming bad keys in errors."""
    names = {f.name for f in fields(cls)} - set(exclude)
    _check_keys(section, doc, names)
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, f"invalid {section}: {exc}") from None


@dataclass
class RunConfig:
    data: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    tuner: dict = None
    attack: dict = field(default_factory=dict)
    conformal: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    seed: int = None
    base_dir: Path = field(default_factory=Path)
    raw: dict = field(default_factory=dict)

    # -- data ------------------------------------------------------------
    def data_path(self):
        p = self.data.get("path")
        return None if p is None else self.resolve(p)

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def synthetic_spec(self):
        doc = dict(self.data.get("synthetic", {}))
        if "seed" not in doc and self.seed is not None:
            doc["seed"] = self.seed
        for cluster in ("benign", "malware"):
            if cluster in doc:
                doc[cluster] = {k: tuple(v) for k, v in doc[cluster].items()}
        return _build(SyntheticSpec, "data.synthetic", doc)

    def split_spec(self):
        doc = dict(self.data.get("split", {}))
        if "seed" not in doc and self.seed is not None:
            doc["seed"] = self.seed
        return _build(SplitSpec, "data.split", doc)

    # -- models ----------------------------------------------------------
    def model_kind(self):
        return self.model.get("kind", "random_forest")

    def model_params(self):
        kind = canonical_kind(self.model_kind())
        params = dict(self.model.get("params", {}))
        if self.seed is not None and kind != "decision_tree":
            params.setdefault("seed", self.seed)
        try:
            return params_for(kind, params)
        except (TypeError, ValueError) as exc:
            raise ConfigError("model.params", f"invalid model.params: {exc}") from None

    # -- tuner -----------------------------------------------------------
    def tuner_settings(self):
        if self.tuner is None:
            raise ConfigError("tuner", "missing configuration section: tuner")
        out = dict(TUNER_DEFAULTS)
        out.update(self.tuner)
        out.setdefault("kind", self.model_kind())
        out.setdefault("seed", self.seed if self.seed is not None else 0)
        return out

    def ga_config(self):
        t = self.tuner_settings()
        return GaConfig(t["population"], t["generations"], t["tournament"], t["mutation_prob"],
                        t["seed"])

    # -- attack ----------------------------------------------------------
    def campaign_config(self, attack_kind=None):
        a = self.attack
        kw = {}
        for key in ("features", "checkpoints", "transfer_on_successful", "max_samples",
                    "iterations_override"):
            if key in a:
                kw[key] = a[key]
        kw["attack"] = attack_kind or a.get("kind", "cw")
        if "cw" in a:
            kw["cw"] = _build(CwConfig, "attack.cw", a["cw"])
        if "gan" in a:
            kw["gan"] = _build(GanConfig, "attack.gan", a["gan"], exclude=("bounds",))
        if "surrogate" in a:
            kw["surrogate"] = _build(MlpParams, "attack.surrogate", a["surrogate"])
        elif self.seed is not None:
            kw["surrogate"] = MlpParams(seed=self.seed)
        if "surrogate_tuner" in a:
            kw["surrogate_tuner"] = _build(GaConfig, "attack.surrogate_tuner", a["surrogate_tuner"],
                                           exclude=("space",))
        if "targets" in a:
            targets = []
            for i, t in enumerate(a["targets"]):
                targets.append(_build(TargetSpec, f"attack.targets[{i}]", t))
            kw["targets"] = tuple(targets)
        if self.seed is not None:
            kw["seed"] = self.seed
        path = self.data_path()
        if path is not None:
            kw["data_path"] = str(path)
        else:
            kw["synthetic"] = self.synthetic_spec()
        kw["split"] = self.split_spec()
        try:
            return CampaignConfig(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError("attack", f"invalid attack: {exc}") from None

    # -- conformal -------------------------------------------------------
    def conformal_settings(self):
        out = {"alpha": 0.1, "alpha_lo": 0.001, "alpha_hi": 0.5, "n_points": 200, "trials": 20}
        out.update(self.conformal)
        return out


def parse_config(doc, base_dir="."):
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    for key in doc:
        if key not in SECTIONS:
            raise ConfigError(key, f"unknown configuration key: {key}")
    checks = {"data": DATA_KEYS, "features": FEATURE_KEYS, "model": MODEL_KEYS,
              "tuner": TUNER_KEYS, "attack": ATTACK_KEYS, "conformal": CONFORMAL_KEYS,
              "report": REPORT_KEYS}
    for section, allowed in checks.items():
        if section in doc:
            _check_keys(section, doc[section], allowed)
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError("seed", "seed must be a non-negative integer")
    return RunConfig(
        data=doc.get("data", {}), features=doc.get("features", {}), model=doc.get("model", {}),
        tuner=doc.get("tuner"), attack=doc.get("attack", {}), conformal=doc.get("conformal", {}),
        report=doc.get("report", {}), seed=seed, base_dir=Path(base_dir), raw=doc,
    )


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(str(path), f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"config file is not valid JSON: {exc}") from None
    return parse_config(doc, path.parent)
