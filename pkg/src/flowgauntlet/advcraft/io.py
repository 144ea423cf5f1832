"""Persisting crafted batches and the attack manifest."""

import json
from pathlib import Path

import numpy as np

from .._jsonable import plain
from ..flowdata import Dataset, Scale, write_flow_csv


def write_adversarial_csv(batches, scaler, path):
    """Write batches in original units, labelled malware, with provenance columns.

    Columns are the flow schema plus ``checkpoint,attacked_feature,origin``.
    """
    batches = list(batches)
    if batches:
        X = np.vstack([scaler.inverse_array(b.perturbed) for b in batches])
    else:
        X = np.empty((0, len(scaler.features)))
    extra = {"checkpoint": [], "attacked_feature": [], "origin": []}
    for b in batches:
        n = len(b.perturbed)
        extra["checkpoint"] += [b.checkpoint] * n
        extra["attacked_feature"] += [b.feature] * n
        extra["origin"] += [b.origin] * n
    ds = Dataset(X, np.ones(len(X), dtype=np.int64), Scale.ORIGINAL, tuple(scaler.features))
    return write_flow_csv(ds, path, extra)


def write_attack_manifest(path, config, seeds, **extra):
    """JSON record of the full attack configuration and the seeds used."""
    doc = {"config": plain(config), "seeds": plain(seeds)}
    doc.update(plain(extra))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
