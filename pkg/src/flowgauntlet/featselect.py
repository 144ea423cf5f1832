"""Entropy / information-gain feature ranking and threshold sweeps."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import EmptyInput, LengthMismatch
from .models import RfParams, metrics, predict, train_random_forest

DEFAULT_BINS = 10
DEFAULT_THRESHOLD = 0.09


def _entropy_from_counts(counts):
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


def entropy(labels):
    """Shannon entropy of binary labels, in bits."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise EmptyInput("entropy of an empty label sequence")
    return _entropy_from_counts(np.bincount(labels, minlength=2))


def information_gain(feature, labels, bins=DEFAULT_BINS):
    """H(labels) minus the bin-weighted entropy after equal-width binning.

    Bins span ``[min, max]`` of ``feature``; the maximum value falls into
    the last bin. A constant feature occupies one bin and has zero gain.
    """
    x = np.asarray(feature, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.shape != y.shape:
        raise LengthMismatch(f"feature {x.shape} vs labels {y.shape}")
    if x.size == 0:
        raise EmptyInput("information gain of an empty feature")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    table = kernels.bin_contingency(np.ascontiguousarray(x), np.ascontiguousarray(y), int(bins))
    n = float(x.size)
    conditional = sum(row.sum() / n * _entropy_from_counts(row) for row in table if row.sum())
    gain = _entropy_from_counts(table.sum(axis=0)) - conditional
    return max(gain, 0.0)


@dataclass(frozen=True)
class IgReport:
    gains: dict
    bin_count: int = DEFAULT_BINS
    order: tuple = field(default=())

    def __post_init__(self):
        if not self.order:
            object.__setattr__(self, "order", tuple(self.gains))


def ig_report(ds, bins=DEFAULT_BINS):
    gains = {name: information_gain(ds.X[:, j], ds.y, bins) for j, name in enumerate(ds.features)}
    return IgReport(gains, bins, tuple(ds.features))


def average_reports(reports):
    """Per-feature mean IG across several datasets (same schema)."""
    reports = list(reports)
    names = reports[0].order
    gains = {n: float(np.mean([r.gains[n] for r in reports])) for n in names}
    return IgReport(gains, reports[0].bin_count, names)


def select_by_threshold(report, threshold):
    """Features with IG >= threshold, highest first; ties keep schema order."""
    rank = {name: i for i, name in enumerate(report.order)}
    keep = [n for n in report.order if report.gains[n] >= threshold]
    return sorted(keep, key=lambda n: (-report.gains[n], rank[n]))


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    f1: float
    features: tuple


def _default_trainer(train):
    return train_random_forest(train, RfParams())


def threshold_sweep(train, validation, thresholds, trainer=None, bins=DEFAULT_BINS):
    """F1 on ``validation`` after training on each threshold's feature subset.

    ``trainer`` maps a (restricted) training dataset to a fitted model and
    defaults to a random forest with default hyperparameters. Thresholds
    that select nothing yield ``SweepRow(t, 0.0, ())``.
    """
    thresholds = list(thresholds)
    if not thresholds:
        raise EmptyInput("no thresholds to sweep")
    trainer = trainer or _default_trainer
    report = ig_report(train, bins)
    rows = []
    for t in thresholds:
        chosen = select_by_threshold(report, t)
        if not chosen:
            rows.append(SweepRow(float(t), 0.0, ()))
            continue
        model = trainer(train.select(chosen))
        pred = predict(model, validation.select(chosen))
        rows.append(SweepRow(float(t), metrics(pred, validation.y).f1, tuple(chosen)))
    return rows


def write_sweep_csv(rows, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "f1", "features"])
        for r in rows:
            w.writerow([repr(r.threshold), repr(r.f1), ";".join(r.features)])
    return path
