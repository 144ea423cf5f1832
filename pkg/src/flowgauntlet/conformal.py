"""Split-conformal accept/reject layer for binary flow classifiers."""

import csv
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import EmptyScores, LengthMismatch


def conformal_scores(probs_malware, labels):
    """``1 - p`` for malware rows, ``p`` for benign rows."""
    p = np.asarray(probs_malware, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape:
        raise LengthMismatch(f"probs {p.shape} vs labels {y.shape}")
    return np.where(y == 1, 1.0 - p, 1.0 - (1.0 - p))


def quantile_rank(n, alpha):
    """1-based rank ``ceil(L * n)`` with ``L = min(1, ceil((n+1)(1-alpha)) / n)``.

    Computed in exact rational arithmetic so float rounding of ``alpha``
    cannot shift the rank at integer boundaries.
    """
    a = Fraction(alpha)
    k = math.ceil((n + 1) * (1 - a))
    return max(1, min(n, k))


def quantile_threshold(scores, alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise EmptyScores("no calibration scores")
    k = quantile_rank(s.size, alpha)
    return float(np.partition(s, k - 1)[k - 1])


class PredictionSet(str, enum.Enum):
    EMPTY = "empty"
    BENIGN = "benign"
    MALWARE = "malware"
    BOTH = "both"

    @property
    def verdict(self):
        if self is PredictionSet.BENIGN:
            return Verdict.ACCEPT_BENIGN
        if self is PredictionSet.MALWARE:
            return Verdict.ACCEPT_MALWARE
        return Verdict.REJECT

    @property
    def labels(self):
        return {PredictionSet.EMPTY: (), PredictionSet.BENIGN: (0,),
                PredictionSet.MALWARE: (1,), PredictionSet.BOTH: (0, 1)}[self]


class Verdict(str, enum.Enum):
    ACCEPT_BENIGN = "accept_benign"
    ACCEPT_MALWARE = "accept_malware"
    REJECT = "reject"

    @property
    def accepted(self):
        return self is not Verdict.REJECT


def prediction_set(p_malware, q_hat):
    """Labels whose predicted probability is at least ``1 - q_hat``."""
    cut = 1.0 - q_hat
    mal = p_malware >= cut
    ben = (1.0 - p_malware) >= cut
    if mal and ben:
        return PredictionSet.BOTH
    if mal:
        return PredictionSet.MALWARE
    if ben:
        return PredictionSet.BENIGN
    return PredictionSet.EMPTY


def _set_masks(p, q_hat):
    cut = 1.0 - q_hat
    return p >= cut, (1.0 - p) >= cut


def prediction_sets(probs_malware, q_hat):
    """Vectorized :func:`prediction_set`."""
    p = np.asarray(probs_malware, dtype=np.float64)
    mal, ben = _set_masks(p, q_hat)
    out = np.empty(p.shape, dtype=object)
    out[mal & ben] = PredictionSet.BOTH
    out[mal & ~ben] = PredictionSet.MALWARE
    out[~mal & ben] = PredictionSet.BENIGN
    out[~mal & ~ben] = PredictionSet.EMPTY
    return out


@dataclass(frozen=True)
class ConformalCalibration:
    scores: tuple
    alpha: float
    q_hat: float

    def predict_set(self, p_malware):
        return prediction_set(p_malware, self.q_hat)


def calibrate(probs_malware, labels, alpha):
    s = conformal_scores(probs_malware, labels)
    return ConformalCalibration(tuple(s.tolist()), float(alpha), quantile_threshold(s, alpha))


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    q_hat: float
    ca_pct: float
    cr_pct: float
    harmonic_mean: float


def harmonic_mean(ca, cr):
    return 2.0 * ca * cr / (ca + cr) if ca + cr > 0 else 0.0


def accept_reject_rates(probs, preds, labels, q_hat):
    """``(CA%, CR%)``: accepted share of correct rows, rejected share of wrong rows.

    Accepted means a singleton prediction set; an empty pool scores 100.
    """
    p = np.asarray(probs, dtype=np.float64)
    correct = np.asarray(preds, dtype=np.int64) == np.asarray(labels, dtype=np.int64)
    mal, ben = _set_masks(p, q_hat)
    accepted = mal ^ ben
    n_ok, n_bad = int(correct.sum()), int((~correct).sum())
    ca = 100.0 * np.sum(accepted & correct) / n_ok if n_ok else 100.0
    cr = 100.0 * np.sum(~accepted & ~correct) / n_bad if n_bad else 100.0
    return float(ca), float(cr)


def alpha_sweep(calib_probs, calib_labels, eval_probs, eval_preds, eval_labels,
                alpha_lo=0.001, alpha_hi=0.5, n_points=200):
    """Scan equally spaced alphas; returns ``(rows, best_alpha)``.

    The best alpha maximizes the harmonic mean of CA% and CR%; the first
    (smallest) alpha wins ties.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    n = len(eval_probs)
    if not (len(eval_preds) == len(eval_labels) == n):
        raise LengthMismatch("evaluation probs, preds and labels differ in length")
    scores = conformal_scores(calib_probs, calib_labels)
    rows = []
    best = None
    for a in np.linspace(alpha_lo, alpha_hi, n_points):
        q = quantile_threshold(scores, float(a))
        ca, cr = accept_reject_rates(eval_probs, eval_preds, eval_labels, q)
        row = SweepRow(float(a), q, ca, cr, harmonic_mean(ca, cr))
        rows.append(row)
        if best is None or row.harmonic_mean > best.harmonic_mean:
            best = row
    return rows, best.alpha


def coverage(probs, labels, q_hat):
    """Fraction of rows whose true label is in the prediction set."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    mal, ben = _set_masks(p, q_hat)
    return float(np.mean(np.where(y == 1, mal, ben)))


def coverage_check(probs, labels, alpha, trials=20, seed=0, calib_fraction=0.5):
    """Mean empirical coverage over random calibration/test re-splits of the pooled rows."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape:
        raise LengthMismatch(f"probs {p.shape} vs labels {y.shape}")
    rng = np.random.default_rng(seed)
    n_cal = int(round(len(p) * calib_fraction))
    if not 0 < n_cal < len(p):
        raise ValueError("calibration split leaves an empty side")
    covs = []
    for _ in range(trials):
        perm = rng.permutation(len(p))
        cal, test = perm[:n_cal], perm[n_cal:]
        q = quantile_threshold(conformal_scores(p[cal], y[cal]), alpha)
        covs.append(coverage(p[test], y[test], q))
    return float(np.mean(covs))


def verdicts(probs, q_hat):
    """Per-row ``(prediction set, verdict)`` pairs."""
    sets = prediction_sets(probs, q_hat)
    return [(s, s.verdict) for s in sets]


def write_sweep_csv(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "q_hat", "ca_pct", "cr_pct", "harmonic_mean"])
        for r in rows:
            w.writerow([repr(r.alpha), repr(r.q_hat), repr(r.ca_pct), repr(r.cr_pct),
                        repr(r.harmonic_mean)])
    return path


def write_verdict_csv(row_ids, probs, preds, q_hat, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "prob_malware", "pred", "verdict", "set"])
        for rid, p, pred, (s, v) in zip(row_ids, probs, preds, verdicts(probs, q_hat)):
            w.writerow([int(rid), repr(float(p)), int(pred), v.value, s.value])
    return path
