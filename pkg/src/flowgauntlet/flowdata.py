"""Flow dataset schema, CSV ingestion, splitting and standard scaling."""

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFile,
    EmptyPartition,
    MissingColumn,
    NonNumericCell,
    ScaleMismatch,
    TooFewRecords,
)

FEATURES = (
    "SrcWin",
    "sHops",
    "sTtl",
    "dTtl",
    "SrcBytes",
    "DstBytes",
    "Dur",
    "TotBytes",
    "Rate",
)
LABEL = "Label"
N_FEATURES = len(FEATURES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURES)}

DEGENERATE_STD = 1e-12


class Scale(str, enum.Enum):
    ORIGINAL = "original"
    STANDARDIZED = "standardized"


@dataclass(frozen=True)
class FlowRecord:
    """One flow in original units. ``label`` is 1 for malware."""

    srcwin: float
    shops: float
    sttl: float
    dttl: float
    srcbytes: float
    dstbytes: float
    dur: float
    totbytes: float
    rate: float
    label: int

    def __post_init__(self):
        values = self.as_array()
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError(f"flow features must be finite and non-negative: {values}")
        if self.sttl > 255 or self.dttl > 255:
            raise ValueError("sTtl and dTtl must lie in [0, 255]")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    def as_array(self):
        return np.array(
            [self.srcwin, self.shops, self.sttl, self.dttl, self.srcbytes,
             self.dstbytes, self.dur, self.totbytes, self.rate],
            dtype=np.float64,
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus labels.

    ``ids`` are stable row identifiers (the original CSV row order) so that
    partitions can be checked against their source. ``features`` names the
    columns of ``X``; it is the full schema unless the dataset was restricted
    by feature selection.
    """

    X: np.ndarray
    y: np.ndarray
    scale: Scale = Scale.ORIGINAL
    features: tuple = FEATURES
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if X.shape[1] != len(self.features):
            raise ValueError("column count does not match feature names")
        ids = self.ids
        ids = np.arange(len(y), dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "scale", Scale(self.scale))

    def __len__(self):
        return self.y.shape[0]

    def records(self):
        if self.features != FEATURES:
            raise ValueError("records() needs the full feature schema")
        return [FlowRecord(*row, label=int(lbl)) for row, lbl in zip(self.X.tolist(), self.y)]

    @classmethod
    def from_records(cls, records):
        records = list(records)
        if not records:
            raise EmptyFile("no records")
        X = np.stack([r.as_array() for r in records])
        y = np.array([r.label for r in records], dtype=np.int64)
        return cls(X, y)

    def subset(self, index):
        index = np.asarray(index)
        return Dataset(self.X[index], self.y[index], self.scale, self.features, self.ids[index])

    def select(self, features):
        """Restrict to the named columns, in the given order."""
        cols = [self.features.index(f) for f in features]
        return Dataset(self.X[:, cols], self.y, self.scale, tuple(features), self.ids)

    def with_X(self, X, scale=None):
        return Dataset(X, self.y, self.scale if scale is None else scale, self.features, self.ids)

    def concat(self, other):
        if other.features != self.features or other.scale != self.scale:
            raise ScaleMismatch("datasets differ in feature set or scale")
        offset = int(self.ids.max()) + 1 if len(self) else 0
        return Dataset(
            np.vstack([self.X, other.X]),
            np.concatenate([self.y, other.y]),
            self.scale,
            self.features,
            np.concatenate([self.ids, other.ids + offset]),
        )


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def load_flow_csv(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        header = [h.strip() for h in header]
        cols = {}
        for name in FEATURES + (LABEL,):
            if name not in header:
                raise MissingColumn(name)
            cols[name] = header.index(name)
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            values = []
            for name in FEATURES:
                cell = row[cols[name]] if cols[name] < len(row) else ""
                try:
                    values.append(float(cell))
                except ValueError:
                    raise NonNumericCell(lineno, name, cell) from None
            cell = row[cols[LABEL]] if cols[LABEL] < len(row) else ""
            try:
                label = float(cell)
            except ValueError:
                raise NonNumericCell(lineno, LABEL, cell) from None
            if label not in (0.0, 1.0):
                raise NonNumericCell(lineno, LABEL, cell)
            rows.append(values)
            labels.append(int(label))
    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows")
    return Dataset(np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64))


def write_flow_csv(ds, path, extra_columns=None):
    """Write ``ds`` with the canonical header.

    ``extra_columns`` maps column name to a per-row sequence appended after
    ``Label`` (used for adversarial provenance).
    """
    extra_columns = extra_columns or {}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(ds.features) + [LABEL] + list(extra_columns))
        extras = list(extra_columns.values())
        for i, (row, label) in enumerate(zip(ds.X.tolist(), ds.y.tolist())):
            writer.writerow([repr(v) for v in row] + [label] + [col[i] for col in extras])
    return path


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    test_fraction: float = 0.3
    validation_fraction_of_train: float = 0.05
    calibration_fraction_of_train: float = 0.10
    seed: int = 42

    def __post_init__(self):
        if not (0 < self.train_fraction < 1 and 0 < self.test_fraction < 1):
            raise ValueError("train/test fractions must lie in (0, 1)")
        if not math.isclose(self.train_fraction + self.test_fraction, 1.0, abs_tol=1e-12):
            raise ValueError("train_fraction + test_fraction must equal 1")
        v, c = self.validation_fraction_of_train, self.calibration_fraction_of_train
        if not (0 <= v < 1 and 0 <= c < 1) or v + c >= 1:
            raise ValueError("validation and calibration fractions must leave a residual train set")


@dataclass(frozen=True, eq=False)
class Split:
    train: Dataset
    validation: Dataset
    calibration: Dataset
    test: Dataset

    def __iter__(self):
        return iter((self.train, self.validation, self.calibration, self.test))


def split_sizes(n, spec):
    n_test = math.floor(n * spec.test_fraction)
    pool = n - n_test
    n_val = math.floor(pool * spec.validation_fraction_of_train)
    n_cal = math.floor(pool * spec.calibration_fraction_of_train)
    return pool - n_val - n_cal, n_val, n_cal, n_test


def split(ds, spec):
    """Shuffle once, then slice test | validation | calibration | train.

    Floor rounding everywhere; leftover rows land in train. A zero-size
    validation or calibration part is returned as-is only when its fraction
    is zero.
    """
    if ds.scale is not Scale.ORIGINAL:
        raise ScaleMismatch("split expects an original-scale dataset")
    n = len(ds)
    n_train, n_val, n_cal, n_test = split_sizes(n, spec)
    if n_train == 0 or n_test == 0:
        raise EmptyPartition(f"train/test partition empty for n={n}")
    if n_val == 0 and spec.validation_fraction_of_train > 0:
        raise EmptyPartition("validation partition is empty")
    if n_cal == 0 and spec.calibration_fraction_of_train > 0:
        raise EmptyPartition("calibration partition is empty")
    order = np.random.default_rng(spec.seed).permutation(n)
    a, b, c = n_test, n_test + n_val, n_test + n_val + n_cal
    return Split(
        train=ds.subset(np.sort(order[c:])),
        validation=ds.subset(np.sort(order[a:b])),
        calibration=ds.subset(np.sort(order[b:c])),
        test=ds.subset(np.sort(order[:a])),
    )


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scaler:
    means: np.ndarray
    stddevs: np.ndarray
    features: tuple = FEATURES

    def transform_array(self, X):
        return (np.asarray(X, dtype=np.float64) - self.means) / self.stddevs

    def inverse_array(self, Z):
        return np.asarray(Z, dtype=np.float64) * self.stddevs + self.means

    def transform_column(self, values, feature):
        j = self.features.index(feature)
        return (np.asarray(values, dtype=np.float64) - self.means[j]) / self.stddevs[j]

    def inverse_column(self, values, feature):
        j = self.features.index(feature)
        return np.asarray(values, dtype=np.float64) * self.stddevs[j] + self.means[j]

    def to_dict(self):
        return {
            "features": list(self.features),
            "means": self.means.tolist(),
            "stddevs": self.stddevs.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["means"], dtype=np.float64),
                   np.array(d["stddevs"], dtype=np.float64),
                   tuple(d["features"]))

    def save(self, path):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_scaler(ds):
    if ds.scale is not Scale.ORIGINAL:
        raise ScaleMismatch("fit_scaler expects an original-scale dataset")
    if len(ds) < 2:
        raise TooFewRecords(f"need at least 2 records, got {len(ds)}")
    means = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    std = np.where(std < DEGENERATE_STD, 1.0, std)
    return Scaler(means, std, ds.features)


def transform(scaler, ds):
    if ds.scale is not Scale.ORIGINAL:
        raise ScaleMismatch("transform expects an original-scale dataset")
    _check_features(scaler, ds)
    return ds.with_X(scaler.transform_array(ds.X), Scale.STANDARDIZED)


def inverse_transform(scaler, ds):
    if ds.scale is not Scale.STANDARDIZED:
        raise ScaleMismatch("inverse_transform expects a standardized dataset")
    _check_features(scaler, ds)
    return ds.with_X(scaler.inverse_array(ds.X), Scale.ORIGINAL)


def _check_features(scaler, ds):
    if tuple(scaler.features) != tuple(ds.features):
        raise ScaleMismatch(f"scaler fitted on {scaler.features}, dataset has {ds.features}")


def feature_bounds(ds):
    """Per-column (min, max) of an original-scale dataset."""
    return ds.X.min(axis=0), ds.X.max(axis=0)
