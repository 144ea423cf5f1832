"""Post-perturbation repair of dependent flow features.

After one feature is perturbed, the features tied to it are recomputed so
the flow stays internally consistent (bytes add up, rate matches duration,
TTL matches hop count). Works on original-scale rows.
"""

import numpy as np

from ..errors import UnknownFeature
from ..flowdata import FEATURES

EPSILON = 1e-9
INITIAL_TTL = 255.0

# which columns each repair rewrites (besides the attacked one)
DEPENDENTS = {
    "Dur": ("Rate",),
    "SrcBytes": ("TotBytes", "Dur"),
    "DstBytes": ("TotBytes", "Dur"),
    "TotBytes": ("SrcBytes", "DstBytes", "Dur"),
    "sHops": ("sTtl",),
    "sTtl": ("sHops",),
    "dTtl": ("sHops",),
    "Rate": ("Dur",),
    "SrcWin": (),
}


def _col(features, name):
    try:
        return features.index(name)
    except ValueError:
        raise UnknownFeature(f"{name} not present in {features}") from None


def adjust_dependencies(sample, perturbed_feature, initial_ttl=INITIAL_TTL, epsilon=EPSILON,
                        features=FEATURES):
    """Return a repaired copy of ``sample`` (a row or a matrix of rows)."""
    if perturbed_feature not in DEPENDENTS:
        raise UnknownFeature(perturbed_feature)
    out = np.array(sample, dtype=np.float64, copy=True)
    single = out.ndim == 1
    X = np.atleast_2d(out)
    features = tuple(features)

    def c(name):
        return X[:, _col(features, name)]

    def put(name, values):
        X[:, _col(features, name)] = values

    f = perturbed_feature
    if f == "Dur":
        put("Rate", c("TotBytes") / (c("Dur") + epsilon))
    elif f in ("SrcBytes", "DstBytes"):
        put("TotBytes", c("SrcBytes") + c("DstBytes"))
        put("Dur", c("TotBytes") / (c("Rate") + epsilon))
    elif f == "TotBytes":
        # SrcBytes held fixed unless the new total is smaller than it
        put("DstBytes", np.maximum(c("TotBytes") - c("SrcBytes"), 0.0))
        put("SrcBytes", c("TotBytes") - c("DstBytes"))
        put("Dur", c("TotBytes") / (c("Rate") + epsilon))
    elif f == "sHops":
        put("sTtl", np.clip(initial_ttl - c("sHops"), 0.0, 255.0))
    elif f in ("sTtl", "dTtl"):
        put("sHops", np.maximum(initial_ttl - c("sTtl"), 0.0))
    elif f == "Rate":
        put("Dur", c("TotBytes") / (c("Rate") + epsilon))
    return X[0] if single else X


def dependency_residual(sample, perturbed_feature, initial_ttl=INITIAL_TTL, epsilon=EPSILON,
                        features=FEATURES):
    """Largest relative violation of the identities tied to ``perturbed_feature``.

    Each identity ``a == b`` contributes ``|a - b| / max(1, |b|)``; returns 0
    for features with no dependents.
    """
    if perturbed_feature not in DEPENDENTS:
        raise UnknownFeature(perturbed_feature)
    X = np.atleast_2d(np.asarray(sample, dtype=np.float64))
    features = tuple(features)

    def c(name):
        return X[:, _col(features, name)]

    def rel(a, b):
        return np.abs(a - b) / np.maximum(1.0, np.abs(b))

    f = perturbed_feature
    parts = []
    if f == "Dur":
        parts.append(rel(c("Rate") * (c("Dur") + epsilon), c("TotBytes")))
    elif f in ("SrcBytes", "DstBytes", "TotBytes"):
        parts.append(rel(c("SrcBytes") + c("DstBytes"), c("TotBytes")))
        parts.append(rel(c("Dur") * (c("Rate") + epsilon), c("TotBytes")))
    elif f == "Rate":
        parts.append(rel(c("Dur") * (c("Rate") + epsilon), c("TotBytes")))
    elif f == "sHops":
        parts.append(rel(c("sTtl"), initial_ttl - c("sHops")))
    elif f in ("sTtl", "dTtl"):
        parts.append(rel(c("sHops"), initial_ttl - c("sTtl")))
    if not parts:
        return np.zeros(X.shape[0])
    return np.max(np.vstack(parts), axis=0)


def touched_columns(feature, features=FEATURES):
    """Indices the attack on ``feature`` may change: itself plus dependents."""
    features = tuple(features)
    names = (feature,) + tuple(d for d in DEPENDENTS[feature] if d in features)
    return [features.index(n) for n in names]


def feature_mask(feature, features=FEATURES):
    mask = np.zeros(len(features))
    mask[_col(tuple(features), feature)] = 1.0
    return mask
