"""Hot inner loops with two interchangeable implementations.

Each kernel exists as an explicit-loop version (compiled by numba when
available) and a vectorized numpy version. The public names dispatch on
``USE_JIT`` from :mod:`flowgauntlet._accel`; both variants are exported with
``_jit`` / ``_numpy`` suffixes so tests and the benchmark can pit them
against each other.
"""

import numpy as np

from . import _accel
from ._accel import njit

GINI = 0
ENTROPY = 1

_LN2 = np.log(2.0)


# ---------------------------------------------------------------------------
# split search
# ---------------------------------------------------------------------------

@njit(cache=True)
def _side_cost(n1, n, criterion):
    # n * impurity(side); n > 0 guaranteed by callers
    n0 = n - n1
    if criterion == GINI:
        return n - (n1 * n1 + n0 * n0) / n
    cost = 0.0
    if n1 > 0:
        cost -= n1 * np.log(n1 / n)
    if n0 > 0:
        cost -= n0 * np.log(n0 / n)
    return cost / _LN2


@njit(cache=True)
def best_split_jit(xs, ys, min_leaf, criterion):
    """Scan every boundary of a sorted column for the cheapest split.

    Returns ``(pos, cost)`` where the left child is ``xs[:pos + 1]`` and
    ``cost`` is the count-weighted child impurity. ``pos == -1`` when no
    boundary satisfies ``min_leaf``.
    """
    n = xs.shape[0]
    total1 = 0.0
    for i in range(n):
        total1 += ys[i]
    best_pos = -1
    best_cost = np.inf
    left1 = 0.0
    for i in range(n - 1):
        left1 += ys[i]
        n_left = i + 1.0
        if xs[i] >= xs[i + 1]:
            continue
        if n_left < min_leaf or n - n_left < min_leaf:
            continue
        cost = _side_cost(left1, n_left, criterion) + _side_cost(
            total1 - left1, n - n_left, criterion
        )
        if cost < best_cost:
            best_cost = cost
            best_pos = i
    return best_pos, best_cost


def _side_cost_numpy(n1, n, criterion):
    n0 = n - n1
    if criterion == GINI:
        return n - (n1 * n1 + n0 * n0) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(n1 > 0, n1 * np.log(np.where(n1 > 0, n1, 1.0) / n), 0.0)
        t0 = np.where(n0 > 0, n0 * np.log(np.where(n0 > 0, n0, 1.0) / n), 0.0)
    return (-t1 - t0) / _LN2


def best_split_numpy(xs, ys, min_leaf, criterion):
    n = xs.shape[0]
    if n < 2:
        return -1, np.inf
    left1 = np.cumsum(ys[:-1], dtype=np.float64)
    total1 = float(np.sum(ys, dtype=np.float64))
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    cost = _side_cost_numpy(left1, n_left, criterion) + _side_cost_numpy(
        total1 - left1, n_right, criterion
    )
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return -1, np.inf
    cost = np.where(valid, cost, np.inf)
    pos = int(np.argmin(cost))
    return pos, float(cost[pos])


# ---------------------------------------------------------------------------
# tree traversal
# ---------------------------------------------------------------------------

@njit(cache=True)
def apply_tree_jit(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while left[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


def apply_tree_numpy(X, feature, threshold, left, right):
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = left[node] >= 0
    rows = np.arange(X.shape[0])
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = left[node] >= 0
    return node


# ---------------------------------------------------------------------------
# equal-width discretization
# ---------------------------------------------------------------------------

@njit(cache=True)
def bin_contingency_jit(x, y, bins):
    """Class counts per equal-width bin; shape ``(bins, 2)``."""
    n = x.shape[0]
    lo = x[0]
    hi = x[0]
    for i in range(n):
        if x[i] < lo:
            lo = x[i]
        if x[i] > hi:
            hi = x[i]
    counts = np.zeros((bins, 2), dtype=np.int64)
    span = hi - lo
    for i in range(n):
        b = 0
        if span > 0:
            b = int(np.floor((x[i] - lo) * bins / span))
            if b >= bins:
                b = bins - 1
        counts[b, y[i]] += 1
    return counts


def bin_contingency_numpy(x, y, bins):
    lo = x.min()
    span = x.max() - lo
    if span > 0:
        codes = np.minimum(np.floor((x - lo) * bins / span).astype(np.int64), bins - 1)
    else:
        codes = np.zeros(x.shape[0], dtype=np.int64)
    flat = np.bincount(codes * 2 + y, minlength=2 * bins)
    return flat.reshape(bins, 2)


def _pick(jit_fn, numpy_fn):
    def dispatch(*args):
        if _accel.USE_JIT:
            return jit_fn(*args)
        return numpy_fn(*args)

    dispatch.__name__ = numpy_fn.__name__.replace("_numpy", "")
    dispatch.__doc__ = jit_fn.__doc__
    return dispatch


best_split = _pick(best_split_jit, best_split_numpy)
apply_tree = _pick(apply_tree_jit, apply_tree_numpy)
bin_contingency = _pick(bin_contingency_jit, bin_contingency_numpy)
