"""CART decision tree for binary labels."""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .. import kernels

CRITERIA = ("gini", "entropy")
SPLITTERS = ("best", "random")
MAX_FEATURE_ALIASES = {"auto": "sqrt", "none": "all", None: "all"}


@dataclass(frozen=True)
class DtParams:
    """Decision-tree hyperparameters.

    ``max_features`` is ``"all"``, ``"sqrt"``, ``"log2"`` or an int ``k``;
    ``"auto"`` is accepted as an alias of ``"sqrt"`` and ``None`` of
    ``"all"``. ``max_depth=None`` and ``max_leaf_nodes=None`` mean unbounded.
    """

    criterion: str = "gini"
    splitter: str = "best"
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    min_weight_fraction_leaf: float = 0.0
    max_features: object = "all"
    max_leaf_nodes: int | None = None
    min_impurity_decrease: float = 0.0
    ccp_alpha: float = 0.0

    def __post_init__(self):
        mf = self.max_features
        if isinstance(mf, str):
            mf = mf.lower()
        mf = MAX_FEATURE_ALIASES.get(mf, mf)
        object.__setattr__(self, "max_features", mf)
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.splitter not in SPLITTERS:
            raise ValueError(f"splitter must be one of {SPLITTERS}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 <= self.min_weight_fraction_leaf <= 0.5:
            raise ValueError("min_weight_fraction_leaf must lie in [0, 0.5]")
        if not (mf in ("all", "sqrt", "log2") or (isinstance(mf, (int, np.integer)) and mf >= 1)):
            raise ValueError(f"bad max_features: {self.max_features!r}")
        if self.max_leaf_nodes is not None and self.max_leaf_nodes < 1:
            raise ValueError("max_leaf_nodes must be >= 1")
        if self.min_impurity_decrease < 0 or self.ccp_alpha < 0:
            raise ValueError("min_impurity_decrease and ccp_alpha must be >= 0")

    def n_split_features(self, n_features):
        mf = self.max_features
        if mf == "all":
            return n_features
        if mf == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if mf == "log2":
            return max(1, int(math.log2(n_features)))
        return min(int(mf), n_features)


def _impurity(n1, n, criterion):
    if n == 0:
        return 0.0
    crit = kernels.GINI if criterion == "gini" else kernels.ENTROPY
    return float(kernels._side_cost_numpy(np.float64(n1), np.float64(n), crit)) / n


class TreeStructure:
    """Flat array representation; ``left[i] == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, value, n_samples, impurity, depth):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        self.impurity = np.asarray(impurity, dtype=np.float64)
        self.depth = np.asarray(depth, dtype=np.int64)

    @property
    def node_count(self):
        return self.left.shape[0]

    def is_leaf(self):
        return self.left < 0

    @property
    def n_leaves(self):
        return int(np.sum(self.left < 0))

    @property
    def max_depth(self):
        return int(self.depth[self.is_leaf()].max())

    def apply(self, X):
        return kernels.apply_tree(np.ascontiguousarray(X, dtype=np.float64),
                                  self.feature, self.threshold, self.left, self.right)

    def predict_proba(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in
                ("feature", "threshold", "left", "right", "value", "n_samples", "impurity", "depth")}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class _Builder:
    def __init__(self, X, y, params, rng):
        self.X = X
        self.y = y.astype(np.float64)
        self.p = params
        self.rng = rng
        self.n_total = X.shape[0]
        self.n_features = X.shape[1]
        self.k = params.n_split_features(self.n_features)
        # min_weight_fraction_leaf on unit weights
        self.min_leaf = max(params.min_samples_leaf,
                            math.ceil(params.min_weight_fraction_leaf * self.n_total - 1e-12))
        self.crit = kernels.GINI if params.criterion == "gini" else kernels.ENTROPY
        self.nodes = []  # dicts, converted to arrays at the end

    def _new_node(self, idx, depth):
        n = idx.shape[0]
        n1 = float(self.y[idx].sum())
        node = {
            "idx": idx, "depth": depth, "n": n, "value": n1 / n,
            "impurity": _impurity(n1, n, self.p.criterion),
            "feature": -1, "threshold": 0.0, "left": -1, "right": -1,
        }
        self.nodes.append(node)
        return len(self.nodes) - 1

    def _find_split(self, node):
        """Best admissible split of ``node`` or None."""
        p = self.p
        idx = node["idx"]
        n = node["n"]
        if p.max_depth is not None and node["depth"] >= p.max_depth:
            return None
        if n < p.min_samples_split or n < 2 * self.min_leaf or node["impurity"] <= 0.0:
            return None
        if self.k == self.n_features and p.splitter == "best":
            candidates = np.arange(self.n_features)
        else:
            candidates = self.rng.permutation(self.n_features)
        best = None
        visited = 0
        for f in candidates:
            if visited >= self.k and best is not None:
                break
            col = self.X[idx, f]
            order = np.argsort(col, kind="stable")
            xs = col[order]
            if xs[0] == xs[-1]:
                continue  # constant here; does not count toward max_features
            visited += 1
            ys = self.y[idx][order]
            if p.splitter == "best":
                pos, cost = kernels.best_split(xs, ys, float(self.min_leaf), self.crit)
                if pos < 0:
                    continue
                threshold = 0.5 * (xs[pos] + xs[pos + 1])
                if threshold >= xs[pos + 1]:  # midpoint rounding on adjacent floats
                    threshold = xs[pos]
            else:
                threshold = self.rng.uniform(xs[0], xs[-1])
                if threshold >= xs[-1]:
                    threshold = xs[0]
                n_left = int(np.searchsorted(xs, threshold, side="right"))
                if n_left < self.min_leaf or n - n_left < self.min_leaf:
                    continue
                l1 = float(ys[:n_left].sum())
                cost = (_impurity(l1, n_left, p.criterion) * n_left
                        + _impurity(float(ys.sum()) - l1, n - n_left, p.criterion) * (n - n_left))
            if best is None or cost < best[0]:
                best = (cost, int(f), float(threshold))
        if best is None:
            return None
        cost, f, threshold = best
        decrease = (n / self.n_total) * (node["impurity"] - cost / n)
        if decrease < p.min_impurity_decrease - 1e-15:
            return None
        return decrease, f, threshold

    def build(self):
        p = self.p
        root = self._new_node(np.arange(self.n_total), 0)
        heap = []
        counter = 0

        def push(node_id):
            nonlocal counter
            found = self._find_split(self.nodes[node_id])
            if found is not None:
                # best-first: largest weighted impurity decrease first
                heapq.heappush(heap, (-found[0], counter, node_id, found))
                counter += 1

        push(root)
        n_leaves = 1
        while heap:
            if p.max_leaf_nodes is not None and n_leaves >= p.max_leaf_nodes:
                break
            _, _, node_id, (_, f, threshold) = heapq.heappop(heap)
            node = self.nodes[node_id]
            idx = node["idx"]
            mask = self.X[idx, f] <= threshold
            node["feature"] = f
            node["threshold"] = threshold
            node["left"] = self._new_node(idx[mask], node["depth"] + 1)
            node["right"] = self._new_node(idx[~mask], node["depth"] + 1)
            n_leaves += 1
            push(node["left"])
            push(node["right"])
        return self._finish()

    def _finish(self):
        nodes = self.nodes
        tree = TreeStructure(
            feature=[nd["feature"] if nd["left"] >= 0 else 0 for nd in nodes],
            threshold=[nd["threshold"] for nd in nodes],
            left=[nd["left"] for nd in nodes],
            right=[nd["right"] for nd in nodes],
            value=[nd["value"] for nd in nodes],
            n_samples=[nd["n"] for nd in nodes],
            impurity=[nd["impurity"] for nd in nodes],
            depth=[nd["depth"] for nd in nodes],
        )
        if self.p.ccp_alpha > 0:
            tree = prune_cost_complexity(tree, self.p.ccp_alpha, self.n_total)
        return tree


def build_tree(X, y, params, rng):
    if X.shape[0] == 0:
        raise ValueError("cannot fit a tree on zero rows")
    return _Builder(np.ascontiguousarray(X, dtype=np.float64), np.asarray(y), params, rng).build()


def prune_cost_complexity(tree, alpha, n_total):
    """Minimal cost-complexity (weakest-link) pruning.

    Node risk is ``n_t / N * impurity_t``. The internal node with the
    smallest effective alpha ``(R(t) - R(T_t)) / (|leaves(T_t)| - 1)`` is
    collapsed repeatedly while that alpha does not exceed ``alpha``.
    """
    left = tree.left.copy()
    right = tree.right.copy()
    risk = tree.n_samples / n_total * tree.impurity

    while True:
        order = _preorder(left, right)
        sub_risk = risk.copy()
        sub_leaves = np.ones(tree.node_count, dtype=np.int64)
        for node in reversed(order):
            if left[node] >= 0:
                sub_risk[node] = sub_risk[left[node]] + sub_risk[right[node]]
                sub_leaves[node] = sub_leaves[left[node]] + sub_leaves[right[node]]
        weakest, weakest_g = -1, np.inf
        for node in order:
            if left[node] < 0:
                continue
            g = (risk[node] - sub_risk[node]) / (sub_leaves[node] - 1)
            if g < weakest_g:
                weakest, weakest_g = node, g
        if weakest < 0 or weakest_g > alpha:
            break
        left[weakest] = -1
        right[weakest] = -1

    keep = sorted(_preorder(left, right))
    remap = {old: new for new, old in enumerate(keep)}
    return TreeStructure(
        feature=[tree.feature[i] if left[i] >= 0 else 0 for i in keep],
        threshold=[tree.threshold[i] if left[i] >= 0 else 0.0 for i in keep],
        left=[remap[left[i]] if left[i] >= 0 else -1 for i in keep],
        right=[remap[right[i]] if right[i] >= 0 else -1 for i in keep],
        value=tree.value[keep],
        n_samples=tree.n_samples[keep],
        impurity=tree.impurity[keep],
        depth=tree.depth[keep],
    )


def _preorder(left, right):
    out, stack = [], [0]
    while stack:
        node = stack.pop()
        out.append(node)
        if left[node] >= 0:
            stack.append(right[node])
            stack.append(left[node])
    return out
