"""Classifier models: decision tree, random forest and MLP.

All three expose ``predict_proba`` returning P(malware). The MLP is also
differentiable with respect to its inputs, which is what the attacks use.
"""

import enum
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..errors import (
    FeatureMismatch,
    LengthMismatch,
    NonStandardizedInput,
    WrongModelKind,
)
from ..flowdata import Scale
from .nn import DenseNet, make_optimizer, sigmoid
from .tree import DtParams, TreeStructure, build_tree

FORMAT = "flowgauntlet-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class RfParams(DtParams):
    max_features: object = "sqrt"
    n_estimators: int = 100
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        super().__post_init__()
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")

    def tree_params(self):
        names = {f.name for f in fields(DtParams)}
        return DtParams(**{k: v for k, v in asdict(self).items() if k in names})


LOSSES = ("binary_crossentropy", "hinge")


@dataclass(frozen=True)
class MlpParams:
    hidden_layers: int = 2
    nodes_per_layer: int = 16
    activation: str = "relu"
    optimizer: str = "adam"
    loss: str = "binary_crossentropy"
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 120
    seed: int = 0

    def __post_init__(self):
        if self.hidden_layers < 0 or self.nodes_per_layer < 1:
            raise ValueError("hidden_layers >= 0 and nodes_per_layer >= 1 required")
        if self.activation not in ("relu", "sigmoid", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.optimizer not in ("adam", "sgd", "rmsprop"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate > 0, batch_size >= 1, epochs >= 0 required")


class Objective(str, enum.Enum):
    RAW_LOGIT = "raw_logit"
    CW_F = "cw_f"
    LOSS = "loss"


# ---------------------------------------------------------------------------
# model variants
# ---------------------------------------------------------------------------

class Model:
    kind = None

    def __init__(self, features, scale):
        self.features = tuple(features)
        self.scale = Scale(scale)

    def predict_proba_array(self, X):
        raise NotImplementedError

    def predict_array(self, X):
        return (self.predict_proba_array(X) >= 0.5).astype(np.int64)

    def _state(self):
        raise NotImplementedError

    def to_dict(self):
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "features": list(self.features),
            "scale": self.scale.value,
            **self._state(),
        }


class DecisionTreeModel(Model):
    kind = "decision_tree"

    def __init__(self, tree, params, features, scale):
        super().__init__(features, scale)
        self.tree = tree
        self.params = params

    def predict_proba_array(self, X):
        return self.tree.predict_proba(X)

    def _state(self):
        return {"params": asdict(self.params), "tree": self.tree.to_dict()}


class RandomForestModel(Model):
    kind = "random_forest"

    def __init__(self, trees, params, features, scale):
        super().__init__(features, scale)
        self.trees = list(trees)
        self.params = params

    def tree_probas(self, X):
        return np.stack([t.predict_proba(X) for t in self.trees])

    def predict_proba_array(self, X):
        return self.tree_probas(X).mean(axis=0)

    def _state(self):
        return {"params": asdict(self.params), "trees": [t.to_dict() for t in self.trees]}


class MlpModel(Model):
    """Dense net whose single output unit is a logit; P(malware) = sigmoid."""

    kind = "mlp"

    def __init__(self, net, params, features, scale=Scale.STANDARDIZED):
        super().__init__(features, scale)
        self.net = net
        self.params = params

    @classmethod
    def from_weights(cls, weights, biases, activation="relu", features=None):
        """Build a net from explicit layers; the last layer is the logit."""
        activations = [activation] * (len(weights) - 1) + ["identity"]
        net = DenseNet(weights, biases, activations)
        if features is None:
            from ..flowdata import FEATURES
            features = FEATURES[: net.n_inputs]
        return cls(net, None, features)

    def logits(self, X):
        return self.net.forward(X)[:, 0]

    def predict_proba_array(self, X):
        return sigmoid(self.logits(X))

    def logit_and_grad(self, X):
        """Logits and d logit / d X, row by row."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out, cache = self.net.forward(X, keep=True)
        _, g = self.net.backward(cache, np.ones_like(out), want_params=False)
        return out[:, 0], g

    def _state(self):
        return {"params": asdict(self.params) if self.params else None,
                "net": self.net.to_dict()}


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _tree_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def train_decision_tree(train, params=None, seed=0):
    params = params or DtParams()
    tree = build_tree(train.X, train.y, params, _tree_rng(seed, 0))
    return DecisionTreeModel(tree, params, train.features, train.scale)


def train_random_forest(train, params=None):
    """Trees are seeded from ``(seed, index)``; tree 0 matches a lone tree."""
    params = params or RfParams()
    tp = params.tree_params()
    n = len(train)
    trees = []
    for i in range(params.n_estimators):
        if params.bootstrap:
            rows = np.random.default_rng([int(params.seed), i, 1]).integers(0, n, size=n)
            X, y = train.X[rows], train.y[rows]
        else:
            X, y = train.X, train.y
        trees.append(build_tree(X, y, tp, _tree_rng(params.seed, i)))
    return RandomForestModel(trees, params, train.features, train.scale)


def loss_grad_logit(z, y, loss):
    """Per-row loss and its derivative with respect to the logit."""
    if loss == "binary_crossentropy":
        # log(1 + e^z) - y z, computed stably
        value = np.logaddexp(0.0, z) - y * z
        return value, sigmoid(z) - y
    t = 2.0 * y - 1.0
    margin = 1.0 - t * z
    return np.maximum(margin, 0.0), np.where(margin > 0, -t, 0.0)


def train_mlp(train, params=None):
    params = params or MlpParams()
    if train.scale is not Scale.STANDARDIZED:
        raise NonStandardizedInput("train_mlp expects standardized features")
    rng = np.random.default_rng(params.seed)
    d = train.X.shape[1]
    sizes = [d] + [params.nodes_per_layer] * params.hidden_layers + [1]
    acts = [params.activation] * params.hidden_layers + ["identity"]
    net = DenseNet.init(sizes, acts, rng)
    opt = make_optimizer(params.optimizer, params.learning_rate)
    X, y = train.X, train.y.astype(np.float64)
    n = len(train)
    for _ in range(params.epochs):
        order = rng.permutation(n)
        for start in range(0, n, params.batch_size):
            rows = order[start:start + params.batch_size]
            out, cache = net.forward(X[rows], keep=True)
            _, dz = loss_grad_logit(out[:, 0], y[rows], params.loss)
            grads, _ = net.backward(cache, dz[:, None] / rows.shape[0])
            opt.step(net.params, grads)
    return MlpModel(net, params, train.features, train.scale)


def train_model(kind, train, params, seed=0):
    if kind in ("decision_tree", "dt"):
        return train_decision_tree(train, params, seed)
    if kind in ("random_forest", "rf"):
        return train_random_forest(train, params)
    if kind in ("mlp", "nn"):
        return train_mlp(train, params)
    raise ValueError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def _check(model, ds):
    if tuple(ds.features) != model.features:
        raise FeatureMismatch(f"model trained on {model.features}, got {ds.features}")


def predict_proba(model, ds):
    _check(model, ds)
    return model.predict_proba_array(ds.X)


def predict(model, ds):
    _check(model, ds)
    return model.predict_array(ds.X)


def input_gradient(model, x, objective=Objective.RAW_LOGIT, *, label=None,
                   target_class=0, kappa=0.0):
    """Analytic gradient of a scalar objective with respect to the input.

    ``x`` may be one vector or a matrix of rows; the result has the same
    shape. Objectives:

    - ``raw_logit``: the pre-sigmoid output.
    - ``cw_f``: ``max(Z_other - Z_target, -kappa)`` on the probability pair
      ``(1 - p, p)``; zero gradient where the floor is active.
    - ``loss``: the model's training loss for ``label``.
    """
    if not isinstance(model, MlpModel):
        raise WrongModelKind(f"input gradients need an MLP, got {model.kind}")
    objective = Objective(objective)
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    z, dz = model.logit_and_grad(x)
    if objective is Objective.RAW_LOGIT:
        coef = np.ones_like(z)
    elif objective is Objective.CW_F:
        p = sigmoid(z)
        sign = 1.0 if target_class == 0 else -1.0
        margin = sign * (2.0 * p - 1.0)
        coef = np.where(margin > -kappa, sign * 2.0 * p * (1.0 - p), 0.0)
    else:
        if label is None:
            raise ValueError("objective 'loss' needs a label")
        loss = model.params.loss if model.params else "binary_crossentropy"
        y = np.broadcast_to(np.asarray(label, dtype=np.float64), z.shape)
        _, coef = loss_grad_logit(z, y, loss)
    g = coef[:, None] * dz
    return g[0] if single else g


def objective_value(model, x, objective=Objective.RAW_LOGIT, *, label=None,
                    target_class=0, kappa=0.0):
    """The scalar(s) whose gradient :func:`input_gradient` returns."""
    objective = Objective(objective)
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    z = model.logits(np.atleast_2d(x))
    if objective is Objective.RAW_LOGIT:
        v = z
    elif objective is Objective.CW_F:
        p = sigmoid(z)
        sign = 1.0 if target_class == 0 else -1.0
        v = np.maximum(sign * (2.0 * p - 1.0), -kappa)
    else:
        loss = model.params.loss if model.params else "binary_crossentropy"
        y = np.broadcast_to(np.asarray(label, dtype=np.float64), z.shape)
        v, _ = loss_grad_logit(z, y, loss)
    return v[0] if single else v


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int


def metrics(predicted, truth):
    predicted = np.asarray(predicted).astype(np.int64)
    truth = np.asarray(truth).astype(np.int64)
    if predicted.shape != truth.shape:
        raise LengthMismatch(f"{predicted.shape} vs {truth.shape}")
    tp = int(np.sum((predicted == 1) & (truth == 1)))
    fp = int(np.sum((predicted == 1) & (truth == 0)))
    tn = int(np.sum((predicted == 0) & (truth == 0)))
    fn = int(np.sum((predicted == 0) & (truth == 1)))
    n = tp + fp + tn + fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if tp else 0.0
    return Metrics((tp + tn) / n if n else 0.0, precision, recall, f1, tp, fp, tn, fn)


def evaluate(model, ds):
    return metrics(predict(model, ds), ds.y)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_from_dict(d):
    if d.get("format") != FORMAT:
        raise ValueError("not a flowgauntlet model document")
    if d.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('version')}")
    kind, features, scale = d["kind"], d["features"], d["scale"]
    if kind == "decision_tree":
        return DecisionTreeModel(TreeStructure.from_dict(d["tree"]), DtParams(**d["params"]),
                                 features, scale)
    if kind == "random_forest":
        return RandomForestModel([TreeStructure.from_dict(t) for t in d["trees"]],
                                 RfParams(**d["params"]), features, scale)
    if kind == "mlp":
        params = MlpParams(**d["params"]) if d["params"] else None
        return MlpModel(DenseNet.from_dict(d["net"]), params, features, scale)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_dict()) + "\n")
    return path


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
