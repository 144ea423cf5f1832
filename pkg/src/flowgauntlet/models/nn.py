"""Minimal dense networks with manual reverse-mode gradients.

Used by the MLP classifier and by the WGAN generator/discriminator. Every
layer is ``act(x @ W + b)``; gradients w.r.t. both parameters and inputs are
available so attacks can differentiate through a frozen network.
"""

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")


def sigmoid(z):
    # split branches keep exp() from overflowing
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, z, a):
    """Derivative of the activation given pre-activation ``z`` and output ``a``."""
    if name == "relu":
        return (z > 0).astype(np.float64)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class DenseNet:
    """Stack of dense layers.

    ``sizes`` lists layer widths including input and output; ``activations``
    has one entry per weight layer.
    """

    def __init__(self, weights, biases, activations):
        if not (len(weights) == len(biases) == len(activations)):
            raise ValueError("weights, biases and activations must align")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.activations = list(activations)

    @classmethod
    def init(cls, sizes, activations, rng):
        weights = [glorot_uniform(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(weights, biases, activations)

    @property
    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def n_inputs(self):
        return self.weights[0].shape[0]

    def forward(self, X, keep=False):
        a = np.asarray(X, dtype=np.float64)
        cache = [] if keep else None
        for w, b, name in zip(self.weights, self.biases, self.activations):
            z = a @ w + b
            out = _act(name, z)
            if keep:
                cache.append((a, z, out))
            a = out
        return (a, cache) if keep else a

    def backward(self, cache, grad_out, want_params=True):
        """Back-propagate ``grad_out`` (dL/d output).

        Returns ``(param_grads, grad_input)``; ``param_grads`` follows the
        ``params`` ordering or is None when ``want_params`` is false.
        """
        grads = [] if want_params else None
        g = grad_out
        for (a_in, z, a_out), w, name in zip(reversed(cache), reversed(self.weights),
                                             reversed(self.activations)):
            dz = g * _act_grad(name, z, a_out)
            if want_params:
                grads.append(dz.sum(axis=0))
                grads.append(a_in.T @ dz)
            g = dz @ w.T
        if want_params:
            grads.reverse()  # now [W0, b0, W1, b1, ...]
        return grads, g

    def copy(self):
        return DenseNet([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.activations)

    def to_dict(self):
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activations": list(self.activations),
        }

    @classmethod
    def from_dict(cls, d):
        return cls([np.array(w, dtype=np.float64).reshape(len(w), -1) for w in d["weights"]],
                   d["biases"], d["activations"])


class Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


class RmsProp:
    def __init__(self, lr, rho=0.9, eps=1e-8):
        self.lr, self.rho, self.eps = lr, rho, eps
        self.sq = None

    def step(self, params, grads):
        if self.sq is None:
            self.sq = [np.zeros_like(p) for p in params]
        for p, g, s in zip(params, grads, self.sq):
            s *= self.rho
            s += (1.0 - self.rho) * g * g
            p -= self.lr * g / (np.sqrt(s) + self.eps)


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


OPTIMIZERS = {"adam": Adam, "sgd": Sgd, "rmsprop": RmsProp}


def make_optimizer(name, lr):
    try:
        return OPTIMIZERS[name](lr)
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}") from None
