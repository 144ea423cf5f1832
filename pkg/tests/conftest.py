import numpy as np
import pytest

from flowgauntlet import _accel
from flowgauntlet.flowdata import FEATURES, Dataset, Scale, Scaler, SplitSpec, fit_scaler, split
from flowgauntlet.flowdata import transform as std_transform
from flowgauntlet.models import MlpModel
from flowgauntlet.pipeline import SyntheticSpec, generate_synthetic_flows

KERNEL_MODES = ["jit", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=KERNEL_MODES)
def kernel_mode(request, monkeypatch):
    """Run the test once per kernel implementation."""
    monkeypatch.setattr(_accel, "USE_JIT", request.param == "jit")
    return request.param


@pytest.fixture(scope="session")
def flows():
    return generate_synthetic_flows(SyntheticSpec(n_benign=300, n_malware=300, seed=0))


@pytest.fixture(scope="session")
def prepared(flows):
    """(scaler, standardized train, validation, test, original-scale train)."""
    parts = split(flows, SplitSpec(seed=1))
    scaler = fit_scaler(parts.train)
    return (scaler, std_transform(scaler, parts.train), std_transform(scaler, parts.validation),
            std_transform(scaler, parts.test), parts.train)


def identity_scaler(features=FEATURES):
    d = len(features)
    return Scaler(np.zeros(d), np.ones(d), tuple(features))


def logistic_toy(weight=3.0, column=0, d=len(FEATURES)):
    """Surrogate with p = sigmoid(weight * x[column])."""
    w = np.zeros((d, 1))
    w[column, 0] = weight
    return MlpModel.from_weights([w], [np.zeros(1)])


def two_clusters(n=200, d=4, gap=3.0, seed=0, scale=Scale.STANDARDIZED):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-gap / 2, 1.0, (n // 2, d)), rng.normal(gap / 2, 1.0, (n - n // 2, d))])
    y = np.r_[np.zeros(n // 2, np.int64), np.ones(n - n // 2, np.int64)]
    return Dataset(X, y, scale, FEATURES[:d])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
