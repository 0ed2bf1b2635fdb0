import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from msp.estimation import AnalysisChoice, AxisBinding, Bindings, Dataset
from msp.specspace import Axis, SpecSpace, grid_from_intervals

settings.register_profile("default", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def toy_space():
    return SpecSpace((Axis("covariates", "basic", "full"), Axis("form", "linear", "nonlinear")))


@pytest.fixture
def toy_grid(toy_space):
    """Two-axis example whose null-compatible set is {(1,0), (1,1)}."""
    intervals = {
        (0, 0): (0.4, 2.0),
        (0, 1): (0.2, 1.8),
        (1, 0): (-0.3, 1.1),
        (1, 1): (-0.6, 0.9),
    }
    return grid_from_intervals(toy_space, intervals)


def make_dataset(n=200, seed=0, tau=1.0, p=3, confounded=True):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    eta = 0.5 * X[:, 0] if confounded else np.zeros(n)
    A = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(int)
    Y = tau * A + X @ np.linspace(1.0, 0.2, p) + rng.standard_normal(n)
    return Dataset(X, tuple(f"x{j + 1}" for j in range(p)), A, Y)


@pytest.fixture
def small_data():
    return make_dataset()


@pytest.fixture
def two_axis_setup():
    """Cheap OLS space: add x1, add x2."""
    space = SpecSpace((Axis("add_x1"), Axis("add_x2")))
    bindings = Bindings(AnalysisChoice(covariates=("x3",)), {
        "add_x1": AxisBinding("covariates", (), ("x1",)),
        "add_x2": AxisBinding("covariates", (), ("x2",)),
    })
    return space, bindings


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Print and record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {number:>2}: {status}  {detail}"
        print(line)
        lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
