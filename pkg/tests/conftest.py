import math

import numpy as np
import pytest

from shiftforge import kernels
from shiftforge.freqset import from_points, from_xi_plus, product

BACKENDS = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = kernels.python_backend if request.param == "python" else kernels.compiled_backend
    monkeypatch.setattr(kernels, "eval_points", mod.eval_points)
    monkeypatch.setattr(kernels, "eval_derivatives", mod.eval_derivatives)
    return request.param


@pytest.fixture
def xi1():
    return from_xi_plus(1, [1])


@pytest.fixture
def pointy_product():
    return product([from_points(1, [-1, 0, 1]), from_points(1, [-2, 0, 2])])


@pytest.fixture
def classic_rule():
    from shiftforge.shiftrule import ShiftRule
    return ShiftRule.from_atoms({-0.25: math.pi, 0.25: -math.pi})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance reporting ---

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """``record(n, ok, detail)`` stores one PASS/FAIL line for criterion ``n``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
