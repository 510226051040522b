import math

import numpy as np
import pytest
from hypothesis import settings

from lipkin_gcm import kernels, qsim, solver
from lipkin_gcm.model import LipkinParams

# timing varies with JIT warm-up and machine load; correctness is what is checked
settings.register_profile("lipkin", deadline=None)
settings.load_profile("lipkin")


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    def log(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" -- {detail}" if detail else "")
        request.config._acceptance_lines.append(line)
        print(line)
        return ok

    return log


@pytest.fixture(scope="session")
def warm_jit():
    """Trigger one-off numba compilation outside timed sections."""
    ob = kernels.estimate_one_body(kernels.make_grid(3), qsim.EstimatorConfig())
    mb = kernels.assemble_many_body(ob, LipkinParams(2, 1.0, 1.0))
    solver.gcm_vqd(mb, solver.VqdConfig(restarts=1))
    qsim.run_noisy(qsim.hadamard_test_circuit(0, 0, "I", "real"), qsim.NoiseParams())
    return True


@pytest.fixture(scope="session")
def exact_kernels():
    cache = {}

    def get(l_count):
        if l_count not in cache:
            cache[l_count] = kernels.estimate_one_body(kernels.make_grid(l_count), qsim.EstimatorConfig())
        return cache[l_count]

    return get


def random_hermitian(rng, size, complex_=True):
    a = rng.normal(size=(size, size))
    if complex_:
        a = a + 1j * rng.normal(size=(size, size))
    return 0.5 * (a + a.conj().T)


ANGLES = dict(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False, allow_infinity=False)
