import numpy as np
import pytest

from dirac_qpm.problem import PotentialSpec

BENCHMARKS = {
    "coulomb": PotentialSpec.coulomb(-0.5),
    "subcoulomb": PotentialSpec.subcoulomb(-0.5, 0.5),
    "invharm": PotentialSpec.inverse_harmonic(-4.0),
}


@pytest.fixture(params=sorted(BENCHMARKS))
def benchmark_potential(request):
    return BENCHMARKS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.fixture
def acceptance():
    def record(label, passed, detail, expected_failure=False):
        status = "PASS" if passed else ("FAIL (expected, recorded)" if expected_failure else "FAIL")
        ACCEPTANCE[label] = (status, detail)
        print(f"{label}: {status} {detail}")
        return passed

    return record


def _order(label):
    head = label.split()[1]
    num = "".join(ch for ch in head if ch.isdigit())
    return (int(num) if num else 99, label)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=_order):
        status, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{label}: {status} {detail}")
