import json
from pathlib import Path

import pytest

from modcorr.seqgen import NAMED_CONSTANTS, Family, SequenceSpec

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def reference():
    with open(DATA / "reference.json") as fh:
        return json.load(fh)


def make_spec(family: str, alpha: str = "sqrt2", beta=None) -> SequenceSpec:
    return SequenceSpec(Family[family.upper()], NAMED_CONSTANTS[alpha], beta, alpha)


@pytest.fixture
def quad_sqrt2():
    return make_spec("quadratic", "sqrt2")


@pytest.fixture
def sqrt_sqrt3():
    return make_spec("sqrt", "sqrt3")


from hypothesis import settings  # noqa: E402

# first calls include numba compilation
settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


# acceptance criteria report one verdict line each; printed after the run
ACCEPTANCE: dict[int, str] = {}


def record_criterion(n: int, ok: bool, detail: str) -> str:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
