import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_spec
from modcorr.counting import count_window, count_windows, moment_exact, moment_scan
from modcorr.errors import PreconditionError
from modcorr.seqgen import PointSet

P3 = PointSet.from_values([0.1, 0.5, 0.9])


def test_count_window_examples():
    assert count_window(P3, 0.05, 0.1) == 1
    assert count_window(P3, 0.85, 0.3) == 2
    assert count_window(P3, 0.3, 1 - 1e-12) == 3


def test_count_window_closed_endpoints():
    assert count_window(P3, 0.1, 0.4) == 2
    assert count_window(P3, 0.9, 0.2) == 2  # 0.9 and wrapped 0.1


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(5)
    pts = PointSet.from_values(rng.random(300))
    Y = rng.random(200) * 3 - 1
    got = count_windows(pts, Y, 0.07)
    want = [count_window(pts, y, 0.07) for y in Y]
    assert list(got) == want


def test_moment_examples():
    assert moment_exact(PointSet.from_values([0.5]), 0.25, 3).exact_moment == pytest.approx(0.25, abs=1e-15)
    assert moment_exact(PointSet.from_values([0.1, 0.6]), 0.2, 2).exact_moment == pytest.approx(0.2, abs=1e-15)


def test_moment_wraparound():
    # window of width 0.3 covering both 0.05 and 0.95 for Y in [0.75, 0.95]
    pts = PointSet.from_values([0.05, 0.95])
    st2 = moment_exact(pts, 0.6, 2)
    # W = 2 on a set of measure 0.2, W = 1 on measure 0.6 - 2 * 0.2
    assert st2.exact_moment == pytest.approx(4 * 0.2 + 1 * 0.2, abs=1e-14)


@settings(max_examples=20)
@given(st.integers(1, 2000), st.floats(0.01, 0.9), st.integers(0, 10**6))
def test_first_moment_identity(N, frac, seed):
    pts = PointSet.from_values(np.random.default_rng(seed).random(N))
    L = frac * N
    assert moment_exact(pts, L, 1).exact_moment == pytest.approx(L, abs=1e-12 * max(1.0, L))


@settings(max_examples=20)
@given(st.integers(2, 500), st.floats(0.01, 0.9), st.integers(1, 4), st.integers(0, 10**6))
def test_moment_bounds(N, frac, m, seed):
    pts = PointSet.from_values(np.random.default_rng(seed).random(N))
    L = frac * N
    mom = moment_exact(pts, L, m).exact_moment
    assert mom >= L**m * (1 - 1e-12)  # Jensen
    assert mom <= N**m


def test_against_monte_carlo():
    rng = np.random.default_rng(17)
    pts = PointSet.from_values(rng.random(2000))
    L = 30.0
    for m in (2, 3):
        exact = moment_exact(pts, L, m).exact_moment
        samples = count_windows(pts, rng.random(10**5), L / 2000).astype(float) ** m
        se = samples.std() / np.sqrt(samples.size)
        assert abs(samples.mean() - exact) < 4 * se


def test_quadratic_second_moment_near_poisson():
    spec = make_spec("quadratic", "sqrt2")
    rows = moment_scan(spec, 2, 0.5, [10**5])
    assert 0.9 <= rows[0].stat.ratio <= 1.1


def test_first_moment_scan_is_one():
    spec = make_spec("sqrt", "sqrt3")
    for row in moment_scan(spec, 1, 0.4, [100, 1000, 10**4]):
        assert row.stat.ratio == pytest.approx(1.0, abs=1e-12)


def test_scan_marks_failures():
    spec = make_spec("sqrt", "sqrt3")
    rows = moment_scan(spec, 2, 1.5, [100])
    assert rows[0].stat is None and "tau" in rows[0].error


def test_width_precondition():
    with pytest.raises(PreconditionError):
        count_window(P3, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        moment_exact(P3, 3.0, 2)
