"""Long-range m-level correlations

    R(N, f, tau) = (1/N) * sum over distinct j in {1..N}^m of
                   prod_i f_i(N**tau * delta_i),

where delta_i is the torus-nearest representative (in [-1/2, 1/2)) of
x_{j_{i+1}} - x_{j_i}.  The support condition radius * N**-tau <= 1/2 makes that
representative the only integer shift that can contribute.

``correlation_windowed`` sorts the points once and walks, coordinate by
coordinate, only the neighbours inside each factor's support window, so its
cost is proportional to the number of contributing tuples.
``correlation_bruteforce`` is the literal m-fold loop and serves as the oracle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from modcorr.errors import CostGuardError, ModcorrError, PreconditionError
from modcorr.seqgen import PointSet, SequenceSpec, generate_points
from modcorr.testfn import TestFunctionProduct, eval_factor

BRUTE_N_MAX = 2000
MAX_TUPLE_VISITS = 1e10
_NBLOCKS = 256
_WINDOW_PAD = 1e-13


@dataclass(frozen=True)
class CorrelationRequest:
    spec: SequenceSpec | None
    m: int
    tau: float
    N: int
    f: TestFunctionProduct
    points: PointSet | None = None  # overrides spec when given

    def __post_init__(self):
        if self.m < 2:
            raise PreconditionError(f"m must be >= 2, got {self.m}")
        if not 0.0 <= self.tau < 1.0:
            raise PreconditionError(f"tau must lie in [0, 1), got {self.tau}")
        if self.f.dim != self.m - 1:
            raise PreconditionError(f"test function has {self.f.dim} factors, need m - 1 = {self.m - 1}")
        if self.points is None:
            if self.spec is None:
                raise PreconditionError("need a sequence spec or an explicit point set")
            if self.N < 1:
                raise PreconditionError("N must be >= 1")
        elif len(self.points) != self.N:
            raise PreconditionError(f"point set has {len(self.points)} points, N = {self.N}")
        check_support(self.f, self.N, self.tau)

    @property
    def scale(self) -> float:
        return float(self.N) ** self.tau

    def get_points(self) -> PointSet:
        if self.points is not None:
            return self.points
        return generate_points(self.spec, self.N)


def check_support(f: TestFunctionProduct, N: int, tau: float):
    """Reject supports wider than half the torus after rescaling."""
    reach = f.radius / float(N) ** tau
    if reach > 0.5:
        raise PreconditionError(
            f"support too wide: radius {f.radius:g} * N^-tau (N={N}, tau={tau:g}) = {reach:.4g} > 1/2"
        )


@dataclass(frozen=True)
class CorrelationReport:
    N: int
    m: int
    tau: float
    fn_label: str
    value: float
    poisson_target: float
    ratio: float
    n_tuples_counted: int
    elapsed: float


def poisson_target(m: int, N: int, tau: float, f) -> float:
    """N**((m-1)(1-tau)) times the integral of f (``f`` may be a number)."""
    mass = f if isinstance(f, (int, float)) else f.integral
    return float(N) ** ((m - 1) * (1.0 - tau)) * mass


@njit(cache=True, inline="always")
def _torus_diff(a, b):
    d = a - b
    return d - np.floor(d + 0.5)


@njit(parallel=True, cache=True)
def _windowed_kernel(xs, scale, kinds, p1, p2, wlo, whi, m):
    n = xs.size
    sums = np.zeros(_NBLOCKS)
    comps = np.zeros(_NBLOCKS)
    counts = np.zeros(_NBLOCKS, dtype=np.int64)
    for blk in prange(_NBLOCKS):
        chain = np.empty(m, dtype=np.int64)
        cur = np.empty(m, dtype=np.int64)
        end = np.empty(m, dtype=np.int64)
        prod = np.empty(m)
        s = 0.0
        c = 0.0
        cnt = 0
        for p in range(blk * n // _NBLOCKS, (blk + 1) * n // _NBLOCKS):
            chain[0] = p
            prod[0] = 1.0
            level = 1
            cur[1] = wlo[0, p]
            end[1] = whi[0, p]
            while level >= 1:
                if cur[level] >= end[level]:
                    level -= 1
                    continue
                q = cur[level] % n
                cur[level] += 1
                dup = False
                for t in range(level):
                    if chain[t] == q:
                        dup = True
                        break
                if dup:
                    continue
                coord = level - 1
                d = _torus_diff(xs[q], xs[chain[coord]])
                v = eval_factor(kinds[coord], p1[coord], p2[coord], scale * d)
                if v == 0.0:
                    continue
                v *= prod[coord]
                if level == m - 1:
                    # Neumaier summation
                    t2 = s + v
                    if abs(s) >= abs(v):
                        c += (s - t2) + v
                    else:
                        c += (v - t2) + s
                    s = t2
                    cnt += 1
                else:
                    chain[level] = q
                    prod[level] = v
                    level += 1
                    cur[level] = wlo[coord + 1, q]
                    end[level] = whi[coord + 1, q]
        sums[blk] = s
        comps[blk] = c
        counts[blk] = cnt
    return sums, comps, counts


def _windows(xs: np.ndarray, scale: float, f: TestFunctionProduct):
    """Index ranges into the tripled array (xs - 1, xs, xs + 1) per coordinate."""
    n = xs.size
    ext = np.concatenate([xs - 1.0, xs, xs + 1.0])
    wlo = np.empty((f.dim, n), dtype=np.int64)
    whi = np.empty((f.dim, n), dtype=np.int64)
    for c, fac in enumerate(f.factors):
        lo, hi = fac.support
        # delta = x_nbr - x_anchor in [lo, hi] / scale
        wlo[c] = np.searchsorted(ext, xs + lo / scale - _WINDOW_PAD, side="left")
        whi[c] = np.minimum(np.searchsorted(ext, xs + hi / scale + _WINDOW_PAD, side="right"), wlo[c] + n)
    return wlo, whi


def estimated_tuples(f: TestFunctionProduct, N: int, tau: float) -> float:
    """Expected number of window visits for uniformly spread points."""
    scale = float(N) ** tau
    est = float(N)
    for fac in f.factors:
        lo, hi = fac.support
        est *= min(N, N * (hi - lo) / scale + 2)
    return est


def correlation_windowed(req: CorrelationRequest) -> CorrelationReport:
    est = estimated_tuples(req.f, req.N, req.tau)
    if est > MAX_TUPLE_VISITS:
        raise CostGuardError(f"about {est:.3g} tuple visits expected (limit {MAX_TUPLE_VISITS:.0e}); lower N, m or the support")
    t0 = time.perf_counter()
    pts = req.get_points().sorted_copy()
    xs = np.ascontiguousarray(pts.values)
    scale = req.scale
    wlo, whi = _windows(xs, scale, req.f)
    kinds, p1, p2 = req.f.arrays()
    sums, comps, counts = _windowed_kernel(xs, scale, kinds, p1, p2, wlo, whi, req.m)
    value = math.fsum(np.concatenate([sums, comps]).tolist()) / req.N
    return _report(req, value, int(counts.sum()), time.perf_counter() - t0)


def _report(req, value, count, elapsed):
    target = poisson_target(req.m, req.N, req.tau, req.f)
    ratio = value / target if target != 0.0 else math.nan
    return CorrelationReport(req.N, req.m, req.tau, req.f.label, value, target, ratio, count, elapsed)


@njit(cache=True)
def _brute_kernel(x, scale, kinds, p1, p2, m):
    n = x.size
    s = 0.0
    c = 0.0
    cnt = 0
    for a in range(n):
        for b in range(n):
            if b == a:
                continue
            v1 = eval_factor(kinds[0], p1[0], p2[0], scale * _torus_diff(x[b], x[a]))
            if m == 2:
                terms = 1
            else:
                terms = n
            for cidx in range(terms):
                if m == 2:
                    v = v1
                else:
                    if cidx == a or cidx == b:
                        continue
                    v = v1 * eval_factor(kinds[1], p1[1], p2[1], scale * _torus_diff(x[cidx], x[b]))
                if v == 0.0:
                    continue
                t2 = s + v
                if abs(s) >= abs(v):
                    c += (s - t2) + v
                else:
                    c += (v - t2) + s
                s = t2
                cnt += 1
    return s + c, cnt


def correlation_bruteforce(req: CorrelationRequest) -> float:
    """Full m-fold loop over distinct indices (N <= 2000, m <= 3)."""
    if req.N > BRUTE_N_MAX or req.m > 3:
        raise CostGuardError(f"brute force limited to N <= {BRUTE_N_MAX}, m <= 3 (got N={req.N}, m={req.m})")
    x = np.ascontiguousarray(req.get_points().values)
    kinds, p1, p2 = req.f.arrays()
    total, _ = _brute_kernel(x, req.scale, kinds, p1, p2, req.m)
    return total / req.N


@dataclass(frozen=True)
class ScanRow:
    N: int
    report: CorrelationReport | None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.report is not None


def convergence_scan(spec: SequenceSpec, m: int, tau: float, f: TestFunctionProduct, N_grid) -> list[ScanRow]:
    """One report per N (ascending); failures are recorded per row."""
    grid = [int(n) for n in N_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("N_grid must be strictly ascending")
    rows = []
    for N in grid:
        try:
            rep = correlation_windowed(CorrelationRequest(spec, m, tau, N, f))
        except ModcorrError as exc:
            rows.append(ScanRow(N, None, f"{type(exc).__name__}: {exc}"))
        else:
            rows.append(ScanRow(N, rep))
    return rows
