"""Weyl sums S(N, k) = sum_{y<=N} e(k a(y)) and the error functional built on them.

Two evaluators:

``weyl_sum_direct``
    one k at a time, every phase from :func:`modcorr.seqgen.phases_dd`,
    compensated accumulation.  Authoritative.
``weyl_magnitudes``
    all k = 0..K at once.  Uses {k x_n} = {k {a(n)}} for integer k: each n
    carries z = e(x_n) and w = z**k is advanced by complex multiplication,
    re-seeded from the exact double-double phase every ``_RESEED`` steps so the
    recurrence error stays at a few dozen ulps.

Both partition n into a fixed number of lanes and combine lanes in a fixed
order, so results do not depend on the thread count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from modcorr.dd import dd_frac, two_prod
from modcorr.errors import CostGuardError, ModcorrError, PreconditionError
from modcorr.seqgen import Family, SequenceSpec, _phase_dd, phases_dd

TWO_PI = 2.0 * math.pi
MAX_TUPLE_VISITS = 1e9
_LANES = 64
_BLOCK = 256
_RESEED = 64


@dataclass(frozen=True)
class WeylSumRecord:
    spec: SequenceSpec
    N: int
    k: int
    value: complex
    method: str  # "direct" or "bprocess"
    elapsed: float
    error_bound: float = 0.0

    @property
    def magnitude(self) -> float:
        return abs(self.value)


@njit(cache=True, inline="always")
def _neumaier(s, c, v):
    t = s + v
    if abs(s) >= abs(v):
        c += (s - t) + v
    else:
        c += (v - t) + s
    return t, c


@njit(parallel=True, cache=True)
def _direct_kernel(family, ah, al, beta, N, k):
    out = np.zeros((_LANES, 4))
    errs = np.zeros(_LANES)
    for lane in prange(_LANES):
        lo = 1 + lane * N // _LANES
        hi = 1 + (lane + 1) * N // _LANES
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        emax = 0.0
        for n in range(lo, hi):
            fh, fl, er = _phase_dd(family, ah, al, beta, n, k)
            ang = TWO_PI * fh
            sr, cr = _neumaier(sr, cr, math.cos(ang))
            si, ci = _neumaier(si, ci, math.sin(ang))
            if er > emax:
                emax = er
        out[lane, 0] = sr
        out[lane, 1] = cr
        out[lane, 2] = si
        out[lane, 3] = ci
        errs[lane] = emax
    return out, errs.max()


def weyl_sum_direct(spec: SequenceSpec, N: int, k: int) -> WeylSumRecord:
    """S(N, k) by summing every term.

    ``error_bound`` combines the certified phase error with per-term rounding.
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    # validates k, N and precision on the extreme term before the full pass
    phases_dd(spec, np.array([N]), k)
    t0 = time.perf_counter()
    if k == 0:
        return WeylSumRecord(spec, N, 0, complex(N), "direct", time.perf_counter() - t0)
    beta = float(spec.beta) if spec.beta is not None else 0.0
    parts, err = _direct_kernel(int(spec.family), spec.alpha.hi, spec.alpha.lo, beta, int(N), int(k))
    if err > 1e-10:
        from modcorr.errors import PrecisionLossError

        raise PrecisionLossError(f"phase error bound {err:.3g} exceeds 1e-10 for k = {k}, N = {N}")
    re = math.fsum(parts[:, :2].ravel().tolist())
    im = math.fsum(parts[:, 2:].ravel().tolist())
    bound = N * (TWO_PI * err + 8e-16)
    return WeylSumRecord(spec, N, k, complex(re, im), "direct", time.perf_counter() - t0, bound)


@njit(parallel=True, cache=True)
def _scan_kernel(xh, xl, kmax):
    n_tot = xh.size
    acc = np.zeros((_LANES, kmax + 1, 4))
    for lane in prange(_LANES):
        lo = lane * n_tot // _LANES
        hi = (lane + 1) * n_tot // _LANES
        zr = np.empty(_BLOCK)
        zi = np.empty(_BLOCK)
        wr = np.empty(_BLOCK)
        wi = np.empty(_BLOCK)
        for b0 in range(lo, hi, _BLOCK):
            b1 = min(b0 + _BLOCK, hi)
            nb = b1 - b0
            for j in range(nb):
                ang = TWO_PI * xh[b0 + j]
                zr[j] = math.cos(ang)
                zi[j] = math.sin(ang)
                wr[j] = zr[j]
                wi[j] = zi[j]
            for k in range(1, kmax + 1):
                if k % _RESEED == 0:
                    fk = float(k)
                    for j in range(nb):
                        p, e = two_prod(xh[b0 + j], fk)
                        fh, fl = dd_frac(p, e + xl[b0 + j] * fk)
                        ang = TWO_PI * fh
                        wr[j] = math.cos(ang)
                        wi[j] = math.sin(ang)
                r0 = 0.0
                r1 = 0.0
                i0 = 0.0
                i1 = 0.0
                j = 0
                while j + 1 < nb:
                    r0 += wr[j]
                    i0 += wi[j]
                    r1 += wr[j + 1]
                    i1 += wi[j + 1]
                    j += 2
                if j < nb:
                    r0 += wr[j]
                    i0 += wi[j]
                s, c = _neumaier(acc[lane, k, 0], acc[lane, k, 1], r0 + r1)
                acc[lane, k, 0] = s
                acc[lane, k, 1] = c
                s, c = _neumaier(acc[lane, k, 2], acc[lane, k, 3], i0 + i1)
                acc[lane, k, 2] = s
                acc[lane, k, 3] = c
                for j in range(nb):
                    a = wr[j] * zr[j] - wi[j] * zi[j]
                    wi[j] = wr[j] * zi[j] + wi[j] * zr[j]
                    wr[j] = a
    out_r = np.zeros(kmax + 1)
    out_i = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        for lane in range(_LANES):
            sr, cr = _neumaier(sr, cr, acc[lane, k, 0])
            sr, cr = _neumaier(sr, cr, acc[lane, k, 1])
            si, ci = _neumaier(si, ci, acc[lane, k, 2])
            si, ci = _neumaier(si, ci, acc[lane, k, 3])
        out_r[k] = sr + cr
        out_i[k] = si + ci
    out_r[0] = float(n_tot)
    return out_r, out_i


def weyl_sums(spec: SequenceSpec, N: int, k_max: int) -> np.ndarray:
    """Complex S(N, k) for k = 0..k_max (index k)."""
    if N < 1 or k_max < 0:
        raise PreconditionError("need N >= 1 and k_max >= 0")
    # validate precision at the largest k up front
    phases_dd(spec, np.array([N]), max(k_max, 1))
    xh, xl, _ = phases_dd(spec, np.arange(1, N + 1, dtype=np.int64), 1)
    re, im = _scan_kernel(xh, xl, int(k_max))
    return re + 1j * im


def weyl_magnitudes(spec: SequenceSpec, N: int, k_max: int) -> np.ndarray:
    """|S(N, k)| for k = 0..k_max; entry 0 is exactly N."""
    mags = np.abs(weyl_sums(spec, N, k_max))
    mags[0] = float(N)
    return mags


@dataclass(frozen=True)
class WeylScan:
    spec: SequenceSpec
    N: int
    k_max: int
    magnitudes: np.ndarray  # |S(N,k)|, k = 1..k_max
    sum_abs: np.ndarray  # prefix sums over k <= M of |S|
    sum_sq: np.ndarray  # prefix sums over k <= M of |S|^2
    elapsed: float = field(default=0.0, compare=False)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(1, self.k_max + 1)


def weyl_scan(spec: SequenceSpec, N: int, k_max: int) -> WeylScan:
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    t0 = time.perf_counter()
    mags = weyl_magnitudes(spec, N, k_max)[1:]
    return WeylScan(spec, N, k_max, mags, np.cumsum(mags), np.cumsum(mags * mags), time.perf_counter() - t0)


def _k_range(M: float) -> int:
    """Largest integer k with |k| < 2M."""
    return int(math.ceil(2.0 * M)) - 1


@njit(parallel=True, cache=True)
def _nested_kernel(mags, dim, K):
    """sum over 0 != k in [-K, K]^dim of |S(d(k))| prod |S(k_i)|, d(k) = -sum k_i."""
    width = 2 * K + 1
    parts = np.zeros((width, 2))
    for i0 in prange(width):
        k = np.empty(dim, dtype=np.int64)
        k[0] = i0 - K
        for i in range(1, dim):
            k[i] = -K
        s = 0.0
        c = 0.0
        while True:
            allzero = True
            prod = 1.0
            d = 0
            for i in range(dim):
                if k[i] != 0:
                    allzero = False
                prod *= mags[abs(k[i])]
                d -= k[i]
            if not allzero:
                s, c = _neumaier(s, c, prod * mags[abs(d)])
            # odometer over coordinates 1..dim-1
            i = dim - 1
            while i >= 1:
                k[i] += 1
                if k[i] <= K:
                    break
                k[i] = -K
                i -= 1
            if i < 1:
                break
        parts[i0, 0] = s
        parts[i0, 1] = c
    return parts


def weyl_product_sum(mags: np.ndarray, dim: int, K: int) -> float:
    """Nested Weyl-product sum over k in Z^dim \\ {0}, |k_i| <= K."""
    if dim == 0:
        return 0.0
    if (2 * K + 1) ** dim > MAX_TUPLE_VISITS:
        raise CostGuardError(f"{(2 * K + 1) ** dim:.3g} tuples exceed {MAX_TUPLE_VISITS:.0e}; use a smaller M or m")
    if mags.size <= dim * K:
        raise PreconditionError(f"need |S| up to k = {dim * K}, have {mags.size - 1}")
    parts = _nested_kernel(np.ascontiguousarray(mags, dtype=np.float64), dim, K)
    return math.fsum(parts.ravel().tolist())


@dataclass(frozen=True)
class ErrorTermReport:
    """Weyl-sum bounds on the error of the m-level correlation.

    ``per_level`` holds (j, E_j) with E_j = W_j / N**(1 + tau (j-1)), W_j the
    nested product sum at level j.  ``E_m_rhs`` = W_m / N**m is E_m divided by
    the main-term size N**((m-1)(1-tau)); ``combined`` is the same
    normalisation of E_m + (M / N**tau) E_{m-1}.
    """

    m: int
    N: int
    M: float
    tau: float
    E_m_rhs: float
    combined: float
    per_level: tuple[tuple[int, float], ...]
    elapsed: float = 0.0


def error_term_rhs(spec: SequenceSpec, m: int, N: int, M: float, tau: float, mags: np.ndarray | None = None) -> ErrorTermReport:
    if m not in (2, 3, 4):
        raise PreconditionError(f"m must be 2, 3 or 4, got {m}")
    if not 0.0 < tau < 1.0:
        raise PreconditionError(f"tau must lie in (0, 1), got {tau}")
    if M <= 0:
        raise PreconditionError("M must be positive")
    K = _k_range(M)
    if (2 * K + 1) ** (m - 1) > MAX_TUPLE_VISITS:
        raise CostGuardError(f"{(2 * K + 1) ** (m - 1):.3g} tuples exceed {MAX_TUPLE_VISITS:.0e}; use a smaller M or m")
    t0 = time.perf_counter()
    need = (m - 1) * K
    if mags is None:
        mags = weyl_magnitudes(spec, N, need)
    w_m = weyl_product_sum(mags, m - 1, K)
    w_prev = weyl_product_sum(mags, m - 2, K)
    Nf = float(N)
    e_m = w_m / Nf ** (1.0 + tau * (m - 1))
    e_prev = w_prev / Nf ** (1.0 + tau * (m - 2))
    main = Nf ** ((m - 1) * (1.0 - tau))
    combined = (e_m + (M / Nf**tau) * e_prev) / main
    return ErrorTermReport(
        m, N, float(M), tau, w_m / Nf**m, combined, ((m, e_m), (m - 1, e_prev)), time.perf_counter() - t0
    )


def theorem_threshold(spec: SequenceSpec, m: int) -> float | None:
    """Largest tau covered by the convergence theorem for this family (minus epsilon)."""
    if spec.family is Family.QUADRATIC:
        return m / (2.0 * m - 2.0)
    if spec.family is Family.SQRT:
        return 3.0 * m / (6.0 * m - 4.0)
    return None


@dataclass(frozen=True)
class ThresholdRow:
    tau: float
    N: int
    M: float
    threshold: float | None
    inside: bool | None
    report: ErrorTermReport | None
    error: str = ""


def threshold_scan(spec: SequenceSpec, m: int, tau_list, N_grid) -> list[ThresholdRow]:
    """Normalised error functional on a (tau, N) grid, flagged inside/outside the proven range."""
    thr = theorem_threshold(spec, m)
    rows = []
    for tau in tau_list:
        tau = float(tau)
        for N in (int(n) for n in N_grid):
            M = float(N) ** tau
            inside = None if thr is None else tau < thr
            try:
                rep = error_term_rhs(spec, m, N, M, tau)
            except ModcorrError as exc:
                rows.append(ThresholdRow(tau, N, M, thr, inside, None, f"{type(exc).__name__}: {exc}"))
            else:
                rows.append(ThresholdRow(tau, N, M, thr, inside, rep))
    return rows
