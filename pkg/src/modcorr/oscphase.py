"""Oscillatory integrals with phase h(x) = k alpha sqrt(x) - r x and the B-process.

h'(x) = k alpha / (2 sqrt x) - r and h''(x) = -k alpha / (4 x**1.5), so h is
concave with a single stationary point gamma = (k alpha / (2 r))**2 when
r > 0.  At gamma

    h(gamma)   = (k alpha)**2 / (4 r)
    h''(gamma) = -2 r**3 / (k alpha)**2

and the stationary-phase leading term is e(h(gamma) - 1/8) / sqrt|h''(gamma)|.

``bprocess_sum`` replaces the N-term Weyl sum for a(n) = alpha sqrt(n) by the
O(k) sum of these leading terms over the integers r in the range of f'(x) =
k alpha / (2 sqrt x) on [1, N].

``oscillatory_integral_direct`` is the quadrature oracle used to validate the
leading terms: panels on which h moves by at most 1/2, a Gauss-Legendre rule
on each, panel halving as the error estimate.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit, prange

from modcorr.dd import Real2, dd_add, dd_div_d, dd_frac, dd_mul, dd_mul_d, dd_sqrt, two_prod
from modcorr.errors import CostGuardError, PrecisionLossError, PreconditionError
from modcorr.seqgen import Family, SequenceSpec
from modcorr.weyl import WeylSumRecord

MAX_PANELS = 10**7
ENVELOPE_C1 = 5.0
ENVELOPE_C2 = 5.0
BUDGET_C = 5.0
TWO_PI = 2.0 * math.pi
_GL_NODES = 12
_BISECT_ITERS = 80
_MAX_REFINE = 40


def _as_real2(alpha) -> Real2:
    return alpha if isinstance(alpha, Real2) else Real2(float(alpha))


def _check_kr(k: int, r: int):
    if int(k) != k or int(r) != r:
        raise PreconditionError("k and r must be integers")


# ---------------------------------------------------------------------------
# quadrature oracle


@njit(parallel=True, cache=True)
def _panel_rule(lo, hi, kah, kal, r, nodes, weights):
    """Gauss-Legendre on each panel and on its two halves.

    Returns (whole, halves) complex arrays.  The phase at a node x of a panel
    starting at x0 is {h(x0)} (double-double) plus h(x) - h(x0) evaluated in
    the cancellation-free form k alpha (x - x0) / (sqrt x + sqrt x0) - r (x - x0).
    """
    npan = lo.size
    whole = np.empty(npan, dtype=np.complex128)
    halves = np.empty(npan, dtype=np.complex128)
    rf = float(r)
    for p in prange(npan):
        x0 = lo[p]
        s0h, s0l = dd_sqrt(x0, 0.0)
        bh, bl = dd_mul(kah, kal, s0h, s0l)
        th, tl = two_prod(rf, x0)
        bh, bl = dd_add(bh, bl, -th, -tl)
        base, _ = dd_frac(bh, bl)
        sq0 = math.sqrt(x0)
        width = hi[p] - x0
        for part in range(3):
            # nodes in coordinates local to x0 so their spacing stays exact
            if part == 0:
                a = 0.0
                b = width
            elif part == 1:
                a = 0.0
                b = 0.5 * width
            else:
                a = 0.5 * width
                b = width
            c = 0.5 * (b - a)
            sr = 0.0
            si = 0.0
            for j in range(nodes.size):
                dx = a + c * (1.0 + nodes[j])
                off = kah * dx / (math.sqrt(x0 + dx) + sq0) - rf * dx
                ang = TWO_PI * (base + off)
                sr += weights[j] * math.cos(ang)
                si += weights[j] * math.sin(ang)
            val = complex(sr * c, si * c)
            if part == 0:
                whole[p] = val
            elif part == 1:
                halves[p] = val
            else:
                halves[p] += val
    return whole, halves


def _h_offset(ka: float, r: float, x0: float, x: np.ndarray) -> np.ndarray:
    dx = x - x0
    return ka * dx / (np.sqrt(x) + math.sqrt(x0)) - r * dx


def _monotone_breaks(ka: float, r: float, p: float, q: float) -> np.ndarray:
    """Points in [p, q] where h has moved by a multiple of 1/2 from h(p); h monotone on [p, q]."""
    total = float(_h_offset(ka, r, p, np.array([q]))[0])
    steps = int(math.ceil(abs(total) / 0.5 - 1e-12))
    if steps > MAX_PANELS:
        raise CostGuardError(f"{steps} panels needed (limit {MAX_PANELS}); use the B-process at this scale")
    if steps <= 1:
        return np.array([p, q])
    sign = 1.0 if total > 0 else -1.0
    return _bisect_breaks(ka, r, p, q, sign, steps)


@njit(cache=True)
def _bisect_breaks(ka, r, p, q, sign, steps):
    out = np.empty(steps + 1)
    out[0] = p
    out[steps] = q
    sp = math.sqrt(p)
    for j in range(1, steps):
        target = sign * 0.5 * j
        lo = p
        hi = q
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            dx = mid - p
            if sign * (ka * dx / (math.sqrt(mid) + sp) - r * dx) < target * sign:
                lo = mid
            else:
                hi = mid
        out[j] = 0.5 * (lo + hi)
    return out


def oscillatory_integral_direct(k: int, r: int, alpha, a: float, b: float, tol: float = 1e-10) -> complex:
    """Integral over [a, b] of e(k alpha sqrt(x) - r x) by panel quadrature.

    Raises
    ------
    CostGuardError
        if more than ``MAX_PANELS`` panels would be needed.
    """
    _check_kr(k, r)
    if not 1.0 <= a < b:
        raise PreconditionError(f"need 1 <= a < b, got [{a}, {b}]")
    if not tol >= 1e-12:
        raise PreconditionError(f"tol must be >= 1e-12, got {tol}")
    al = _as_real2(alpha)
    kah, kal = dd_mul_d(al.hi, al.lo, float(k))
    ka = kah
    rf = float(r)
    cuts = [float(a), float(b)]
    if ka != 0.0 and rf != 0.0 and (ka > 0) == (rf > 0):
        gamma = (ka / (2.0 * rf)) ** 2
        if a < gamma < b:
            cuts = [float(a), gamma, float(b)]
    edges = np.concatenate([_monotone_breaks(ka, rf, p, q)[:-1] for p, q in zip(cuts, cuts[1:])] + [[float(b)]])
    nodes, weights = np.polynomial.legendre.leggauss(_GL_NODES)
    lo, hi = edges[:-1], edges[1:]
    done = 0j
    length = float(b) - float(a)
    for _ in range(_MAX_REFINE):
        if lo.size > MAX_PANELS:
            raise CostGuardError(f"{lo.size} panels exceed {MAX_PANELS}; use the B-process at this scale")
        whole, halves = _panel_rule(lo, hi, kah, kal, r, nodes, weights)
        err = np.abs(whole - halves)
        share = tol * (hi - lo) / length
        ok = err <= share
        done += complex(math.fsum(halves[ok].real.tolist()), math.fsum(halves[ok].imag.tolist()))
        if ok.all():
            return done
        mid = 0.5 * (lo[~ok] + hi[~ok])
        lo, hi = np.concatenate([lo[~ok], mid]), np.concatenate([mid, hi[~ok]])
    raise PrecisionLossError(f"quadrature did not reach tol {tol:g} after {_MAX_REFINE} refinements")


# ---------------------------------------------------------------------------
# stationary phase


@dataclass(frozen=True)
class OscillatoryIntegral:
    k: int
    r: int
    alpha: Real2
    N: int
    gamma: float | None
    h_at_gamma: float  # reduced mod 1
    hpp_at_gamma: float
    leading: complex
    envelope: float


@njit(cache=True)
def _leading_terms(kah, kal, rs):
    """e({(k alpha)**2 / (4 r)} - 1/8) * (k alpha) / sqrt(2 r**3) for each r."""
    sqh, sql = dd_mul(kah, kal, kah, kal)
    out = np.empty(rs.size, dtype=np.complex128)
    hfrac = np.empty(rs.size)
    for i in range(rs.size):
        r = float(rs[i])
        qh, ql = dd_div_d(sqh, sql, 4.0 * r)
        fh, fl = dd_frac(qh, ql)
        hfrac[i] = fh
        amp = kah / math.sqrt(2.0 * r * r * r)
        ang = TWO_PI * ((fh - 0.125) + fl)
        out[i] = complex(amp * math.cos(ang), amp * math.sin(ang))
    return out, hfrac


def stationary_envelope(k: int, r: int, alpha, N: int) -> float:
    """Error budget for the leading term over [1, N]: endpoint terms plus curvature corrections."""
    ka = float(_as_real2(alpha)) * k
    h1 = abs(ka / 2.0 - r)
    hN = abs(ka / (2.0 * math.sqrt(N)) - r)
    ends = (1.0 / h1 if h1 > 0 else math.inf) + (1.0 / hN if hN > 0 else math.inf)
    return ENVELOPE_C1 * ends + ENVELOPE_C2 * (N**0.25 / k**1.5 + N**0.5 / k**2)


def stationary_phase_leading(k: int, r: int, alpha, N: int) -> OscillatoryIntegral:
    """Leading stationary-phase term of the integral over [1, N] of e(h(x)).

    Raises
    ------
    PreconditionError
        unless the stationary point lies strictly inside (1, N).
    """
    _check_kr(k, r)
    al = _as_real2(alpha)
    if k < 1 or al.hi <= 0.0:
        raise PreconditionError("need k >= 1 and alpha > 0")
    if N <= 1:
        raise PreconditionError("need N > 1")
    ka = float(al) * k
    lo_r, hi_r = ka / (2.0 * math.sqrt(N)), ka / 2.0
    if not lo_r < r < hi_r:
        raise PreconditionError(
            f"no stationary point strictly inside (1, {N}) for r = {r}: need {lo_r:.6g} < r < {hi_r:.6g}"
        )
    kah, kal = dd_mul_d(al.hi, al.lo, float(k))
    lead, hfrac = _leading_terms(kah, kal, np.array([r], dtype=np.int64))
    gamma = (ka / (2.0 * r)) ** 2
    hpp = -2.0 * float(r) ** 3 / ka**2
    return OscillatoryIntegral(
        int(k), int(r), al, int(N), gamma, float(hfrac[0]), hpp, complex(lead[0]), stationary_envelope(k, r, al, N)
    )


# ---------------------------------------------------------------------------
# derivative tests


class BoundKind(enum.Enum):
    FIRST_DERIVATIVE = "first-derivative"
    KTH_DERIVATIVE = "kth-derivative"
    STATIONARY_ENVELOPE = "stationary-envelope"


@dataclass(frozen=True)
class BoundCertificate:
    kind: BoundKind
    value: float
    inputs: tuple  # (k, r, alpha, (a, b))
    order: int = 1


def derivative_test_bound(order: int, k: int, r: int, alpha, a: float, b: float) -> BoundCertificate:
    """Derivative-test bound (amplitude 1) on |integral over [a, b] of e(h)|."""
    _check_kr(k, r)
    if not 1.0 <= a < b:
        raise PreconditionError(f"need 1 <= a < b, got [{a}, {b}]")
    al = _as_real2(alpha)
    ka = float(al) * k
    inputs = (int(k), int(r), al, (float(a), float(b)))
    if order == 1:
        ha = ka / (2.0 * math.sqrt(a)) - r
        hb = ka / (2.0 * math.sqrt(b)) - r
        if ha * hb <= 0.0:
            raise PreconditionError(f"h' changes sign on [{a}, {b}] (stationary point inside); use order 2")
        return BoundCertificate(BoundKind.FIRST_DERIVATIVE, 1.0 / min(abs(ha), abs(hb)), inputs, 1)
    if order == 2:
        if ka <= 0.0:
            raise PreconditionError("order-2 test needs k alpha > 0")
        # |h''| >= k alpha / (4 b**1.5) on [a, b]
        return BoundCertificate(BoundKind.KTH_DERIVATIVE, math.sqrt(4.0 * b**1.5 / ka), inputs, 2)
    raise PreconditionError(f"order must be 1 or 2, got {order}")


# ---------------------------------------------------------------------------
# truncated Poisson summation and the B-process


class PoissonRange(NamedTuple):
    A: float
    B: float
    r_list: np.ndarray  # nonzero integers in (A - 1/4, B + 1/4)
    zero_included: bool


def truncated_poisson_range(k: int, alpha, N: int) -> PoissonRange:
    if k < 1:
        raise PreconditionError("k must be >= 1")
    ka = float(_as_real2(alpha)) * k
    A = ka / (2.0 * math.sqrt(N))
    B = ka / 2.0
    r_lo = math.floor(A - 0.25) + 1
    r_hi = math.ceil(B + 0.25) - 1
    rs = np.arange(max(r_lo, 1), r_hi + 1, dtype=np.int64)
    return PoissonRange(A, B, rs, r_lo <= 0 <= r_hi)


def bound_exponential(N: int, k: int, alpha=None) -> float:
    """k**(1/2) N**(1/4) + N**(3/4) k**(-1/2) log N."""
    if k < 1 or N < 2:
        raise PreconditionError("need k >= 1 and N >= 2")
    return math.sqrt(k) * N**0.25 + N**0.75 / math.sqrt(k) * math.log(N)


def bprocess_budget(N: int, k: int) -> float:
    """Error budget for :func:`bprocess_sum` before edge contributions."""
    logN = math.log(N)
    return BUDGET_C * (N**0.75 / math.sqrt(k) * logN + math.sqrt(N) / k + logN)


@dataclass(frozen=True)
class BProcessResult:
    record: WeylSumRecord
    error_budget: float
    n_terms: int
    edge_r: tuple[int, ...]


def bprocess_sum(spec: SequenceSpec, N: int, k: int) -> BProcessResult:
    """S(N, k) for a(n) = alpha sqrt(n) from O(k) stationary-phase terms.

    Interior r (A < r < B) contribute their exact leading term.  Edge r,
    within 1/4 of A or B, and the r = 0 integral only enter the error budget
    through derivative-test bounds.
    """
    if spec.family is not Family.SQRT:
        raise PreconditionError(f"B-process is implemented for the Sqrt family only, got {spec.family.name}")
    if k < 1 or N < 2:
        raise PreconditionError("need k >= 1 and N >= 2")
    t0 = time.perf_counter()
    al = spec.alpha
    if al.hi < 0:
        # S(N, k) for -alpha is the conjugate of S(N, k) for alpha
        flipped = SequenceSpec(Family.SQRT, -al, label=spec.label)
        res = bprocess_sum(flipped, N, k)
        rec = res.record
        return BProcessResult(
            WeylSumRecord(spec, N, k, rec.value.conjugate(), "bprocess", time.perf_counter() - t0, res.error_budget),
            res.error_budget,
            res.n_terms,
            res.edge_r,
        )
    pr = truncated_poisson_range(k, al, N)
    interior = pr.r_list[(pr.r_list > pr.A) & (pr.r_list < pr.B)]
    edges = tuple(int(r) for r in pr.r_list if not pr.A < r < pr.B)
    kah, kal = dd_mul_d(al.hi, al.lo, float(k))
    lead, _ = _leading_terms(kah, kal, interior)
    value = complex(math.fsum(lead.real.tolist()), math.fsum(lead.imag.tolist()))
    budget = bprocess_budget(N, k)
    ka = float(al) * k
    for r in edges:
        budget += derivative_test_bound(2, k, r, al, 1.0, float(N)).value
    if pr.zero_included:
        budget += 2.0 * math.sqrt(N) / ka  # first-derivative bound, h' = f' >= k alpha / (2 sqrt N)
    rec = WeylSumRecord(spec, N, k, value, "bprocess", time.perf_counter() - t0, budget)
    return BProcessResult(rec, budget, int(interior.size), edges)


def endpoint_term_sum(k: int, alpha, N: int) -> float:
    """Sum over the Poisson range of min(1/|k alpha/2 - r|, N**(3/4) / k**(1/2))."""
    pr = truncated_poisson_range(k, alpha, N)
    ka = float(_as_real2(alpha)) * k
    cap = N**0.75 / math.sqrt(k)
    dist = np.abs(ka / 2.0 - pr.r_list.astype(np.float64))
    with np.errstate(divide="ignore"):
        terms = np.minimum(np.where(dist > 0, 1.0 / dist, np.inf), cap)
    return math.fsum(terms.tolist())


def tail_term_sum(k: int, alpha, N: int) -> float:
    """k * sum over the Poisson range of r**(-3/2)."""
    pr = truncated_poisson_range(k, alpha, N)
    return k * math.fsum((pr.r_list.astype(np.float64) ** -1.5).tolist())
