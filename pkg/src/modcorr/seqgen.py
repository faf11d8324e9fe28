"""Fractional parts x_n = {a(n)} and phases {k a(n)} with certified precision.

Three families are supported:

    Quadratic  a(n) = alpha * n**2
    Sqrt       a(n) = alpha * sqrt(n)
    Power      a(n) = alpha * n**beta, 0 < beta < 1

alpha is always a :class:`~modcorr.dd.Real2`.  Quadratic phases are computed
from the exact integer k*n**2 (split into 26-bit limbs) times the four 26-bit
pieces of alpha, so every partial product is exact and only the final
double-double sum rounds.  Sqrt and Power phases evaluate sqrt(n) resp. n**beta
in double-double and multiply by k*alpha before reducing mod 1.

Every phase carries an error bound; :class:`PrecisionLossError` is raised when
it exceeds ``PHASE_TOL``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from numba import njit, prange

from modcorr.dd import (
    Real2,
    dd_add,
    dd_add_d,
    dd_exp,
    dd_frac,
    dd_log,
    dd_mul,
    dd_mul_d,
    dd_sqrt,
    split,
)
from modcorr.errors import PrecisionLossError, PreconditionError

PHASE_TOL = 1e-10
K_MAX = 10**9
QUAD_N_MAX = 2**29

# 45-digit literals; rounded once to the nearest double-double.
SQRT2 = Real2.from_string("1.41421356237309504880168872420969807856967187538")
SQRT3 = Real2.from_string("1.73205080756887729352744634150587236694280525381")
GOLDEN = Real2.from_string("1.61803398874989484820458683436563811772030917981")
ONE = Real2(1.0)
HALF = Real2(0.5)

NAMED_CONSTANTS = {
    "sqrt2": SQRT2,
    "sqrt3": SQRT3,
    "golden": GOLDEN,
    "one": ONE,
    "half": HALF,
}


def parse_alpha(text: str) -> tuple[Real2, str]:
    """Parse a named constant (``sqrt2``) or a decimal / ``p/q`` literal.

    Returns the value and a canonical label suitable for reports.
    """
    key = text.strip().lower()
    if key in NAMED_CONSTANTS:
        return NAMED_CONSTANTS[key], key
    if "/" in key:
        try:
            q = Fraction(key)
        except (ValueError, ZeroDivisionError) as exc:
            raise PreconditionError(f"cannot parse alpha {text!r}") from exc
        return Real2.from_fraction(q), key
    try:
        return Real2.from_string(key), key
    except ArithmeticError as exc:
        raise PreconditionError(f"cannot parse alpha {text!r}") from exc


class Family(enum.IntEnum):
    QUADRATIC = 0
    SQRT = 1
    POWER = 2


@dataclass(frozen=True)
class SequenceSpec:
    family: Family
    alpha: Real2
    beta: float | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not isinstance(self.alpha, Real2):
            object.__setattr__(self, "alpha", Real2(float(self.alpha)))
        if self.alpha.hi == 0.0:
            raise PreconditionError("alpha must be nonzero")
        if self.family is Family.POWER:
            if self.beta is None or not (0.0 < self.beta < 1.0):
                raise PreconditionError(f"Power family needs 0 < beta < 1, got {self.beta}")
        if not self.label:
            object.__setattr__(self, "label", repr(self.alpha.hi))

    def describe(self) -> str:
        name = self.family.name.lower()
        if self.family is Family.POWER:
            return f"{name}(alpha={self.label},beta={self.beta!r})"
        return f"{name}(alpha={self.label})"


@dataclass(frozen=True)
class PointSet:
    """Fractional parts for n = 1..N, optionally sorted.

    ``permutation[i]`` is the index n (1-based) of ``values[i]``.
    """

    n_max: int
    values: np.ndarray
    sorted: bool = False
    permutation: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise PreconditionError("values must be one-dimensional")
        if values.size and (values.min() < 0.0 or values.max() >= 1.0):
            raise PreconditionError("point values must lie in [0, 1)")
        perm = self.permutation
        if perm is None:
            perm = np.arange(1, values.size + 1, dtype=np.int64)
        perm = np.array(perm, dtype=np.int64)
        values.flags.writeable = False
        perm.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "permutation", perm)

    @classmethod
    def from_values(cls, values) -> "PointSet":
        v = np.asarray(values, dtype=np.float64)
        return cls(n_max=v.size, values=v)

    def __len__(self):
        return self.values.size

    def sorted_copy(self) -> "PointSet":
        if self.sorted:
            return self
        order = np.argsort(self.values, kind="stable")
        return PointSet(self.n_max, self.values[order], True, self.permutation[order])


_M26 = (1 << 26) - 1
_TWO26 = float(2**26)
_TWO52 = float(2**52)
_TWO78 = float(2**78)
_EPS_SUM = 2.0**-90


@njit(cache=True)
def _phase_dd(family, ah, al, beta, n, k):
    """{k a(n)} as a double-double in [0, 1) plus a certified error bound."""
    if k == 0:
        return 0.0, 0.0, 0.0
    kk = k if k > 0 else -k
    if family == 0:
        nn = n * n
        b = nn & _M26
        a = nn >> 26
        c0 = kk * b
        c1 = kk * a
        l0 = c0 & _M26
        t = (c0 >> 26) + c1
        l1 = t & _M26
        t >>= 26
        l2 = t & _M26
        l3 = t >> 26
        a0, a1 = split(ah)
        a2, a3 = split(al)
        sh, sl = 0.0, 0.0
        for j in range(4):
            if j == 0:
                lf = float(l0)
            elif j == 1:
                lf = float(l1) * _TWO26
            elif j == 2:
                lf = float(l2) * _TWO52
            else:
                lf = float(l3) * _TWO78
            if lf == 0.0:
                continue
            for i in range(4):
                if i == 0:
                    part = a0
                elif i == 1:
                    part = a1
                elif i == 2:
                    part = a2
                else:
                    part = a3
                p = lf * part  # <= 52 significant bits: exact
                # exact reduction into (-1, 1); x - floor(x) is only exact for x >= 0
                if p >= 0.0:
                    p -= np.floor(p)
                else:
                    p = -(-p - np.floor(-p))
                sh, sl = dd_add_d(sh, sl, p)
        fh, fl = dd_frac(sh, sl)
        err = float(kk) * float(n) * float(n) * abs(ah) * 2.0**-104 + _EPS_SUM
    else:
        ch, cl = dd_mul_d(ah, al, float(kk))
        if family == 1:
            sh, sl = dd_sqrt(float(n), 0.0)
            rel = 2.0**-101
        else:
            lh, ll = dd_log(float(n), 0.0)
            lh, ll = dd_mul_d(lh, ll, beta)
            sh, sl = dd_exp(lh, ll)
            rel = 2.0**-98
        ph, pl = dd_mul(ch, cl, sh, sl)
        fh, fl = dd_frac(ph, pl)
        err = abs(ph) * rel + _EPS_SUM
    if k < 0 and (fh != 0.0 or fl != 0.0):
        fh, fl = dd_add(1.0, 0.0, -fh, -fl)
        if fh >= 1.0:
            fh, fl = 0.0, 0.0
    return fh, fl, err


_NBLOCKS = 64


@njit(parallel=True, cache=True)
def _phase_array(family, ah, al, beta, ns, k):
    m = ns.size
    out_h = np.empty(m)
    out_l = np.empty(m)
    errs = np.zeros(_NBLOCKS)
    for b in prange(_NBLOCKS):
        lo = b * m // _NBLOCKS
        hi = (b + 1) * m // _NBLOCKS
        e = 0.0
        for i in range(lo, hi):
            fh, fl, er = _phase_dd(family, ah, al, beta, ns[i], k)
            out_h[i] = fh
            out_l[i] = fl
            if er > e:
                e = er
        errs[b] = e
    return out_h, out_l, errs.max()


def _check_args(spec: SequenceSpec, n_hi: int, k: int):
    if abs(k) > K_MAX:
        raise PreconditionError(f"|k| = {abs(k)} exceeds {K_MAX}")
    if spec.family is Family.QUADRATIC and n_hi > QUAD_N_MAX:
        raise PreconditionError(f"Quadratic phases need n <= {QUAD_N_MAX}, got {n_hi}")
    if n_hi > 2**53:
        raise PreconditionError("n must be below 2**53")


def phases_dd(spec: SequenceSpec, ns, k: int = 1) -> tuple[np.ndarray, np.ndarray, float]:
    """Vectorised {k a(n)} as (hi, lo) arrays plus the largest error bound.

    Raises
    ------
    PrecisionLossError
        if the certified bound exceeds ``PHASE_TOL``.
    """
    ns = np.ascontiguousarray(ns, dtype=np.int64)
    if ns.size == 0:
        return np.empty(0), np.empty(0), 0.0
    if ns.min() < 1:
        raise PreconditionError("n must be >= 1")
    _check_args(spec, int(ns.max()), int(k))
    beta = float(spec.beta) if spec.beta is not None else 0.0
    hi, lo, err = _phase_array(int(spec.family), spec.alpha.hi, spec.alpha.lo, beta, ns, int(k))
    if err > PHASE_TOL:
        raise PrecisionLossError(
            f"phase error bound {err:.3g} exceeds {PHASE_TOL:g} "
            f"({spec.describe()}, n <= {ns.max()}, k = {k}); reduce k or N"
        )
    return hi, lo, float(err)


def phases(spec: SequenceSpec, ns, k: int = 1) -> np.ndarray:
    """Vectorised {k a(n)} rounded to double, in [0, 1)."""
    hi, _, _ = phases_dd(spec, ns, k)
    return hi


def phase_mod1(spec: SequenceSpec, n: int, k: int) -> float:
    """{k a(n)} for a single n (n >= 1)."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    return float(phases(spec, np.array([n]), k)[0])


def generate_points(spec: SequenceSpec, N: int) -> PointSet:
    """x_n = {a(n)} for n = 1..N in index order."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    values = phases(spec, np.arange(1, N + 1, dtype=np.int64), 1)
    return PointSet(n_max=N, values=values)


class Convergent(NamedTuple):
    p: int
    q: int
    quality: float  # q**2 * |alpha - p/q|
    exact: bool


def diophantine_quality(alpha: Real2, q_max: int) -> list[Convergent]:
    """Continued-fraction convergents p/q of alpha with q <= q_max.

    The expansion is done in exact rational arithmetic on hi + lo, so the
    list is meaningful while q**2 * |alpha| * 2**-106 stays far below the
    qualities themselves (q up to about 10**14 for constants of size 1).
    A convergent equal to alpha is reported with quality 0 and ``exact``.
    """
    if q_max < 1:
        raise PreconditionError("q_max must be >= 1")
    x = alpha.as_fraction()
    a0 = math.floor(x)
    p_prev, p = 1, a0
    q_prev, q = 0, 1
    rest = x - a0
    out = []
    while q <= q_max:
        gap = abs(x - Fraction(p, q))
        out.append(Convergent(p, q, float(q * q * gap), gap == 0))
        if rest == 0:
            break
        inv = 1 / rest
        a = math.floor(inv)
        rest = inv - a
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return out
