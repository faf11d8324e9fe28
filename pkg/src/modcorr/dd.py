"""Double-double ("Real2") arithmetic.

A value is carried as an unevaluated sum ``hi + lo`` of two doubles with
``|lo| <= ulp(hi)/2``, giving roughly 106 bits of significand.  The scalar
kernels below are numba-compiled and take/return plain ``(hi, lo)`` tuples so
they can be inlined into the vectorised phase and quadrature loops.

Error-free transformations follow Dekker and Knuth; they rely on strict IEEE
evaluation, so nothing in this module may be compiled with ``fastmath``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1


@njit(cache=True, inline="always")
def two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


@njit(cache=True, inline="always")
def quick_two_sum(a, b):
    # requires |a| >= |b| (or a == 0)
    s = a + b
    e = b - (s - a)
    return s, e


@njit(cache=True, inline="always")
def split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


@njit(cache=True, inline="always")
def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


@njit(cache=True, inline="always")
def dd_add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e += t
    s, e = quick_two_sum(s, e)
    e += f
    return quick_two_sum(s, e)


@njit(cache=True, inline="always")
def dd_add_d(ah, al, b):
    s, e = two_sum(ah, b)
    e += al
    return quick_two_sum(s, e)


@njit(cache=True, inline="always")
def dd_mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e += ah * bl + al * bh
    return quick_two_sum(p, e)


@njit(cache=True, inline="always")
def dd_mul_d(ah, al, b):
    p, e = two_prod(ah, b)
    e += al * b
    return quick_two_sum(p, e)


@njit(cache=True, inline="always")
def dd_div_d(ah, al, b):
    q1 = ah / b
    p, e = two_prod(q1, b)
    s, f = two_sum(ah, -p)
    f -= e
    f += al
    q2 = (s + f) / b
    return quick_two_sum(q1, q2)


@njit(cache=True, inline="always")
def dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = dd_mul_d(bh, bl, q1)
    rh, rl = dd_add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = dd_mul_d(bh, bl, q2)
    rh, rl = dd_add(rh, rl, -ph, -pl)
    q3 = rh / bh
    q1, q2 = quick_two_sum(q1, q2)
    return dd_add_d(q1, q2, q3)


@njit(cache=True, inline="always")
def dd_sqrt(ah, al):
    """Square root with one Newton correction on the hardware result."""
    if ah <= 0.0:
        return 0.0, 0.0
    s = math.sqrt(ah)
    p, e = two_prod(s, s)
    rh, rl = dd_add(ah, al, -p, -e)
    return quick_two_sum(s, rh / (2.0 * s))


@njit(cache=True, inline="always")
def dd_frac(h, l):
    """Fractional part of ``h + l`` as a normalised pair in [0, 1).

    A value within rounding of an integer from below may come out as (0, 0),
    which is the same point on the torus.
    """
    # np.floor stays in floating point; math.floor would go through int64
    fh = np.floor(h)
    fl = np.floor(l)
    a, b = two_sum(h, -fh)
    c, d = two_sum(l, -fl)
    s, e = dd_add(a, b, c, d)
    if s >= 1.0:
        s, e = dd_add_d(s, e, -1.0)
    if s < 0.0 or (s == 0.0 and e < 0.0):
        s, e = dd_add_d(s, e, 1.0)
    if s >= 1.0 or s < 0.0:
        s, e = 0.0, 0.0
    return s, e


_LN2_HI = 0.6931471805599453
_LN2_LO = 2.3190468138462996e-17


@njit(cache=True)
def dd_exp(ah, al):
    """exp in double-double: reduce by ln 2 and 2**10, Taylor, square back."""
    m = np.floor(ah / _LN2_HI + 0.5)
    ph, pl = dd_mul_d(_LN2_HI, _LN2_LO, m)
    rh, rl = dd_add(ah, al, -ph, -pl)
    rh *= 1.0 / 1024.0
    rl *= 1.0 / 1024.0
    # expm1(s) = s (1 + s/2 (1 + s/3 (1 + ...)))
    th, tl = 1.0, 0.0
    for i in range(12, 1, -1):
        th, tl = dd_mul(th, tl, rh, rl)
        th, tl = dd_div_d(th, tl, float(i))
        th, tl = dd_add_d(th, tl, 1.0)
    th, tl = dd_mul(th, tl, rh, rl)
    for _ in range(10):
        # (1 + t)^2 - 1 = 2t + t^2
        sh, sl = dd_mul(th, tl, th, tl)
        th, tl = dd_add(2.0 * th, 2.0 * tl, sh, sl)
    th, tl = dd_add_d(th, tl, 1.0)
    scale = 2.0 ** m
    return th * scale, tl * scale


@njit(cache=True)
def dd_log(ah, al):
    """Natural log via one Newton step y += x exp(-y) - 1."""
    y = math.log(ah)
    eh, el = dd_exp(-y, 0.0)
    th, tl = dd_mul(ah, al, eh, el)
    th, tl = dd_add_d(th, tl, -1.0)
    return dd_add_d(th, tl, y)


@dataclass(frozen=True)
class Real2:
    """A real number stored as a normalised double-double pair."""

    hi: float
    lo: float = 0.0

    def __post_init__(self):
        hi, lo = float(self.hi), float(self.lo)
        s = hi + lo
        e = lo - (s - hi)
        object.__setattr__(self, "hi", s)
        object.__setattr__(self, "lo", e)

    @classmethod
    def from_string(cls, text: str) -> "Real2":
        """Round a decimal literal (e.g. 40+ digits) to the nearest pair."""
        with localcontext() as ctx:
            ctx.prec = 80
            d = Decimal(text.strip())
            hi = float(d)
            lo = float(d - Decimal(hi))
        return cls(hi, lo)

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Real2":
        hi = float(q)
        return cls(hi, float(q - Fraction(hi)))

    def as_fraction(self) -> Fraction:
        """The exact rational value hi + lo."""
        return Fraction(self.hi) + Fraction(self.lo)

    def __float__(self):
        return self.hi

    def __neg__(self):
        return Real2(-self.hi, -self.lo)

    def __mul__(self, other):
        if isinstance(other, Real2):
            return Real2(*dd_mul(self.hi, self.lo, other.hi, other.lo))
        return Real2(*dd_mul_d(self.hi, self.lo, float(other)))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, Real2):
            return Real2(*dd_add(self.hi, self.lo, other.hi, other.lo))
        return Real2(*dd_add_d(self.hi, self.lo, float(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, Real2) else -float(other))

    def __repr__(self):
        return f"Real2({self.hi!r}, {self.lo!r})"
