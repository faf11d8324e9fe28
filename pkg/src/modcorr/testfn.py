"""Compactly supported test functions on R^(m-1), built as products of 1-D factors.

Kinds
-----
Bump(radius)     exp(-1 / (1 - (x/radius)**2)) on |x| < radius  (smooth)
Triangle(radius) 1 - |x|/radius on |x| <= radius
Box(lo, hi)      indicator of [lo, hi]

Only the Bump satisfies the smoothness the convergence theorems assume; Box and
Triangle exist because their integrals and Fourier transforms are exact, which
makes oracle tests sharp.  Reports mark them with ``smooth = False``.

The Bump is left unnormalised; its mass is stored in ``integral``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy import integrate

from modcorr.errors import PreconditionError


class Kind(enum.IntEnum):
    BUMP = 0
    TRIANGLE = 1
    BOX = 2


@njit(cache=True, inline="always")
def eval_factor(kind, p1, p2, t):
    """Scalar evaluation shared by every code path that touches f.

    Parameters ``p1, p2`` are (radius, unused) for Bump/Triangle and (lo, hi)
    for Box.
    """
    if kind == 0:
        u = t / p1
        u2 = u * u
        if u2 >= 1.0:
            return 0.0
        return math.exp(-1.0 / (1.0 - u2))
    if kind == 1:
        v = 1.0 - abs(t) / p1
        return v if v > 0.0 else 0.0
    if p1 <= t <= p2:
        return 1.0
    return 0.0


@njit(cache=True)
def _eval_array(kind, p1, p2, t):
    out = np.empty(t.size)
    for i in range(t.size):
        out[i] = eval_factor(kind, p1, p2, t[i])
    return out


def _bump_unit_integrand(x):
    return math.exp(-1.0 / (1.0 - x * x)) if abs(x) < 1.0 else 0.0


@lru_cache(maxsize=None)
def _bump_unit_mass() -> float:
    # even integrand; integrate [0, 1] and double
    val, err = integrate.quad(_bump_unit_integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    if err > 5e-13:
        raise ArithmeticError(f"bump integral not certified: error estimate {err:g}")
    return 2.0 * val


@dataclass(frozen=True)
class TestFunction1D:
    kind: Kind
    p1: float
    p2: float = 0.0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.BOX:
            if not self.p1 < self.p2:
                raise PreconditionError(f"Box needs lo < hi, got [{self.p1}, {self.p2}]")
        elif not self.p1 > 0.0:
            raise PreconditionError(f"radius must be positive, got {self.p1}")

    @classmethod
    def bump(cls, radius: float = 1.0) -> "TestFunction1D":
        return cls(Kind.BUMP, float(radius))

    @classmethod
    def triangle(cls, radius: float = 1.0) -> "TestFunction1D":
        return cls(Kind.TRIANGLE, float(radius))

    @classmethod
    def box(cls, lo: float = -0.5, hi: float = 0.5) -> "TestFunction1D":
        return cls(Kind.BOX, float(lo), float(hi))

    @property
    def radius(self) -> float:
        """Half-width of the smallest symmetric interval containing the support."""
        if self.kind is Kind.BOX:
            return max(abs(self.p1), abs(self.p2))
        return self.p1

    @property
    def support(self) -> tuple[float, float]:
        if self.kind is Kind.BOX:
            return self.p1, self.p2
        return -self.p1, self.p1

    @property
    def smooth(self) -> bool:
        return self.kind is Kind.BUMP

    @property
    def label(self) -> str:
        if self.kind is Kind.BOX:
            return f"box[{self.p1:g},{self.p2:g}]"
        return f"{self.kind.name.lower()}({self.p1:g})"

    @property
    def integral(self) -> float:
        if self.kind is Kind.BUMP:
            return self.p1 * _bump_unit_mass()
        if self.kind is Kind.TRIANGLE:
            return self.p1
        return self.p2 - self.p1

    def __call__(self, x):
        if np.ndim(x) == 0:
            return float(eval_factor(int(self.kind), self.p1, self.p2, float(x)))
        t = np.ascontiguousarray(x, dtype=np.float64)
        return _eval_array(int(self.kind), self.p1, self.p2, t.ravel()).reshape(t.shape)

    def fourier_transform(self, xi: float) -> complex:
        """Integral of f(x) e(x xi) dx, with e(z) = exp(2 pi i z)."""
        xi = float(xi)
        if self.kind is Kind.BOX:
            lo, hi = self.p1, self.p2
            if xi == 0.0:
                return complex(hi - lo)
            w = 2.0 * math.pi * xi
            # (e(hi xi) - e(lo xi)) / (2 pi i xi)
            return complex(math.sin(w * hi) - math.sin(w * lo), math.cos(w * lo) - math.cos(w * hi)) / w
        if self.kind is Kind.TRIANGLE:
            R = self.p1
            return complex(R * _sinc(R * xi) ** 2)
        # even function: only the cosine part survives
        R = self.p1
        if xi == 0.0:
            return complex(self.integral)
        val, _ = integrate.quad(
            _bump_unit_integrand,
            0.0,
            1.0,
            weight="cos",
            wvar=2.0 * math.pi * xi * R,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=400,
        )
        return complex(2.0 * R * val)


def _sinc(x):
    if x == 0.0:
        return 1.0
    return math.sin(math.pi * x) / (math.pi * x)


@dataclass(frozen=True)
class TestFunctionProduct:
    """f(x_1, ..., x_{m-1}) = prod_i f_i(x_i)."""

    factors: tuple[TestFunction1D, ...]

    __test__ = False

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise PreconditionError("need at least one factor")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def repeat(cls, factor: TestFunction1D, dim: int) -> "TestFunctionProduct":
        return cls((factor,) * dim)

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def radius(self) -> float:
        return max(f.radius for f in self.factors)

    @property
    def smooth(self) -> bool:
        return all(f.smooth for f in self.factors)

    @property
    def label(self) -> str:
        labels = {f.label for f in self.factors}
        if len(labels) == 1:
            return labels.pop()
        return "x".join(f.label for f in self.factors)

    def arrays(self):
        """(kinds, p1, p2) arrays for the compiled kernels."""
        kinds = np.array([int(f.kind) for f in self.factors], dtype=np.int64)
        p1 = np.array([f.p1 for f in self.factors])
        p2 = np.array([f.p2 for f in self.factors])
        return kinds, p1, p2

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise PreconditionError(f"expected {self.dim} coordinates, got {x.shape[-1]}")
        out = np.ones(x.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * f(x[..., i])
        return out if out.ndim else float(out)

    @property
    def integral(self) -> float:
        return math.prod(f.integral for f in self.factors)


def make_factor(kind: str, radius: float = 1.0, lo: float | None = None, hi: float | None = None) -> TestFunction1D:
    kind = kind.strip().lower()
    if kind == "bump":
        return TestFunction1D.bump(radius)
    if kind == "triangle":
        return TestFunction1D.triangle(radius)
    if kind == "box":
        return TestFunction1D.box(-radius if lo is None else lo, radius if hi is None else hi)
    raise PreconditionError(f"unknown test function kind {kind!r}")
