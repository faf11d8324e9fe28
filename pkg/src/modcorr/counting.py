"""Window counts W(Y) = #{n <= N : x_n in [Y, Y + L/N] mod 1} and their moments.

W is piecewise constant in Y with at most 2N jumps: +1 when Y passes
x_n - L/N and -1 when it passes x_n.  Sweeping the sorted jump positions gives
E[W^m] = integral over [0, 1) of W(Y)^m dY exactly, without sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from modcorr.errors import ModcorrError, PreconditionError
from modcorr.seqgen import PointSet, SequenceSpec, generate_points


@dataclass(frozen=True)
class WindowStatistic:
    N: int
    L: float
    m: int
    exact_moment: float
    target: float
    ratio: float
    tau: float | None = None


def count_window(points: PointSet, Y: float, width: float) -> int:
    """Number of points in the closed arc [Y, Y + width] (mod 1)."""
    if not 0.0 < width < 1.0:
        raise PreconditionError(f"width must lie in (0, 1), got {width}")
    xs = points.sorted_copy().values
    y0 = Y - math.floor(Y)
    y1 = y0 + width
    if y1 < 1.0:
        return int(np.searchsorted(xs, y1, "right") - np.searchsorted(xs, y0, "left"))
    wrapped = np.searchsorted(xs, y1 - 1.0, "right")
    return int(xs.size - np.searchsorted(xs, y0, "left") + wrapped)


def count_windows(points: PointSet, Y, width: float) -> np.ndarray:
    """Vectorised :func:`count_window` over an array of window positions."""
    if not 0.0 < width < 1.0:
        raise PreconditionError(f"width must lie in (0, 1), got {width}")
    xs = points.sorted_copy().values
    y0 = np.asarray(Y, dtype=np.float64)
    y0 = y0 - np.floor(y0)
    y1 = y0 + width
    start = np.searchsorted(xs, y0, "left")
    plain = np.searchsorted(xs, np.minimum(y1, 1.0), "right") - start
    wrapped = xs.size - start + np.searchsorted(xs, y1 - 1.0, "right")
    return np.where(y1 < 1.0, plain, wrapped)


def moment_exact(points: PointSet, L: float, m: int) -> WindowStatistic:
    """E[W^m] over a uniform window position Y, computed by an exact sweep."""
    N = len(points)
    if m < 1:
        raise PreconditionError("m must be >= 1")
    width = L / N
    if not 0.0 < width < 1.0:
        raise PreconditionError(f"window width L/N = {width:g} must lie in (0, 1)")
    x = points.values
    enter = x - width
    enter = enter - np.floor(enter)
    pos = np.concatenate([enter, x])
    step = np.concatenate([np.ones(N, dtype=np.int64), -np.ones(N, dtype=np.int64)])
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    # level just after Y = 0: points whose entry position wrapped below zero
    level0 = int(np.count_nonzero(x < width))
    levels = level0 + np.cumsum(step[order])
    seg = np.diff(np.concatenate([[0.0], pos, [1.0]]))
    lv = np.concatenate([[level0], levels]).astype(np.float64)
    moment = math.fsum((lv**m * seg).tolist())
    target = L**m
    return WindowStatistic(N, L, m, moment, target, moment / target)


@dataclass(frozen=True)
class MomentRow:
    N: int
    stat: WindowStatistic | None
    error: str = ""


def moment_scan(spec: SequenceSpec, m: int, tau: float, N_grid) -> list[MomentRow]:
    """E[W^m] with L = N**(1 - tau) for each N of an ascending grid."""
    rows = []
    for N in (int(n) for n in N_grid):
        try:
            if not 0.0 < tau < 1.0:
                raise PreconditionError(f"tau must lie in (0, 1), got {tau}")
            L = float(N) ** (1.0 - tau)
            st = moment_exact(generate_points(spec, N), L, m)
            rows.append(MomentRow(N, WindowStatistic(st.N, st.L, st.m, st.exact_moment, st.target, st.ratio, tau)))
        except ModcorrError as exc:
            rows.append(MomentRow(N, None, f"{type(exc).__name__}: {exc}"))
    return rows
