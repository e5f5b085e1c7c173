"""Diagonal flow g_a, the slice u_A, Siegel transforms and Birkhoff averages."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from .algebra import LaurentNum, LogNorm
from .diophantine import precision_needed
from .errors import ConfigError, InsufficientPrecision
from .lattice import (DEFAULT_BUDGET, LatticeBasis, ReducedBasis, ShiftedMatrix, box_top_degrees,
                      box_vectors, reduce_matrix)
from .regions import BallRegion, EDirRegion, EmptyRegion, ERegion, FRegion, RegionSpec
from .weights import Weights, as_weights

__all__ = [
    "Weights", "flow_apply", "ua_basis", "siegel_count", "birkhoff_series", "orbit",
    "Observable", "SiegelCount", "IndicatorDeltaGe", "AlphaHeight", "parse_observable",
    "orbit_precision", "domination_check", "DominationReport",
]


def _matrix_of(B) -> ShiftedMatrix:
    if isinstance(B, (LatticeBasis, ReducedBasis)):
        return B._mat
    if isinstance(B, ShiftedMatrix):
        return B
    raise TypeError(f"expected a lattice basis, got {type(B).__name__}")


def _flow_shift(w: Weights, n: int) -> np.ndarray:
    return np.array([-n * a for a in w.alpha] + [n * b for b in w.beta], dtype=np.int64)


def flow_apply(B: LatticeBasis, w, n: int) -> LatticeBasis:
    """g_a^n B: coordinate i scaled by t^(n a_i), coordinate m+j by t^(-n a_{m+j})."""
    w = as_weights(w)
    mat = _matrix_of(B).copy()
    if mat.d != w.d:
        raise ValueError(f"basis dimension {mat.d} does not match weights {w!r}")
    mat.W = mat.W + _flow_shift(w, n)
    return LatticeBasis._wrap(mat)


def ua_basis(A) -> LatticeBasis:
    """Basis of u_A Z^d: rows e_1..e_m and (A[:, j], e_{m+j})."""
    rows_A = [list(r) for r in A]
    m, n = len(rows_A), len(rows_A[0])
    q = rows_A[0][0].q
    zero, one = LaurentNum.zero(q), LaurentNum([1], 0, q)
    rows = []
    for i in range(m):
        rows.append([one if c == i else zero for c in range(m + n)])
    for j in range(n):
        rows.append([rows_A[i][j] for i in range(m)] + [one if c == j else zero for c in range(n)])
    return LatticeBasis(rows, q)


# ---------------------------------------------------------------------------


def siegel_count(region: RegionSpec, B, budget: int = DEFAULT_BUDGET) -> int:
    """Number of nonzero lattice vectors in ``region``."""
    mat = _matrix_of(B)
    if isinstance(region, EDirRegion):
        total = 0
        for box in region.boxes():
            for v in box_vectors(mat, box.uppers, budget):
                if region.contains(v):
                    total += 1
        return total
    total = 0
    for box in region.boxes():
        degs = box_top_degrees(mat, box.uppers, box.floors, budget)
        mask = box.accept(degs)
        mask[0] = False  # the zero vector
        total += int(mask.sum())
    return total


class DominationReport(NamedTuple):
    ball: int
    e_count: int
    f_count: int
    uncovered: int  # nonzero ball points in neither E nor F

    @property
    def holds(self) -> bool:
        return self.ball <= self.e_count + self.f_count


def domination_check(B, w, r: int, T: int, R: int, budget: int = DEFAULT_BUDGET) -> DominationReport:
    """Compare #(ball of radius q^r) with #E(T,R) + #F(T,R) on one lattice.

    ``uncovered`` counts ball points outside E and F; when it is zero the
    ball sits inside E u F on this lattice and the inequality is certified.
    """
    w = as_weights(w)
    mat = _matrix_of(B)
    ball = BallRegion(r, w.d)
    E, F = ERegion(T, R, w), FRegion(T, R, w)
    box = ball.boxes()[0]
    degs = box_top_degrees(mat, box.uppers, box.floors, budget)[1:]
    inside = box.accept(degs)
    pts = degs[inside]
    uncovered = int((~(E.contains_degrees(pts) | F.contains_degrees(pts))).sum())
    return DominationReport(int(inside.sum()), siegel_count(E, mat, budget), siegel_count(F, mat, budget),
                            uncovered)


# ---------------------------------------------------------------------------


class Observable:
    bounded = False

    def evaluate(self, mat: ShiftedMatrix, reduced: ReducedBasis):
        raise NotImplementedError


class SiegelCount(Observable):
    def __init__(self, region: RegionSpec, budget: int = DEFAULT_BUDGET):
        self.region = region
        self.budget = budget

    def evaluate(self, mat, reduced):
        return siegel_count(self.region, mat, self.budget)

    def __str__(self):
        return f"siegel:{self.region}"


class IndicatorDeltaGe(Observable):
    """1 if the shortest vector has sup-norm >= eps, else 0."""

    bounded = True

    def __init__(self, eps: LogNorm):
        self.eps = eps

    def evaluate(self, mat, reduced):
        return int(LogNorm(reduced.row_degrees[0]) >= self.eps)

    def __str__(self):
        return f"indicator:delta_ge:{self.eps}"


class AlphaHeight(Observable):
    def evaluate(self, mat, reduced):
        neg = -sum(x for x in reduced.row_degrees if x < 0)
        return Fraction(mat.q) ** neg

    def __str__(self):
        return "alpha"


def parse_observable(text: str, w: Weights, T: int | None = None, R: int | None = None,
                     cylinders=(), budget: int = DEFAULT_BUDGET) -> Observable:
    parts = text.strip().split(":")
    try:
        if parts[0] == "siegel":
            kind = parts[1].lower()
            if kind == "e":
                return SiegelCount(ERegion(T, R, w), budget)
            if kind == "f":
                return SiegelCount(FRegion(T, R, w), budget)
            if kind == "ball":
                return SiegelCount(BallRegion(int(parts[2]), w.d), budget)
            if kind == "edir":
                return SiegelCount(RegionSpec.parse(f"EDir:T={T},R={R}", w, cylinders=cylinders), budget)
            if kind == "empty":
                return SiegelCount(EmptyRegion(w.d), budget)
        if parts[0] == "indicator" and parts[1] == "delta_ge":
            return IndicatorDeltaGe(LogNorm.parse(parts[2]))
        if parts == ["alpha"]:
            return AlphaHeight()
    except (IndexError, TypeError, ValueError):
        pass
    raise ConfigError(f"cannot parse observable {text!r}")


def orbit_precision(obs: Observable, w: Weights, N: int) -> int:
    """Fractional digits of A needed so that the first N orbit values are exact."""
    if isinstance(obs, SiegelCount):
        reg = obs.region
        if isinstance(reg, ERegion):
            return precision_needed(w, reg.R, N - 1 + reg.T)
        if isinstance(reg, FRegion):
            return (N - 1 + max(reg.R, 0)) * max(w.beta) + (N - 1 + reg.S) * max(w.alpha) + 1
        if isinstance(reg, BallRegion):
            return (N - 1) * (max(w.alpha) + max(w.beta)) + max(reg.r, 0) * 2 + 1
        return 0
    # minima of g^n u_A Z^d are realised by vectors with |y| <= q^{n max b}
    return (N + 1) * (max(w.alpha) + max(w.beta)) + 1


def orbit(A, w, N: int) -> Iterator[tuple[ShiftedMatrix, ReducedBasis]]:
    """Yield the reduced working matrix of g_a^n u_A Z^d for n = 0..N-1.

    The yielded matrix is reused (mutated) on the next step; copy it if it
    must outlive the iteration.
    """
    w = as_weights(w)
    mat = ua_basis(A)._mat.copy()
    step = _flow_shift(w, 1)
    for n in range(N):
        if n:
            mat.W = mat.W + step
        red = reduce_matrix(mat)
        mat = red._mat
        if n % 64 == 63:
            mat.trim()
        yield mat, red


def birkhoff_series(obs: Observable, A, w, N: int, precision: int | None = None) -> list[Fraction]:
    """Partial averages (1/k) sum_{n<k} obs(g_a^n u_A Z^d) for k = 1..N."""
    w = as_weights(w)
    if N < 1:
        raise ValueError("N must be >= 1")
    if precision is not None:
        need = orbit_precision(obs, w, N)
        if precision < need:
            raise InsufficientPrecision(f"orbit of length {N} needs {need} digits, A has {precision}")
    out = []
    acc = Fraction(0)
    for n, (mat, red) in enumerate(orbit(A, w, N)):
        acc += obs.evaluate(mat, red)
        out.append(acc / (n + 1))
    return out
