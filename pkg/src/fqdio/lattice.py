"""F_q[t]-lattices in K^d: weak Popov reduction, minima, heights, enumeration.

A basis is stored as a polynomial coefficient array ``P`` of shape
(d, d, L) together with per-column shifts ``W``; the actual entry in row i,
column c is ``P[i, c](t) * t^(-W[c])``.  Column shifts make the diagonal flow
free (it only touches ``W``) and keep reduction arithmetic in F_q[t].
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .algebra import FqPoly, LaurentNum, LogNorm, check_prime, inv_mod, poly_matrix_det
from .errors import BudgetExceeded, DependentVectors, NonUnimodular, SingularBasis

NEG = -(1 << 40)  # stands in for deg 0 = -inf inside integer arrays
DEFAULT_BUDGET = 1 << 20


def _tops(P: np.ndarray) -> np.ndarray:
    """Index of the highest nonzero coefficient along the last axis (NEG if none)."""
    nz = P != 0
    L = P.shape[-1]
    top = (L - 1) - np.argmax(nz[..., ::-1], axis=-1)
    return np.where(nz.any(axis=-1), top, NEG)


class ShiftedMatrix:
    """Mutable working form of a basis.  Not part of the public contract."""

    __slots__ = ("P", "W", "q", "tops")

    def __init__(self, P: np.ndarray, W: np.ndarray, q: int):
        self.P = P
        self.W = W
        self.q = q
        self.tops = _tops(P)

    @property
    def d(self) -> int:
        return self.P.shape[0]

    def copy(self) -> "ShiftedMatrix":
        new = object.__new__(ShiftedMatrix)
        new.P = self.P.copy()
        new.W = self.W.copy()
        new.q = self.q
        new.tops = self.tops.copy()
        return new

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[LaurentNum]], q: int) -> "ShiftedMatrix":
        d = len(rows)
        W = np.zeros(d, dtype=np.int64)
        for c in range(d):
            los = [rows[i][c].lo for i in range(d) if not rows[i][c].is_zero()]
            W[c] = -min(los) if los else 0
        L = 1
        for i in range(d):
            for c in range(d):
                x = rows[i][c]
                if not x.is_zero():
                    L = max(L, x.degree + int(W[c]) + 1)
        P = np.zeros((d, d, L), dtype=np.int64)
        for i in range(d):
            for c in range(d):
                x = rows[i][c]
                if not x.is_zero():
                    off = x.lo + int(W[c])
                    P[i, c, off:off + len(x.coeffs)] = x.coeffs
        return cls(P, W, q)

    def entry(self, i: int, c: int) -> LaurentNum:
        top = int(self.tops[i, c])
        if top == NEG:
            return LaurentNum.zero(self.q)
        return LaurentNum._make(self.P[i, c, : top + 1].tolist(), -int(self.W[c]), self.q)

    def rows(self) -> tuple:
        d = self.d
        return tuple(tuple(self.entry(i, c) for c in range(d)) for i in range(d))

    def degrees(self) -> np.ndarray:
        """(d, d) matrix of entry degrees, NEG-ish for zero entries."""
        return np.where(self.tops == NEG, NEG, self.tops - self.W[None, :])

    def row_info(self):
        degs = self.degrees()
        rowdeg = degs.max(axis=1)
        d = self.d
        hit = degs == rowdeg[:, None]
        piv = (d - 1) - np.argmax(hit[:, ::-1], axis=1)
        return rowdeg, piv

    def _grow(self, length: int):
        L = self.P.shape[2]
        if length > L:
            extra = max(length - L, L // 2 + 8)
            self.P = np.concatenate([self.P, np.zeros(self.P.shape[:2] + (extra,), dtype=np.int64)], axis=2)

    def reduce(self, max_steps: int | None = None):
        """Bring to weak Popov form by simple transformations (in place)."""
        q, d = self.q, self.d
        steps = 0
        while True:
            rowdeg, piv = self.row_info()
            if (rowdeg <= NEG // 2).any():
                raise SingularBasis("zero row encountered: basis rows are dependent")
            owner = {}
            pair = None
            for r in range(d):
                p = int(piv[r])
                if p in owner:
                    pair = (owner[p], r)
                    break
                owner[p] = r
            if pair is None:
                return
            a, b = pair
            if rowdeg[a] < rowdeg[b]:
                a, b = b, a
            s = int(rowdeg[a] - rowdeg[b])
            p = int(piv[a])
            ca = int(self.P[a, p, self.tops[a, p]])
            cb = int(self.P[b, p, self.tops[b, p]])
            c = (ca * inv_mod(cb, q)) % q
            self._grow(int(rowdeg[a] + self.W.max()) + 1)
            P = self.P
            L = P.shape[2]
            if s:
                P[a, :, s:] = (P[a, :, s:] - c * P[b, :, : L - s]) % q
            else:
                P[a] = (P[a] - c * P[b]) % q
            self.tops[a] = _tops(P[a])
            steps += 1
            if max_steps is not None and steps > max_steps:
                raise RuntimeError("reduction did not terminate within the step cap")

    def trim(self):
        """Drop coefficient slots that are zero in every row (both ends)."""
        P = self.P
        nzc = (P != 0).any(axis=0)  # (d, L)
        for c in range(self.d):
            idx = np.flatnonzero(nzc[c])
            if idx.size and idx[0] > 0:
                low = int(idx[0])
                P[:, c, :-low] = P[:, c, low:]
                P[:, c, -low:] = 0
                self.W[c] -= low
        self.tops = _tops(P)
        top = int(self.tops.max())
        if top + 1 < P.shape[2] // 2:
            self.P = P[:, :, : top + 1 + 8].copy()

    def sorted_order(self):
        rowdeg, piv = self.row_info()
        order = sorted(range(self.d), key=lambda i: (int(rowdeg[i]), int(piv[i])))
        return order, rowdeg, piv


# ---------------------------------------------------------------------------


def _to_laurent(x, q: int) -> LaurentNum:
    if isinstance(x, LaurentNum):
        return x
    if isinstance(x, FqPoly):
        return LaurentNum.from_poly(x)
    if isinstance(x, int):
        return LaurentNum([x], 0, q)
    if isinstance(x, str):
        return LaurentNum.parse(x, q)
    raise TypeError(f"cannot use {type(x).__name__} as a lattice entry")


class LatticeBasis:
    """d row vectors of LaurentNum spanning an F_q[t]-lattice in K^d."""

    __slots__ = ("_mat",)

    def __init__(self, rows, q: int | None = None):
        rows = [list(r) for r in rows]
        if q is None:
            q = next((x.q for r in rows for x in r if isinstance(x, (LaurentNum, FqPoly))), None)
            if q is None:
                raise ValueError("q is required when no entry carries it")
        check_prime(q)
        d = len(rows)
        if d == 0 or any(len(r) != d for r in rows):
            raise ValueError("basis must be a nonempty square array")
        rows = [[_to_laurent(x, q) for x in r] for r in rows]
        self._mat = ShiftedMatrix.from_rows(rows, q)

    @classmethod
    def _wrap(cls, mat: ShiftedMatrix) -> "LatticeBasis":
        obj = object.__new__(cls)
        obj._mat = mat
        return obj

    @classmethod
    def identity(cls, d: int, q: int) -> "LatticeBasis":
        return cls([[1 if i == j else 0 for j in range(d)] for i in range(d)], q)

    @classmethod
    def parse(cls, text: str, q: int) -> "LatticeBasis":
        """One row per line (or per '|'), entries separated by ';'."""
        lines = [ln for ln in text.replace("|", "\n").splitlines() if ln.strip()]
        return cls([[LaurentNum.parse(e, q) for e in ln.split(";")] for ln in lines], q)

    @property
    def q(self) -> int:
        return self._mat.q

    @property
    def dim(self) -> int:
        return self._mat.d

    @property
    def rows(self):
        return self._mat.rows()

    @property
    def scale_hint(self) -> int:
        """W with t^W * rows polynomial."""
        return int(self._mat.W.max())

    def det(self) -> LaurentNum:
        mat = self._mat
        q, d = mat.q, mat.d
        polys = [[FqPoly(mat.P[i, c, : max(0, int(mat.tops[i, c]) + 1)].tolist(), q) for c in range(d)]
                 for i in range(d)]
        det = poly_matrix_det(polys)
        return LaurentNum.from_poly(det).shift(-int(mat.W.sum()))

    def __str__(self):
        return "\n".join(";".join(str(x) for x in row) for row in self.rows)

    def __repr__(self):
        return f"LatticeBasis({str(self)!r}, q={self.q})"


class ReducedBasis:
    """Weak Popov basis; rows sorted by degree (ties by pivot column)."""

    __slots__ = ("base", "_mat", "row_degrees", "pivot_cols")

    def __init__(self, base: LatticeBasis, mat: ShiftedMatrix):
        order, rowdeg, piv = mat.sorted_order()
        if order != list(range(mat.d)):
            mat.P = mat.P[order]
            mat.tops = mat.tops[order]
        self.base = base
        self._mat = mat
        self.row_degrees = tuple(int(rowdeg[i]) for i in order)
        self.pivot_cols = tuple(int(piv[i]) for i in order)

    @property
    def q(self) -> int:
        return self._mat.q

    @property
    def dim(self) -> int:
        return self._mat.d

    @property
    def rows(self):
        return self._mat.rows()

    def as_basis(self) -> LatticeBasis:
        return LatticeBasis._wrap(self._mat.copy())

    def __repr__(self):
        return f"ReducedBasis(row_degrees={self.row_degrees}, pivot_cols={self.pivot_cols})"


def reduce_matrix(mat: ShiftedMatrix, base: LatticeBasis | None = None) -> ReducedBasis:
    """Reduce ``mat`` in place and wrap it."""
    mat.reduce()
    return ReducedBasis(base if base is not None else LatticeBasis._wrap(mat), mat)


def weak_popov_reduce(B: LatticeBasis) -> ReducedBasis:
    mat = B._mat.copy()
    mat.reduce()
    mat.trim()
    return ReducedBasis(B, mat)


def _reduced(R) -> ReducedBasis:
    return R if isinstance(R, ReducedBasis) else weak_popov_reduce(R)


def delta_shortest(R: ReducedBasis) -> LogNorm:
    """Sup-norm of a shortest nonzero vector, q^{d_1}."""
    R = _reduced(R)
    return LogNorm(R.row_degrees[0])


def alpha_value(R: ReducedBasis) -> LogNorm:
    """Height alpha(Lambda) = q^{-(sum of the negative row degrees)}."""
    R = _reduced(R)
    if sum(R.row_degrees) != 0:
        raise NonUnimodular(f"row degrees sum to {sum(R.row_degrees)}, not 0")
    return LogNorm(-sum(x for x in R.row_degrees if x < 0))


def is_unimodular(B) -> bool:
    if isinstance(B, ReducedBasis):
        return sum(B.row_degrees) == 0
    det = B.det()
    return not det.is_zero() and det.degree == 0


def covolume_wedge(vectors) -> LogNorm:
    """max over r x r minors of |minor| for the r given vectors."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        raise DependentVectors("empty family")
    q = next(x.q for v in vecs for x in v if isinstance(x, (LaurentNum, FqPoly)))
    vecs = [[_to_laurent(x, q) for x in v] for v in vecs]
    r, d = len(vecs), len(vecs[0])
    if r > d:
        raise DependentVectors(f"{r} vectors in dimension {d}")
    # scale each vector to polynomial entries
    shifts = []
    polys = []
    for v in vecs:
        s = max([0] + [-x.lo for x in v if not x.is_zero()])
        shifts.append(s)
        polys.append([_laurent_to_poly(x.shift(s)) for x in v])
    best = None
    for cols in itertools.combinations(range(d), r):
        minor = poly_matrix_det([[row[c] for c in cols] for row in polys])
        if not minor.is_zero() and (best is None or minor.degree > best):
            best = minor.degree
    if best is None:
        raise DependentVectors("all maximal minors vanish")
    return LogNorm(best - sum(shifts))


def _laurent_to_poly(x: LaurentNum) -> FqPoly:
    if x.is_zero():
        return FqPoly((), x.q)
    assert x.lo >= 0
    return FqPoly([0] * x.lo + list(x.coeffs), x.q)


# ---------------------------------------------------------------------------
# enumeration


def _generators(R: ReducedBasis, c: int):
    return [(i, e) for i, di in enumerate(R.row_degrees) for e in range(0, c - di + 1)]


def _coefficient_tuples(q: int, K: int, start: int, stop: int) -> np.ndarray:
    """Rows start..stop-1 of the lexicographic list of F_q^K (base-q digits)."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((stop - start, K), dtype=np.int64)
    for k in range(K - 1, -1, -1):
        out[:, k] = idx % q
        idx //= q
    return out


def enumerate_points(R: ReducedBasis, bound: LogNorm, budget: int = DEFAULT_BUDGET) -> list:
    """All lattice vectors with sup-norm <= bound (including 0)."""
    R = _reduced(R)
    if bound.is_zero():
        return [tuple(LaurentNum.zero(R.q) for _ in range(R.dim))]
    if bound.exponent.denominator != 1:
        raise ValueError("bound must be an integral power of q")
    c = int(bound.exponent)
    mat = R._mat
    q, d = mat.q, mat.d
    gens = _generators(R, c)
    K = len(gens)
    if q ** K > budget:
        raise BudgetExceeded(f"{q}^{K} coefficient tuples exceed budget {budget}")
    L = mat.P.shape[2]
    emax = max([e for _, e in gens], default=0)
    G = np.zeros((K, d, L + emax), dtype=np.int64)
    for g, (i, e) in enumerate(gens):
        G[g, :, e:e + L] = mat.P[i]
    combos = _coefficient_tuples(q, K, 0, q ** K)
    V = (combos @ G.reshape(K, -1)) % q
    V = V.reshape(-1, d, L + emax)
    out = []
    for v in V:
        out.append(tuple(LaurentNum._make(v[col].tolist(), -int(mat.W[col]), q) for col in range(d)))
    return out


def count_points(R: ReducedBasis, bound: LogNorm) -> int:
    """Number of lattice vectors (including 0) with sup-norm <= bound."""
    R = _reduced(R)
    if bound.is_zero():
        return 1
    c = int(bound.exponent)
    return R.q ** sum(max(0, c - di + 1) for di in R.row_degrees)


def box_top_degrees(mat: ShiftedMatrix, uppers, floors, budget: int = DEFAULT_BUDGET,
                    chunk: int = 1 << 14):
    """Top degrees of all lattice vectors inside a coordinate box.

    The box is deg v_c <= uppers[c].  For every lattice vector in it the
    returned array holds, per coordinate, its exact degree when that degree
    is >= floors[c] and NEG otherwise.  Row 0 is the zero vector.  ``mat`` is
    left untouched.
    """
    d, q = mat.d, mat.q
    up = np.asarray(uppers, dtype=np.int64)
    fl = np.minimum(np.asarray(floors, dtype=np.int64), up)
    work = mat.copy()
    work.W = work.W + up  # scale column c by t^{-upper_c}: box becomes unit ball
    red = reduce_matrix(work)
    gens = _generators(red, 0)
    K = len(gens)
    if q ** K > budget:
        raise BudgetExceeded(f"{q}^{K} box points exceed budget {budget}")
    if K == 0:
        return np.full((1, d), NEG, dtype=np.int64)
    span = (up - fl + 1).astype(np.int64)  # window sizes per coordinate
    wmax = int(span.max())
    P, W = red._mat.P, red._mat.W
    L = P.shape[2]
    G = np.zeros((K, d, wmax), dtype=np.int64)
    offs = np.arange(wmax)
    for g, (i, e) in enumerate(gens):
        for c in range(d):
            # scaled-degree -k lives at index -k - e + W[c]
            idx = -offs[: span[c]] - e + int(W[c])
            ok = (idx >= 0) & (idx < L)
            G[g, c, : span[c]][ok] = P[i, c, idx[ok]]
    n = q ** K
    out = np.empty((n, d), dtype=np.int64)
    flat = G.reshape(K, -1)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        V = (_coefficient_tuples(q, K, start, stop) @ flat) % q
        nz = V.reshape(stop - start, d, wmax) != 0
        has = nz.any(axis=2)
        first = np.argmax(nz, axis=2)
        out[start:stop] = np.where(has, up[None, :] - first, NEG)
    return out


def box_vectors(mat: ShiftedMatrix, uppers, budget: int = DEFAULT_BUDGET) -> list:
    """Exact lattice vectors inside the box deg v_c <= uppers[c]."""
    up = np.asarray(uppers, dtype=np.int64)
    work = mat.copy()
    work.W = work.W + up
    red = reduce_matrix(work)
    pts = enumerate_points(red, LogNorm(0), budget)
    return [tuple(x.shift(int(u)) for x, u in zip(v, up)) for v in pts]
