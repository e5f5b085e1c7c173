"""Weighted quasi-norms, directions and the region family E, F, balls, EDir.

A region is consumed in two ways.  Counting code asks for ``boxes()``: a
list of coordinate boxes (per-coordinate maximal degrees) that are disjoint
in the region and whose membership can be decided from the top degrees of
the coordinates.  Oracles call ``contains(v)`` on exact vectors or
``contains_degrees`` on whole arrays of top degrees.
"""
from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import LaurentNum, LogNorm
from .errors import ConfigError, DimensionMismatch, ZeroVector
from .weights import Weights, as_weights

NEG = -(1 << 40)


def quasi_norm(x: Sequence[LaurentNum], side: str, w: Weights) -> LogNorm:
    """max_i |x_i|^(1/a_i) on the alpha (first m) or beta (last n) block."""
    w = as_weights(w)
    a = w.side(side)
    if len(x) != len(a):
        raise DimensionMismatch(f"{side} vector must have length {len(a)}, got {len(x)}")
    best = None
    for xi, ai in zip(x, a):
        if not xi.is_zero():
            k = Fraction(xi.degree, ai)
            if best is None or k > best:
                best = k
    return LogNorm(best)


def shell_levels(weights: Sequence[int], top) -> list[Fraction]:
    """Sorted union of {l/a : l >= 0} over the given weights, up to ``top``."""
    top = Fraction(top)
    if top < 0:
        return []
    levels = set()
    for a in weights:
        for l in range(0, math.floor(top * a) + 1):
            levels.add(Fraction(l, a))
    return sorted(levels)


class Projection(NamedTuple):
    s: int
    digits: tuple
    normalized: tuple


def direction_project(x: Sequence[LaurentNum], side: str, w: Weights, depth: int = 1) -> Projection:
    """Dilate x by t^(s a_i) so its quasi-norm lands in (1/q, 1].

    ``digits`` holds, per coordinate, the coefficients at degrees
    0, -1, ..., -(depth-1) of the dilated vector.
    """
    w = as_weights(w)
    a = w.side(side)
    nrm = quasi_norm(x, side, w)
    if nrm.is_zero():
        raise ZeroVector("direction of the zero vector is undefined")
    s = -math.ceil(nrm.exponent)
    z = tuple(xi.shift(s * ai) for xi, ai in zip(x, a))
    digits = tuple(zi.digits(0, depth) for zi in z)
    return Projection(s, digits, z)


# ---------------------------------------------------------------------------


class Cylinder:
    """Clopen set of directions fixed by leading digits of the normalized vector.

    ``allowed`` is a set of digit tables (one tuple of ``depth`` digits per
    coordinate).  ``Cylinder.full(side)`` and ``Cylinder.empty(side)`` are the
    distinguished whole-sphere and empty values.
    """

    __slots__ = ("side", "depth", "allowed", "full_flag")

    def __init__(self, side: str, depth: int, allowed=(), full: bool = False):
        if side not in ("alpha", "beta"):
            raise ValueError(f"side must be alpha or beta, got {side!r}")
        if depth < 0:
            raise ValueError("cylinder depth must be >= 0")
        self.side = side
        self.depth = 0 if full else depth
        self.full_flag = full
        tables = set()
        for tab in allowed:
            tab = tuple(tuple(int(c) for c in col) for col in tab)
            if any(len(col) != depth for col in tab):
                raise ValueError(f"table {tab} does not have depth {depth}")
            tables.add(tab)
        self.allowed = frozenset(tables)

    @classmethod
    def full(cls, side: str) -> "Cylinder":
        return cls(side, 0, (), full=True)

    @classmethod
    def empty(cls, side: str) -> "Cylinder":
        return cls(side, 0, ())

    @property
    def is_full(self) -> bool:
        return self.full_flag

    @property
    def is_empty(self) -> bool:
        return not self.full_flag and not self.allowed

    def contains_table(self, table) -> bool:
        if self.full_flag:
            return True
        key = tuple(tuple(col[: self.depth]) for col in table)
        return key in self.allowed

    def contains(self, x, w: Weights) -> bool:
        if self.full_flag:
            return True
        if not self.allowed:
            return False
        return self.contains_table(direction_project(x, self.side, w, self.depth).digits)

    def __or__(self, other: "Cylinder") -> "Cylinder":
        if self.side != other.side or self.depth != other.depth:
            raise ValueError("union needs cylinders of equal side and depth")
        if self.full_flag or other.full_flag:
            return Cylinder.full(self.side)
        return Cylinder(self.side, self.depth, self.allowed | other.allowed)

    @classmethod
    def partition(cls, side: str, w: Weights, q: int, depth: int) -> list["Cylinder"]:
        """Singleton cylinders for every depth-``depth`` table that meets the shell."""
        w = as_weights(w)
        a = w.side(side)
        out = []
        for tab in itertools.product(itertools.product(range(q), repeat=depth), repeat=len(a)):
            # a table meets the shell iff some coordinate has a nonzero digit at
            # an index < a_i, or there are not enough digits to rule it out
            meets = any(any(col[:ai]) for col, ai in zip(tab, a)) or any(depth < ai for ai in a)
            if meets:
                out.append(cls(side, depth, [tab]))
        return out

    @classmethod
    def parse(cls, text: str, ncoords: int) -> "Cylinder":
        """``side=beta,depth=1,allow=[1;2]``; tables are ``c1/c2/..`` with
        digits of one coordinate separated by '.'; ``allow=full`` or ``allow=[]``
        give the whole sphere or the empty set."""
        m = re.fullmatch(r"\s*side=(alpha|beta)\s*,\s*depth=(\d+)\s*,\s*allow=(full|\[[^\]]*\])\s*", text)
        if not m:
            raise ConfigError(f"cannot parse cylinder {text!r}")
        side, depth, allow = m.group(1), int(m.group(2)), m.group(3)
        if allow == "full":
            return cls.full(side)
        body = allow[1:-1].strip()
        tables = []
        if body:
            for item in re.split(r"[;,]", body):
                cols = item.strip().split("/")
                if len(cols) != ncoords:
                    raise ConfigError(f"table {item!r} needs {ncoords} coordinates")
                tab = []
                for col in cols:
                    digs = [int(c) for c in (col.split(".") if "." in col else col)]
                    if len(digs) != depth:
                        raise ConfigError(f"table {item!r} needs {depth} digits per coordinate")
                    tab.append(tuple(digs))
                tables.append(tuple(tab))
        return cls(side, depth, tables)

    def __eq__(self, other):
        return (isinstance(other, Cylinder) and self.side == other.side and self.full_flag == other.full_flag
                and self.depth == other.depth and self.allowed == other.allowed)

    def __hash__(self):
        return hash((self.side, self.full_flag, self.depth, self.allowed))

    def __str__(self):
        if self.full_flag:
            return f"side={self.side},depth=0,allow=full"
        items = ";".join("/".join(".".join(map(str, col)) for col in tab) for tab in sorted(self.allowed))
        return f"side={self.side},depth={self.depth},allow=[{items}]"

    __repr__ = __str__


# ---------------------------------------------------------------------------


class Box(NamedTuple):
    uppers: tuple  # max degree per coordinate
    floors: tuple  # lowest degree whose digit matters for ``accept``
    accept: object  # callable: (npts, d) int array of top degrees -> bool mask


def _scaled_kappa(degs: np.ndarray, weights: Sequence[int], L: int) -> np.ndarray:
    """L * max_i deg_i / a_i, exact in integers; very negative if all coords vanish."""
    mult = np.array([L // a for a in weights], dtype=np.int64)
    return (degs * mult[None, :]).max(axis=1)


class RegionSpec:
    """Base class; subclasses are ERegion, FRegion, BallRegion, EDirRegion, EmptyRegion."""

    d: int

    def boxes(self) -> list[Box]:
        raise NotImplementedError

    def contains(self, v) -> bool:
        raise NotImplementedError

    def contains_degrees(self, degs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_exponent(self) -> int:
        """c such that every point of the region has sup-norm <= q^c."""
        ups = [max(b.uppers) for b in self.boxes()]
        return max(ups) if ups else 0

    def grid_window(self):
        """(uppers, floors) per coordinate for the digit-grid oracle."""
        raise NotImplementedError

    @staticmethod
    def parse(text: str, w: Weights | None = None, d: int | None = None,
              cylinders: Sequence["Cylinder"] = ()) -> "RegionSpec":
        """``E:T=12,R=0``, ``F:S=8,R=0``, ``ball:r=3``, ``EDir:T=4,R=0`` or ``empty``."""
        s = text.strip()
        if s.lower() == "empty":
            return EmptyRegion(d if d is not None else (w.d if w else 0))
        kind, _, rest = s.partition(":")
        params = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ConfigError(f"bad region parameter {item!r} in {text!r}")
            try:
                params[key.strip()] = int(val)
            except ValueError:
                raise ConfigError(f"region parameter {item!r} is not an integer") from None
        kind = kind.strip().lower()
        need = {"e": ("T", "R"), "f": ("S", "R"), "ball": ("r",), "edir": ("T", "R")}
        if kind not in need:
            raise ConfigError(f"unknown region kind {kind!r}")
        missing = [k for k in need[kind] if k not in params]
        extra = sorted(set(params) - set(need[kind]))
        if missing or extra:
            raise ConfigError(f"region {text!r}: missing {missing}, unknown {extra}")
        if kind != "ball" and w is None:
            raise ConfigError(f"region {text!r} needs weights")
        if kind == "e":
            return ERegion(params["T"], params["R"], w)
        if kind == "f":
            return FRegion(params["S"], params["R"], w)
        if kind == "ball":
            return BallRegion(params["r"], d if d is not None else w.d)
        c1 = next((c for c in cylinders if c.side == "alpha"), Cylinder.full("alpha"))
        c2 = next((c for c in cylinders if c.side == "beta"), Cylinder.full("beta"))
        return EDirRegion(params["T"], params["R"], w, c1, c2)


class EmptyRegion(RegionSpec):
    def __init__(self, d: int):
        self.d = d

    def boxes(self):
        return []

    def contains(self, v):
        return False

    def contains_degrees(self, degs):
        return np.zeros(len(degs), dtype=bool)

    def grid_window(self):
        return (0,) * self.d, (0,) * self.d

    def __str__(self):
        return "empty"


class BallRegion(RegionSpec):
    """Open sup-norm ball {|v|_inf < q^r}."""

    def __init__(self, r: int, d: int):
        self.r, self.d = int(r), int(d)

    def boxes(self):
        up = (self.r - 1,) * self.d
        return [Box(up, up, lambda degs: np.ones(len(degs), dtype=bool))]

    def contains(self, v):
        return all(x.is_zero() or x.degree < self.r for x in v)

    def contains_degrees(self, degs):
        return (degs < self.r).all(axis=1)

    def grid_window(self):
        up = (self.r - 1,) * self.d
        return up, up

    def __str__(self):
        return f"ball:r={self.r}"


class ERegion(RegionSpec):
    """{ |x|_a |y|_b < q^R, 1 <= |y|_b <= q^T }."""

    def __init__(self, T: int, R: int, w: Weights):
        self.T, self.R, self.w = int(T), int(R), as_weights(w)
        self.d = self.w.d

    def shells(self) -> list[Fraction]:
        return shell_levels(self.w.beta, self.T)

    def boxes(self):
        w, R = self.w, self.R
        out = []
        for k in self.shells():
            xs = tuple(math.ceil((R - k) * a) - 1 for a in w.alpha)
            ys = tuple(math.floor(k * b) for b in w.beta)
            hit = [(w.m + j, int(k * b)) for j, b in enumerate(w.beta) if (k * b).denominator == 1]

            def accept(degs, hit=hit):
                mask = np.zeros(len(degs), dtype=bool)
                for col, deg in hit:
                    mask |= degs[:, col] == deg
                return mask
            out.append(Box(xs + ys, xs + ys, accept))
        return out

    def contains(self, v):
        w = self.w
        x, y = v[: w.m], v[w.m:]
        ny = quasi_norm(y, "beta", w)
        if ny.is_zero() or not (0 <= ny.exponent <= self.T):
            return False
        nx = quasi_norm(x, "alpha", w)
        return nx.is_zero() or nx.exponent + ny.exponent < self.R

    def contains_degrees(self, degs):
        w = self.w
        L = w.lcm
        ky = _scaled_kappa(degs[:, w.m:], w.beta, L)
        kx = _scaled_kappa(degs[:, : w.m], w.alpha, L)
        return (ky >= 0) & (ky <= self.T * L) & (kx + ky < self.R * L)

    def grid_window(self):
        w, R, T = self.w, self.R, self.T
        ups = tuple(math.ceil(R * a) - 1 for a in w.alpha) + tuple(T * b for b in w.beta)
        fls = tuple((R - T) * a for a in w.alpha) + (0,) * w.n
        return ups, fls

    def __str__(self):
        return f"E:T={self.T},R={self.R}"


class FRegion(RegionSpec):
    """{ |x|_a |y|_b < q^R, 1 <= |x|_a <= q^S }."""

    def __init__(self, S: int, R: int, w: Weights):
        self.S, self.R, self.w = int(S), int(R), as_weights(w)
        self.d = self.w.d

    def shells(self) -> list[Fraction]:
        return shell_levels(self.w.alpha, self.S)

    def boxes(self):
        w, R = self.w, self.R
        out = []
        for s in self.shells():
            xs = tuple(math.floor(s * a) for a in w.alpha)
            ys = tuple(math.ceil((R - s) * b) - 1 for b in w.beta)
            hit = [(i, int(s * a)) for i, a in enumerate(w.alpha) if (s * a).denominator == 1]

            def accept(degs, hit=hit):
                mask = np.zeros(len(degs), dtype=bool)
                for col, deg in hit:
                    mask |= degs[:, col] == deg
                return mask
            out.append(Box(xs + ys, xs + ys, accept))
        return out

    def contains(self, v):
        w = self.w
        x, y = v[: w.m], v[w.m:]
        nx = quasi_norm(x, "alpha", w)
        if nx.is_zero() or not (0 <= nx.exponent <= self.S):
            return False
        ny = quasi_norm(y, "beta", w)
        return ny.is_zero() or nx.exponent + ny.exponent < self.R

    def contains_degrees(self, degs):
        w = self.w
        L = w.lcm
        kx = _scaled_kappa(degs[:, : w.m], w.alpha, L)
        ky = _scaled_kappa(degs[:, w.m:], w.beta, L)
        return (kx >= 0) & (kx <= self.S * L) & (kx + ky < self.R * L)

    def grid_window(self):
        w, R, S = self.w, self.R, self.S
        ups = tuple(S * a for a in w.alpha) + tuple(math.ceil(R * b) - 1 for b in w.beta)
        fls = (0,) * w.m + tuple((R - S) * b for b in w.beta)
        return ups, fls

    def __str__(self):
        return f"F:S={self.S},R={self.R}"


class EDirRegion(ERegion):
    """E(T, R) restricted to directions pi_a(x) in C1 and pi_b(y) in C2.

    Points with x = 0 have no direction and are excluded.
    """

    def __init__(self, T: int, R: int, w: Weights, C1: Cylinder, C2: Cylinder):
        super().__init__(T, R, w)
        if C1.side != "alpha" or C2.side != "beta":
            raise ValueError("C1 must be an alpha cylinder and C2 a beta cylinder")
        self.C1, self.C2 = C1, C2

    def contains(self, v):
        if not super().contains(v):
            return False
        w = self.w
        x, y = v[: w.m], v[w.m:]
        if all(xi.is_zero() for xi in x):
            return False
        return self.C1.contains(x, w) and self.C2.contains(y, w)

    def contains_degrees(self, degs):
        raise TypeError("directional membership needs digits, not just degrees")

    def __str__(self):
        return f"EDir:T={self.T},R={self.R}[{self.C1}|{self.C2}]"
