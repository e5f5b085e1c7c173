"""Exact arithmetic in F_q, F_q[t] and finite-support elements of F_q((1/t)).

Only prime q is supported.  Everything is exact: coefficients are Python
ints reduced mod q, degrees are ints and norm exponents are Fractions.

Text forms look like ``"t^2+1+t^-3"`` or ``"2*t^3+t"``; the zero element
prints as ``"0"``.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Iterable, Sequence

from .errors import DivisionByZero

NEG_INF = -math.inf


@lru_cache(maxsize=None)
def check_prime(q: int) -> int:
    if not isinstance(q, int) or q < 2 or any(q % p == 0 for p in range(2, math.isqrt(q) + 1)):
        raise ValueError(f"q must be a prime, got {q!r}")
    return q


def inv_mod(c: int, q: int) -> int:
    c %= q
    if c == 0:
        raise DivisionByZero("zero has no inverse in F_q")
    return pow(c, q - 2, q)


class FqElem:
    """Residue class mod a prime q."""

    __slots__ = ("value", "q")

    def __init__(self, value: int, q: int):
        self.q = check_prime(q)
        self.value = int(value) % q

    def _coerce(self, other):
        if isinstance(other, FqElem):
            if other.q != self.q:
                raise ValueError("mixing different fields")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else FqElem(self.value + v, self.q)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else FqElem(self.value - v, self.q)

    def __rsub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else FqElem(v - self.value, self.q)

    def __mul__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else FqElem(self.value * v, self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FqElem(-self.value, self.q)

    def inverse(self) -> "FqElem":
        return FqElem(inv_mod(self.value, self.q), self.q)

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FqElem(self.value * inv_mod(v, self.q), self.q)

    def __eq__(self, other):
        if isinstance(other, FqElem):
            return self.q == other.q and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.q))

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"FqElem({self.value}, q={self.q})"


# ---------------------------------------------------------------------------
# text helpers shared by FqPoly and LaurentNum

_TERM_SPLIT = re.compile(r"(?<!\^)(?=[+-])")
_TERM = re.compile(r"^(\d*)\*?(t(?:\^\(?(-?\d+)\)?)?)?$")


def _parse_terms(text: str, q: int) -> dict[int, int]:
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty polynomial text")
    out: dict[int, int] = {}
    for chunk in _TERM_SPLIT.split(s):
        if not chunk:
            continue
        sign = 1
        while chunk and chunk[0] in "+-":
            if chunk[0] == "-":
                sign = -sign
            chunk = chunk[1:]
        m = _TERM.match(chunk)
        if not chunk or m is None or (not m.group(1) and not m.group(2)):
            raise ValueError(f"cannot parse term {chunk!r} in {text!r}")
        coef = int(m.group(1)) if m.group(1) else 1
        if m.group(2):
            deg = int(m.group(3)) if m.group(3) is not None else 1
        else:
            deg = 0
        out[deg] = (out.get(deg, 0) + sign * coef) % q
    return out


def _format_terms(pairs: Iterable[tuple[int, int]]) -> str:
    parts = []
    for deg, c in pairs:
        if deg == 0:
            parts.append(str(c))
            continue
        mono = "t" if deg == 1 else f"t^{deg}"
        parts.append(mono if c == 1 else f"{c}*{mono}")
    return "+".join(parts) if parts else "0"


# ---------------------------------------------------------------------------


def _strip_top(coeffs: list[int]) -> tuple[int, ...]:
    k = len(coeffs)
    while k and coeffs[k - 1] == 0:
        k -= 1
    return tuple(coeffs[:k])


class FqPoly:
    """Polynomial over F_q; ``coeffs[k]`` is the coefficient of t^k."""

    __slots__ = ("coeffs", "q")

    def __init__(self, coeffs: Iterable[int] = (), q: int = 2):
        self.q = check_prime(q)
        self.coeffs = _strip_top([int(c) % q for c in coeffs])

    @classmethod
    def _raw(cls, coeffs: tuple[int, ...], q: int) -> "FqPoly":
        obj = object.__new__(cls)
        obj.coeffs = coeffs
        obj.q = q
        return obj

    @classmethod
    def monomial(cls, c: int, k: int, q: int) -> "FqPoly":
        return cls([0] * k + [c], q)

    @classmethod
    def parse(cls, text: str, q: int) -> "FqPoly":
        terms = _parse_terms(text, q)
        if terms and min(terms) < 0:
            raise ValueError(f"negative exponent in polynomial {text!r}")
        top = max(terms, default=-1)
        return cls([terms.get(k, 0) for k in range(top + 1)], q)

    @property
    def degree(self):
        """Degree, or ``-inf`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def lc(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def monic(self) -> "FqPoly":
        if not self.coeffs:
            return self
        return self.scale(inv_mod(self.lc(), self.q))

    def scale(self, c: int) -> "FqPoly":
        q = self.q
        return FqPoly._raw(_strip_top([(c * x) % q for x in self.coeffs]), q)

    def shift(self, k: int) -> "FqPoly":
        """Multiply by t^k (k >= 0)."""
        if not self.coeffs:
            return self
        return FqPoly._raw((0,) * k + self.coeffs, self.q)

    def _check(self, other) -> "FqPoly":
        if isinstance(other, int):
            return FqPoly([other], self.q)
        if not isinstance(other, FqPoly):
            raise TypeError(f"expected FqPoly, got {type(other).__name__}")
        if other.q != self.q:
            raise ValueError("mixing polynomials over different fields")
        return other

    def __add__(self, other):
        other = self._check(other)
        a, b, q = self.coeffs, other.coeffs, self.q
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = (out[i] + c) % q
        return FqPoly._raw(_strip_top(out), q)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if isinstance(other, LaurentNum):
            return NotImplemented
        other = self._check(other)
        a, b, q = self.coeffs, other.coeffs, self.q
        if not a or not b:
            return FqPoly._raw((), q)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return FqPoly._raw(_strip_top([c % q for c in out]), q)

    __rmul__ = __mul__

    def divrem(self, other) -> tuple["FqPoly", "FqPoly"]:
        other = self._check(other)
        if other.is_zero():
            raise DivisionByZero("polynomial division by zero")
        q = self.q
        rem = list(self.coeffs)
        db = len(other.coeffs) - 1
        inv = inv_mod(other.lc(), q)
        quo = [0] * max(0, len(rem) - db)
        for k in range(len(rem) - 1, db - 1, -1):
            c = rem[k] % q
            if c == 0:
                continue
            f = (c * inv) % q
            quo[k - db] = f
            for i, y in enumerate(other.coeffs):
                rem[k - db + i] = (rem[k - db + i] - f * y) % q
        return FqPoly._raw(_strip_top(quo), q), FqPoly._raw(_strip_top(rem[:db] if db else []), q)

    def __divmod__(self, other):
        return self.divrem(other)

    def __floordiv__(self, other):
        return self.divrem(other)[0]

    def __mod__(self, other):
        return self.divrem(other)[1]

    def gcd(self, other) -> "FqPoly":
        """Monic gcd; gcd(0, 0) is refused like any division by zero."""
        a, b = self, self._check(other)
        if b.is_zero() and a.is_zero():
            raise DivisionByZero("gcd(0, 0) is undefined")
        while not b.is_zero():
            a, b = b, a.divrem(b)[1]
        return a.monic()

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.q
        return acc

    def __eq__(self, other):
        if isinstance(other, FqPoly):
            return self.q == other.q and self.coeffs == other.coeffs
        if isinstance(other, int):
            return self == FqPoly([other], self.q)
        if isinstance(other, LaurentNum):
            return other == self
        return NotImplemented

    def __hash__(self):
        return hash(("poly", self.q, self.coeffs))

    def __bool__(self):
        return bool(self.coeffs)

    def __str__(self):
        return _format_terms((k, c) for k, c in reversed(list(enumerate(self.coeffs))) if c)

    def __repr__(self):
        return f"FqPoly({str(self)!r}, q={self.q})"


def poly_arith(kind: str, f: FqPoly, g: FqPoly):
    """Ring operations on F_q[t]: ``add``, ``mul``, ``divrem`` or ``gcd``."""
    if kind == "add":
        return f + g
    if kind == "mul":
        return f * g
    if kind == "divrem":
        return f.divrem(g)
    if kind == "gcd":
        if g.is_zero():
            raise DivisionByZero("gcd with zero second argument")
        return f.gcd(g)
    raise ValueError(f"unknown operation {kind!r}")


# ---------------------------------------------------------------------------


@total_ordering
class LogNorm:
    """A value q^k with k an exact rational, or zero.

    q itself is implicit; values from different fields must not be mixed.
    """

    __slots__ = ("exponent",)

    def __init__(self, exponent=None):
        self.exponent = None if exponent is None else Fraction(exponent)

    @classmethod
    def zero(cls) -> "LogNorm":
        return cls(None)

    @classmethod
    def parse(cls, text: str) -> "LogNorm":
        text = text.strip()
        if text.lower() == "zero":
            return cls(None)
        return cls(Fraction(text))

    def is_zero(self) -> bool:
        return self.exponent is None

    def _key(self):
        return (0, 0) if self.exponent is None else (1, self.exponent)

    def __eq__(self, other):
        if not isinstance(other, LogNorm):
            return NotImplemented
        return self.exponent == other.exponent

    def __lt__(self, other):
        if not isinstance(other, LogNorm):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash(self._key())

    def __mul__(self, other):
        if not isinstance(other, LogNorm):
            return NotImplemented
        if self.exponent is None or other.exponent is None:
            return LogNorm(None)
        return LogNorm(self.exponent + other.exponent)

    def __truediv__(self, other):
        if not isinstance(other, LogNorm):
            return NotImplemented
        if other.exponent is None:
            raise DivisionByZero("division by the zero norm")
        if self.exponent is None:
            return self
        return LogNorm(self.exponent - other.exponent)

    def __pow__(self, k):
        if self.exponent is None:
            return self
        return LogNorm(self.exponent * Fraction(k))

    def value(self, q: int) -> Fraction:
        """The norm as an exact rational; only for integral exponents."""
        if self.exponent is None:
            return Fraction(0)
        if self.exponent.denominator != 1:
            raise ValueError(f"q^{self.exponent} is not rational")
        return Fraction(q) ** int(self.exponent)

    def __str__(self):
        return "zero" if self.exponent is None else str(self.exponent)

    def __repr__(self):
        return "LogNorm(zero)" if self.exponent is None else f"LogNorm(q^{self.exponent})"


# ---------------------------------------------------------------------------


class LaurentNum:
    """Element sum_k coeffs[k] t^(lo+k) of F_q((1/t)) with finite support.

    The stored window is canonical: both end coefficients are nonzero, and
    zero is represented by an empty window with lo = 0.
    """

    __slots__ = ("coeffs", "lo", "q")

    def __init__(self, coeffs: Iterable[int] = (), lo: int = 0, q: int = 2):
        self.q = check_prime(q)
        cs = [int(c) % q for c in coeffs]
        self._set(cs, lo)

    def _set(self, cs: list[int], lo: int):
        i, j = 0, len(cs)
        while j and cs[j - 1] == 0:
            j -= 1
        while i < j and cs[i] == 0:
            i += 1
        if i == j:
            self.coeffs, self.lo = (), 0
        else:
            self.coeffs, self.lo = tuple(cs[i:j]), lo + i

    @classmethod
    def _make(cls, cs: list[int], lo: int, q: int) -> "LaurentNum":
        obj = object.__new__(cls)
        obj.q = q
        obj._set(cs, lo)
        return obj

    @classmethod
    def zero(cls, q: int) -> "LaurentNum":
        return cls((), 0, q)

    @classmethod
    def monomial(cls, c: int, k: int, q: int) -> "LaurentNum":
        return cls([c], k, q)

    @classmethod
    def from_poly(cls, f: FqPoly) -> "LaurentNum":
        return cls._make(list(f.coeffs), 0, f.q)

    @classmethod
    def from_digits(cls, digits: Sequence[int], top: int, q: int) -> "LaurentNum":
        """Build from digits listed from degree ``top`` downwards."""
        return cls._make([int(c) % q for c in reversed(digits)], top - len(digits) + 1, q)

    @classmethod
    def parse(cls, text: str, q: int) -> "LaurentNum":
        terms = _parse_terms(text, q)
        if not terms:
            return cls.zero(q)
        lo, hi = min(terms), max(terms)
        return cls._make([terms.get(k, 0) for k in range(lo, hi + 1)], lo, q)

    @property
    def degree(self):
        """Top degree of the support, ``-inf`` for zero."""
        return self.lo + len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def hi(self):
        return self.degree

    @property
    def depth(self) -> int:
        """Number of stored fractional digits (degrees -1, -2, ...)."""
        return max(0, -self.lo) if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def digit(self, k: int) -> int:
        i = k - self.lo
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def digits(self, top: int, count: int) -> tuple[int, ...]:
        """Digits at degrees top, top-1, ..., top-count+1."""
        return tuple(self.digit(top - i) for i in range(count))

    def shift(self, k: int) -> "LaurentNum":
        """Multiply by t^k."""
        if not self.coeffs:
            return self
        return LaurentNum._make(list(self.coeffs), self.lo + k, self.q)

    def truncate(self, depth: int) -> "LaurentNum":
        """Drop all digits below degree -depth."""
        if not self.coeffs or self.lo >= -depth:
            return self
        cut = -depth - self.lo
        return LaurentNum._make(list(self.coeffs[cut:]), -depth, self.q)

    def _coerce(self, other) -> "LaurentNum":
        if isinstance(other, LaurentNum):
            if other.q != self.q:
                raise ValueError("mixing elements of different fields")
            return other
        if isinstance(other, FqPoly):
            if other.q != self.q:
                raise ValueError("mixing elements of different fields")
            return LaurentNum.from_poly(other)
        if isinstance(other, (int, FqElem)):
            return LaurentNum([int(other)], 0, self.q)
        raise TypeError(f"cannot combine LaurentNum with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        if not other.coeffs:
            return self
        if not self.coeffs:
            return other
        q = self.q
        lo = min(self.lo, other.lo)
        hi = max(self.degree, other.degree)
        out = [0] * (hi - lo + 1)
        for x in (self, other):
            off = x.lo - lo
            for i, c in enumerate(x.coeffs):
                out[off + i] += c
        return LaurentNum._make([c % q for c in out], lo, q)

    __radd__ = __add__

    def __neg__(self):
        q = self.q
        return LaurentNum._make([(-c) % q for c in self.coeffs], self.lo, q)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        a, b, q = self.coeffs, other.coeffs, self.q
        if not a or not b:
            return LaurentNum.zero(q)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return LaurentNum._make([c % q for c in out], self.lo + other.lo, q)

    __rmul__ = __mul__

    def split(self) -> tuple[FqPoly, "LaurentNum"]:
        """(integral part, fractional part)."""
        return laurent_split(self)

    def abs_log(self) -> LogNorm:
        return abs_log(self)

    def __eq__(self, other):
        if isinstance(other, LaurentNum):
            return self.q == other.q and self.lo == other.lo and self.coeffs == other.coeffs
        if isinstance(other, (FqPoly, int)):
            try:
                return self == self._coerce(other)
            except ValueError:
                return False
        return NotImplemented

    def __hash__(self):
        return hash(("laurent", self.q, self.lo, self.coeffs))

    def __bool__(self):
        return bool(self.coeffs)

    def __str__(self):
        pairs = [(self.lo + k, c) for k, c in enumerate(self.coeffs) if c]
        return _format_terms(reversed(pairs))

    def __repr__(self):
        return f"LaurentNum({str(self)!r}, q={self.q})"


def laurent_split(x: LaurentNum) -> tuple[FqPoly, LaurentNum]:
    q = x.q
    if not x.coeffs:
        return FqPoly._raw((), q), x
    cut = -x.lo  # index of degree 0
    if cut <= 0:
        return FqPoly([0] * x.lo + list(x.coeffs), q), LaurentNum.zero(q)
    integral = FqPoly(x.coeffs[cut:], q)
    frac = LaurentNum._make(list(x.coeffs[:cut]), x.lo, q)
    return integral, frac


def abs_log(x) -> LogNorm:
    """log_q |x| as a LogNorm (Zero for x = 0)."""
    if isinstance(x, (LaurentNum, FqPoly)):
        return LogNorm(None) if not x.coeffs else LogNorm(x.degree)
    raise TypeError(f"abs_log needs a LaurentNum or FqPoly, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# F_q linear algebra


def _infer_q(M) -> int | None:
    for row in M:
        for x in row:
            if isinstance(x, FqElem):
                return x.q
    return None


def fq_matrix_rank(M, q: int | None = None) -> int:
    """Rank over F_q by Gaussian elimination.

    Entries may be FqElem or plain ints (then ``q`` is required).
    """
    rows = [list(r) for r in M]
    if not rows or not rows[0]:
        return 0
    if q is None:
        q = _infer_q(rows)
        if q is None:
            raise ValueError("q is required for integer matrices")
    check_prime(q)
    rows = [[int(x) % q for x in r] for r in rows]
    if q == 2:
        # rows as bitmasks; xor basis keyed by the leading bit
        basis: dict[int, int] = {}
        for r in rows:
            v = 0
            for bit in r:
                v = (v << 1) | bit
            while v:
                top = v.bit_length() - 1
                if top not in basis:
                    basis[top] = v
                    break
                v ^= basis[top]
        return len(basis)
    rank = 0
    ncols = len(rows[0])
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = inv_mod(rows[rank][col], q)
        prow = [(x * inv) % q for x in rows[rank]]
        rows[rank] = prow
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                rows[i] = [(x - f * y) % q for x, y in zip(rows[i], prow)]
        rank += 1
        if rank == len(rows):
            break
    return rank


def fq_nullspace(M, ncols: int, q: int) -> list[list[int]]:
    """Basis of the right kernel {v : M v = 0} over F_q."""
    rows = [[int(x) % q for x in r] for r in M]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = inv_mod(rows[r][col], q)
        rows[r] = [(x * inv) % q for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [(x - f * y) % q for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = (-rows[i][fc]) % q
        basis.append(v)
    return basis


def poly_matrix_det(M: Sequence[Sequence[FqPoly]]) -> FqPoly:
    """Determinant over F_q[t] by fraction-free (Bareiss) elimination."""
    n = len(M)
    if any(len(r) != n for r in M):
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        raise ValueError("empty matrix")
    q = M[0][0].q
    a = [[x if isinstance(x, FqPoly) else FqPoly([x], q) for x in row] for row in M]
    sign = 1
    prev = FqPoly([1], q)
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero()), None)
            if swap is None:
                return FqPoly((), q)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                quo, rem = num.divrem(prev)
                assert rem.is_zero()
                a[i][j] = quo
        prev = a[k][k]
    det = a[n - 1][n - 1]
    return det if sign == 1 else -det
