"""The weight vector a = (a_1..a_m ; a_{m+1}..a_{m+n})."""
from __future__ import annotations

import math
from functools import reduce

from .errors import InvalidWeights


class Weights:
    """Balanced positive weights: sum of the first m equals sum of the last n.

    >>> Weights.parse("2;1,1").d
    3
    """

    __slots__ = ("m", "n", "a")

    def __init__(self, m: int, n: int, a):
        a = tuple(a)
        if m < 1 or n < 1:
            raise InvalidWeights(f"m and n must be positive, got m={m}, n={n}")
        if len(a) != m + n:
            raise InvalidWeights(f"expected {m + n} weights, got {len(a)}")
        if any((not isinstance(x, int)) or x < 1 for x in a):
            raise InvalidWeights(f"weights must be positive integers: {a}")
        if sum(a[:m]) != sum(a[m:]):
            raise InvalidWeights(f"unbalanced weights {a[:m]} vs {a[m:]}")
        self.m, self.n, self.a = m, n, a

    @classmethod
    def parse(cls, text: str) -> "Weights":
        """Accepts ``"m:n:a1,...,ad"`` or ``"a1,..,am;b1,..,bn"``."""
        s = text.strip().strip("()")
        try:
            if ":" in s:
                m, n, rest = s.split(":")
                return cls(int(m), int(n), [int(x) for x in rest.split(",")])
            left, right = s.split(";")
            al = [int(x) for x in left.split(",")]
            be = [int(x) for x in right.split(",")]
        except ValueError as exc:
            if isinstance(exc, InvalidWeights):
                raise
            raise InvalidWeights(f"cannot parse weights {text!r}") from None
        return cls(len(al), len(be), al + be)

    @classmethod
    def equal(cls, m: int, n: int) -> "Weights":
        """The unweighted case a = (n,...,n; m,...,m) scaled down by gcd."""
        g = math.gcd(m, n)
        return cls(m, n, [n // g] * m + [m // g] * n)

    @property
    def d(self) -> int:
        return self.m + self.n

    @property
    def alpha(self) -> tuple:
        return self.a[: self.m]

    @property
    def beta(self) -> tuple:
        return self.a[self.m:]

    def side(self, name: str) -> tuple:
        if name == "alpha":
            return self.alpha
        if name == "beta":
            return self.beta
        raise ValueError(f"side must be 'alpha' or 'beta', got {name!r}")

    @property
    def lcm(self) -> int:
        return reduce(math.lcm, self.a, 1)

    def __eq__(self, other):
        return isinstance(other, Weights) and (self.m, self.n, self.a) == (other.m, other.n, other.a)

    def __hash__(self):
        return hash((self.m, self.n, self.a))

    def __str__(self):
        return f"{self.m}:{self.n}:" + ",".join(map(str, self.a))

    def __repr__(self):
        return "Weights(" + ",".join(map(str, self.alpha)) + ";" + ",".join(map(str, self.beta)) + ")"


def as_weights(w) -> Weights:
    if isinstance(w, Weights):
        return w
    if isinstance(w, str):
        return Weights.parse(w)
    if isinstance(w, (tuple, list)) and len(w) == 2 and all(isinstance(p, (tuple, list)) for p in w):
        al, be = w
        return Weights(len(al), len(be), list(al) + list(be))
    raise InvalidWeights(f"cannot interpret {w!r} as weights")
