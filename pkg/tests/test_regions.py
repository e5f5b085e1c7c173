import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fqdio.algebra import LaurentNum, LogNorm
from fqdio.errors import ConfigError, DimensionMismatch, ZeroVector
from fqdio.regions import (BallRegion, Cylinder, EDirRegion, ERegion, FRegion, RegionSpec,
                           direction_project, quasi_norm, shell_levels)
from fqdio.weights import Weights


def L(text, q=2):
    return LaurentNum.parse(text, q)


W11 = Weights.parse("1;1")
W211 = Weights.parse("2;1,1")


def test_quasi_norm_examples():
    assert quasi_norm([L("t^4")], "alpha", Weights.parse("2;1,1")) == LogNorm(2)
    assert quasi_norm([L("0")], "alpha", W11).is_zero()
    assert quasi_norm([L("t^3"), L("t^2")], "beta", Weights.parse("2;1,1")) == LogNorm(3)
    with pytest.raises(DimensionMismatch):
        quasi_norm([L("1")], "beta", W211)


@st.composite
def vec(draw, n, q=2):
    return [LaurentNum(draw(st.lists(st.integers(0, q - 1), max_size=5)), draw(st.integers(-4, 3)), q)
            for _ in range(n)]


@given(vec(2), vec(2))
def test_quasi_norm_ultrametric(x, y):
    s = [a + b for a, b in zip(x, y)]
    assert quasi_norm(s, "beta", W211) <= max(quasi_norm(x, "beta", W211), quasi_norm(y, "beta", W211))


@given(vec(2), st.integers(-3, 3))
def test_quasi_norm_homogeneous(y, s):
    if all(c.is_zero() for c in y):
        return
    dil = [c.shift(s * b) for c, b in zip(y, W211.beta)]
    assert quasi_norm(dil, "beta", W211) == quasi_norm(y, "beta", W211) * LogNorm(s)


def test_shell_levels():
    assert shell_levels([1], 2) == [0, 1, 2]
    assert shell_levels([2, 1], 1) == [0, Fraction(1, 2), 1]
    assert shell_levels([1], -1) == []


def test_direction_project_examples():
    p = direction_project([L("t^2+1")], "alpha", W11)
    assert p.s == -2 and p.normalized[0] == L("1+t^-2")
    p0 = direction_project([L("1+t^-1")], "alpha", W11, depth=2)
    assert p0.s == 0 and p0.digits == ((1, 1),)
    with pytest.raises(ZeroVector):
        direction_project([L("0")], "alpha", W11)


@given(vec(2, 3), st.integers(-3, 3))
def test_direction_invariant_under_dilation(y, s):
    if all(c.is_zero() for c in y):
        return
    dil = [c.shift(s * b) for c, b in zip(y, W211.beta)]
    p, p2 = direction_project(y, "beta", W211, 2), direction_project(dil, "beta", W211, 2)
    assert p.digits == p2.digits and p2.s == p.s - s


def test_cylinder_parse_roundtrip_and_partition():
    c = Cylinder.parse("side=beta,depth=1,allow=[1;2]", 1)
    assert Cylinder.parse(str(c), 1) == c
    assert Cylinder.parse("side=alpha,depth=0,allow=full", 1).is_full
    assert Cylinder.parse("side=alpha,depth=1,allow=[]", 1).is_empty
    parts = Cylinder.partition("beta", W211, 2, 1)
    tables = set()
    for p in parts:
        assert not (tables & p.allowed)
        tables |= p.allowed
    with pytest.raises(ConfigError):
        Cylinder.parse("side=gamma,depth=1,allow=[1]", 1)


def test_region_parse():
    assert isinstance(RegionSpec.parse("E:T=12,R=0", W11), ERegion)
    assert isinstance(RegionSpec.parse("F:S=8,R=0", W11), FRegion)
    assert isinstance(RegionSpec.parse("ball:r=3", d=2), BallRegion)
    assert isinstance(RegionSpec.parse("EDir:T=2,R=0", W11), EDirRegion)
    assert RegionSpec.parse("empty", W11).boxes() == []
    for bad in ("E:T=1", "G:T=1,R=0", "E:T=x,R=0", "E:T=1,R=0,Q=2"):
        with pytest.raises(ConfigError):
            RegionSpec.parse(bad, W11)


def test_e_membership_by_definition():
    E = ERegion(2, 0, W11)
    # ||y|| = q^1, need ||x|| < q^-1
    assert E.contains((L("t^-2"), L("t")))
    assert not E.contains((L("t^-1"), L("t")))
    assert not E.contains((L("t^-5"), L("t^-1")))  # y outside the shells
    assert not E.contains((L("0"), L("t^3")))


@pytest.mark.parametrize("w", [W11, W211, Weights.parse("1,1;2")])
def test_contains_degrees_agrees_with_contains(w):
    rng = random.Random(3)
    q = 2
    E, F = ERegion(2, 1, w), FRegion(2, 1, w)
    for _ in range(300):
        v = tuple(LaurentNum([rng.randrange(q) for _ in range(3)], rng.randrange(-5, 4), q) for _ in range(w.d))
        degs = np.array([[x.degree if not x.is_zero() else -(1 << 40) for x in v]], dtype=np.int64)
        assert bool(E.contains_degrees(degs)[0]) == E.contains(v)
        assert bool(F.contains_degrees(degs)[0]) == F.contains(v)


def test_edir_needs_digits():
    C1 = Cylinder.parse("side=alpha,depth=1,allow=[1]", 1)
    R = EDirRegion(2, 0, W11, C1, Cylinder.full("beta"))
    assert R.contains((L("t^-3", 3), L("t", 3)))
    assert not R.contains((LaurentNum([2], -3, 3), L("t", 3)))
    assert not R.contains((L("0", 3), L("t", 3)))
    with pytest.raises(TypeError):
        R.contains_degrees(np.zeros((1, 2), dtype=np.int64))
