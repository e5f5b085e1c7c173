import itertools
import random
from fractions import Fraction

import pytest

from fqdio.algebra import LaurentNum
from fqdio.diophantine import (count_solutions, count_solutions_directional, cylinder_measure,
                               expected_count, expected_shell_masses, measure_E,
                               measure_E_directional, measure_F, precision_needed,
                               solution_probability)
from fqdio.errors import InsufficientPrecision, InvalidWeights
from fqdio.experiments import sample_matrix
from fqdio.regions import Cylinder
from fqdio.weights import Weights

W11 = Weights.parse("1;1")
W211 = Weights.parse("2;1,1")


def zero_matrix(q, w):
    return [[LaurentNum.zero(q)] * w.n for _ in range(w.m)]


def test_measure_E_examples():
    assert measure_E(2, W11, 0, 3) == 1
    assert measure_E(2, W11, 0, 0) == Fraction(1, 4)
    assert measure_E(2, W211, 0, 1) == Fraction(3, 4)
    assert measure_E(3, W11, 0, 2) == Fraction(2, 3)


def test_measure_F_examples():
    assert measure_F(2, W11, 0, 3) == 1
    assert measure_F(2, W11, 0, 0) == Fraction(1, 4)
    # frozen: E and F differ once the weights are unequal
    assert measure_F(2, W211, 0, 1) == Fraction(1, 2)


def test_measure_rejects_bad_weights():
    with pytest.raises(InvalidWeights):
        measure_E(2, "1;2", 0, 1)


@pytest.mark.parametrize("w", [W11, W211, Weights.parse("1,1;2"), Weights.parse("1,1;1,1")])
@pytest.mark.parametrize("q", [2, 3])
def test_measure_monotone(w, q):
    for R in (-1, 0, 1):
        vals = [measure_E(q, w, R, T) for T in range(5)]
        assert vals == sorted(vals)
        assert all(measure_E(q, w, R, T) <= measure_E(q, w, R + 1, T) for T in range(5))


def test_precision_rule():
    assert precision_needed(W11, 0, 3) == 7
    assert precision_needed(W211, -1, 2) == 9


def test_directional_measure_examples():
    full_a, full_b = Cylinder.full("alpha"), Cylinder.full("beta")
    assert measure_E_directional(2, W11, 0, 3, full_a, full_b) == measure_E(2, W11, 0, 3)
    assert measure_E_directional(2, W11, 0, 3, Cylinder.empty("alpha"), full_b) == 0
    c1 = Cylinder.parse("side=alpha,depth=1,allow=[1]", 1)
    for T in range(4):
        assert measure_E_directional(3, W11, 0, T, c1, full_b) == measure_E(3, W11, 0, T) / 2


def test_cylinder_measure_examples():
    assert cylinder_measure(Cylinder.full("alpha"), "alpha", W11, 3) == 1
    c = Cylinder.parse("side=alpha,depth=1,allow=[1]", 1)
    c2 = Cylinder.parse("side=alpha,depth=1,allow=[2]", 1)
    assert cylinder_measure(c, "alpha", W11, 3) == Fraction(1, 2)
    assert cylinder_measure(c | c2, "alpha", W11, 3) == 1
    parts = Cylinder.partition("beta", W211, 2, 2)
    assert sum(cylinder_measure(p, "beta", W211, 2) for p in parts) == 1


def test_count_zero_matrix():
    res = count_solutions(zero_matrix(2, W11), W11, 0, 3)
    assert res.count == 15
    assert count_solutions(zero_matrix(2, W11), W11, 0, 3, method="enumerate").count == 15


def test_count_refuses_short_precision():
    A = sample_matrix(2, 1, 1, 4, 1)
    with pytest.raises(InsufficientPrecision):
        count_solutions(A, W11, 0, 3, precision=4)


def test_count_tight_threshold_is_rare():
    # R = -5 forces five vanishing digits per candidate
    counts = [count_solutions(sample_matrix(2, 1, 1, 12, s), W11, -5, 1, precision=12).count
              for s in range(40)]
    assert sum(counts) <= 3
    for s in range(5):
        A = sample_matrix(2, 1, 1, 12, s)
        assert count_solutions(A, W11, -5, 1, 12).count == \
            count_solutions(A, W11, -5, 1, 12, method="enumerate").count


@pytest.mark.parametrize("w", [W11, W211, Weights.parse("1,1;2")])
@pytest.mark.parametrize("q", [2, 3])
def test_kernel_and_enumeration_agree(w, q):
    rng = random.Random(q * 10 + w.d)
    for _ in range(6):
        R, T = rng.randrange(-1, 2), rng.randrange(0, 3)
        P = precision_needed(w, R, T)
        A = sample_matrix(q, w.m, w.n, P, rng.randrange(1 << 30))
        a = count_solutions(A, w, R, T, P)
        b = count_solutions(A, w, R, T, P, method="enumerate")
        assert a.count == b.count
        assert sum(a.shells.values()) == a.count


def test_directional_full_cylinders_add_degenerate():
    A = sample_matrix(3, 1, 1, 40, 5)
    full = count_solutions(A, W11, 0, 4, 40).count
    res = count_solutions_directional(A, W11, 0, 4, Cylinder.full("alpha"), Cylinder.full("beta"), 40)
    assert res.count + res.degenerate == full
    assert count_solutions_directional(A, W11, 0, 4, Cylinder.full("alpha"),
                                       Cylinder.empty("beta"), 40).count == 0


@pytest.mark.parametrize("seed", range(4))
def test_directional_partition_additivity(seed):
    q = 3
    A = sample_matrix(q, 1, 1, 40, seed)
    total = count_solutions_directional(A, W11, 0, 5, Cylinder.full("alpha"), Cylinder.full("beta"), 40)
    parts = 0
    for c1, c2 in itertools.product(Cylinder.partition("alpha", W11, q, 1), Cylinder.partition("beta", W11, q, 1)):
        parts += count_solutions_directional(A, W11, 0, 5, c1, c2, 40).count
    assert parts == total.count


def test_solution_probability_examples():
    one = (LaurentNum([1], 0, 2),)
    assert solution_probability(one, W11, 0) == 1
    assert solution_probability((LaurentNum.parse("t", 2),), W11, 0) == Fraction(1, 2)
    for k in range(4):
        qv = (LaurentNum.monomial(1, k, 2),)
        assert solution_probability(qv, W11, 0) == Fraction(1, 2 ** k)


def test_solution_probability_matches_digit_average():
    # exhaustive average over all A with digits down to -(k+2)
    w, q = W11, 2
    for k in range(3):
        qv = LaurentNum.monomial(1, k, 2) + (LaurentNum.parse("1", 2) if k else LaurentNum.zero(2))
        depth = k + 2
        hits = 0
        for digs in itertools.product(range(q), repeat=depth):
            A = LaurentNum(list(reversed(digs)), -depth, q)
            frac = (A * qv).split()[1]
            hits += frac.is_zero() or frac.degree < -k
        assert Fraction(hits, q ** depth) == solution_probability((qv,), w, 0)


def test_expected_count_examples():
    assert expected_count(2, W11, 0, 3) == 4
    assert expected_count(2, W11, 0, 0) == 1
    assert expected_count(3, W211, 0, 1) == 16


@pytest.mark.parametrize("q", [2, 3])
def test_expected_count_is_scaled_measure(q):
    for w in (W11, W211):
        for R in (-1, 0, 1):
            for T in range(3):
                assert expected_count(q, w, R, T) == q ** w.d * measure_E(q, w, R, T)


def test_expected_shell_masses_constant_past_zero():
    masses = expected_shell_masses(2, W11, 0, 6)
    assert masses[0] == 1 and len({masses[k] for k in masses if k > 0}) == 1
