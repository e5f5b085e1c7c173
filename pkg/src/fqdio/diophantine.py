"""Volumes of E/F regions and exact solution counts N_R(T, A).

The counting system is ``|A q - p|_a < q^R / |q|_b`` with ``1 <= |q|_b <= q^T``
over nonzero pairs (p, q) in F_q[t]^m x F_q[t]^n.  For a fixed beta-shell
k = log_q |q|_b every row condition says that the fractional digits of
(A q)_i vanish down to some degree, which is F_q-linear in the
coefficients of q.  Counting therefore reduces to kernel dimensions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebra import LaurentNum, fq_matrix_rank, fq_nullspace
from .errors import BudgetExceeded, InsufficientPrecision, InvalidWeights, ZeroVector
from .regions import Cylinder, direction_project, quasi_norm, shell_levels
from .weights import Weights, as_weights

DEFAULT_BUDGET = 1 << 20


def _weights(w) -> Weights:
    try:
        return as_weights(w)
    except InvalidWeights:
        raise
    except Exception as exc:  # malformed input of another kind
        raise InvalidWeights(str(exc)) from None


def _qpow(q: int, e: int) -> Fraction:
    return Fraction(q) ** e


def precision_needed(w, R: int, T: int) -> int:
    """P* = T max b + max(0, (T - R) max a) + 1."""
    w = _weights(w)
    return T * max(w.beta) + max(0, (T - R) * max(w.alpha)) + 1


# ---------------------------------------------------------------------------
# volumes


def measure_E(q: int, w, R: int, T: int) -> Fraction:
    w = _weights(w)
    if T < 0:
        return Fraction(0)
    total = Fraction(0)
    for k in shell_levels(w.beta, T):
        x_part = sum(math.ceil((R - k) * a) for a in w.alpha) - w.m
        hi = sum(math.floor(k * b) for b in w.beta)
        lo = sum(math.ceil(k * b) for b in w.beta) - w.n
        total += _qpow(q, x_part) * (_qpow(q, hi) - _qpow(q, lo))
    return total


def measure_F(q: int, w, R: int, S: int) -> Fraction:
    w = _weights(w)
    if S < 0:
        return Fraction(0)
    total = Fraction(0)
    for s in shell_levels(w.alpha, S):
        y_part = sum(math.ceil((R - s) * b) for b in w.beta) - w.n
        hi = sum(math.floor(s * a) for a in w.alpha)
        lo = sum(math.ceil(s * a) for a in w.alpha) - w.m
        total += _qpow(q, y_part) * (_qpow(q, hi) - _qpow(q, lo))
    return total


def _refined_tables(C: Cylinder, side: str, w: Weights, q: int):
    """Yield (kappa, in_C) for every digit table at a depth that decides both
    shell membership and the cylinder; kappa is None off the shell."""
    a = w.side(side)
    depth = max([C.depth] + list(a))
    for tab in itertools.product(itertools.product(range(q), repeat=depth), repeat=len(a)):
        kappa = None
        for col, ai in zip(tab, a):
            idx = next((i for i, c in enumerate(col[:ai]) if c), None)
            if idx is not None:
                k = Fraction(-idx, ai)
                if kappa is None or k > kappa:
                    kappa = k
        if kappa is None:
            yield None, False, depth
        else:
            yield kappa, C.contains_table(tab), depth


def _shell_profile(C: Cylinder, side: str, w: Weights, q: int) -> dict:
    """measure of {z in the unit shell : kappa(z) = kappa', pi(z) in C} for each kappa'."""
    prof: dict = {}
    a = w.side(side)
    if C.is_empty:
        return prof
    for kappa, inside, depth in _refined_tables(C, side, w, q):
        if kappa is not None and inside:
            prof[kappa] = prof.get(kappa, 0) + 1
    cell = _qpow(q, -len(a) * max([C.depth] + list(a)))
    return {k: v * cell for k, v in prof.items()}


def cylinder_measure(C: Cylinder, side: str, w, q: int) -> Fraction:
    """Fraction of the unit shell occupied by C."""
    w = _weights(w)
    if C.is_full:
        return Fraction(1)
    if C.is_empty:
        return Fraction(0)
    hit = tot = 0
    for kappa, inside, _ in _refined_tables(C, side, w, q):
        if kappa is not None:
            tot += 1
            hit += inside
    return Fraction(hit, tot)


def _below_measure(prof: dict, total_weight: int, q: int, c) -> Fraction:
    """measure of {x : kappa(x) < c, pi(x) in C} from the unit-shell profile."""
    out = Fraction(0)
    ratio = _qpow(q, -total_weight)
    for kp, mass in prof.items():
        s0 = math.floor(kp - c) + 1
        out += mass * ratio ** s0 / (1 - ratio)
    return out


def measure_E_directional(q: int, w, R: int, T: int, C1: Cylinder, C2: Cylinder) -> Fraction:
    w = _weights(w)
    if T < 0 or C1.is_empty or C2.is_empty:
        return Fraction(0)
    p1 = _shell_profile(C1, "alpha", w, q)
    p2 = _shell_profile(C2, "beta", w, q)
    sa, sb = sum(w.alpha), sum(w.beta)
    total = Fraction(0)
    for k in shell_levels(w.beta, T):
        top = math.ceil(k)
        ymass = p2.get(k - top, 0) * _qpow(q, top * sb)
        if ymass:
            total += _below_measure(p1, sa, q, R - k) * ymass
    return total


# ---------------------------------------------------------------------------
# counting


@dataclass
class CountResult:
    count: int
    q: int
    w: Weights
    R: int
    T: int
    depth_used: int | None = None
    degenerate: int = 0
    shells: dict = field(default_factory=dict)

    def __int__(self):
        return self.count


def _as_matrix(A, w: Weights) -> tuple:
    rows = [list(r) for r in A]
    if len(rows) != w.m or any(len(r) != w.n for r in rows):
        raise InvalidWeights(f"A must be {w.m}x{w.n} for weights {w!r}")
    return rows


def _field_of(A) -> int:
    for r in A:
        for x in r:
            return x.q
    raise ValueError("empty matrix")


def _check_precision(w: Weights, R: int, T: int, precision):
    need = precision_needed(w, R, T)
    if precision is not None and precision < need:
        raise InsufficientPrecision(f"A known to {precision} digits, need {need}")
    return need


def _shell_system(A, w: Weights, R: int, k: Fraction, strict: bool):
    """Constraint matrix on the coefficients of q for beta-shell k.

    Columns are (j, l) with l <= floor(k b_j) (or <= ceil(k b_j) - 1 when
    ``strict``); rows are (i, s) meaning the digit of (A q)_i at degree -s.
    Returns (rows, columns, e) where e_i = ceil((R - k) a_i).
    """
    e = [math.ceil((R - k) * a) for a in w.alpha]
    if strict:
        tops = [math.ceil(k * b) - 1 for b in w.beta]
    else:
        tops = [math.floor(k * b) for b in w.beta]
    cols = [(j, l) for j in range(w.n) for l in range(tops[j] + 1)]
    rows = []
    for i in range(w.m):
        for s in range(1, -e[i] + 1):
            rows.append([A[i][j].digit(-(s + l)) for j, l in cols])
    return rows, cols, e


def _kernel_dim(rows, ncols: int, q: int) -> int:
    if ncols == 0:
        return 0
    if not rows:
        return ncols
    return ncols - fq_matrix_rank(rows, q)


def count_solutions(A, w, R: int, T: int, precision: int | None = None,
                    method: str = "kernel", budget: int = DEFAULT_BUDGET) -> CountResult:
    """N_R(T, A): nonzero pairs (p, q) solving the weighted system.

    ``precision`` is the number of fractional digits of A that are known;
    None means A is exact.  ``method="enumerate"`` walks every candidate q
    and every p in the threshold box instead of using kernel dimensions.
    """
    w = _weights(w)
    A = _as_matrix(A, w)
    q = _field_of(A)
    need = _check_precision(w, R, T, precision)
    if T < 0:
        return CountResult(0, q, w, R, T, need)
    if method == "enumerate":
        return _count_enumerate(A, w, R, T, q, need, budget)
    if method != "kernel":
        raise ValueError(f"unknown method {method!r}")
    total = 0
    shells = {}
    for k in shell_levels(w.beta, T):
        rows_le, cols_le, e = _shell_system(A, w, R, k, strict=False)
        rows_lt, cols_lt, _ = _shell_system(A, w, R, k, strict=True)
        mult = q ** sum(max(x, 0) for x in e)
        n_le = q ** _kernel_dim(rows_le, len(cols_le), q)
        n_lt = q ** _kernel_dim(rows_lt, len(cols_lt), q)
        shells[k] = mult * (n_le - n_lt)
        total += shells[k]
    return CountResult(total, q, w, R, T, need, shells=shells)


def _poly_vectors(q: int, tops: Sequence[int]):
    """All vectors of polynomials with deg of coordinate j <= tops[j]."""
    spaces = [list(itertools.product(range(q), repeat=t + 1)) if t >= 0 else [()] for t in tops]
    for combo in itertools.product(*spaces):
        yield tuple(LaurentNum(list(c), 0, q) for c in combo)


def _count_enumerate(A, w: Weights, R: int, T: int, q: int, need: int, budget: int) -> CountResult:
    tops = [math.floor(T * b) for b in w.beta]
    size = q ** sum(t + 1 for t in tops)
    if size > budget:
        raise BudgetExceeded(f"{size} candidate vectors q exceed budget {budget}")
    total = 0
    for qv in _poly_vectors(q, tops):
        ny = quasi_norm(qv, "beta", w)
        if ny.is_zero() or ny.exponent > T:
            continue
        k = ny.exponent
        npairs = 1
        for i in range(w.m):
            y = sum((A[i][j] * qv[j] for j in range(w.n)), LaurentNum.zero(q))
            integral, frac = y.split()
            # every p_i = integral + delta with deg(frac - delta) small enough
            e = math.ceil((R - k) * w.alpha[i])  # need deg(y - p_i) <= e - 1
            ok = 0
            for delta in _poly_vectors(q, [max(e - 1, -1)]):
                diff = frac - delta[0]
                if diff.is_zero() or Fraction(diff.degree, w.alpha[i]) < R - k:
                    ok += 1
            npairs *= ok
            if not npairs:
                break
        total += npairs
    return CountResult(total, q, w, R, T, need)


def count_solutions_directional(A, w, R: int, T: int, C1: Cylinder, C2: Cylinder,
                                precision: int | None = None,
                                budget: int = DEFAULT_BUDGET) -> CountResult:
    """Solutions with pi_a(Aq - p) in C1 and pi_b(q) in C2.

    Solutions with Aq - p = 0 have no direction; they are excluded from
    ``count`` and tallied in ``degenerate``.
    """
    w = _weights(w)
    A = _as_matrix(A, w)
    q = _field_of(A)
    need = _check_precision(w, R, T, precision)
    count = degenerate = 0
    if T < 0 or C2.is_empty:
        return CountResult(0, q, w, R, T, need)
    deepest = 0
    for k in shell_levels(w.beta, T):
        rows, cols, e = _shell_system(A, w, R, k, strict=False)
        kernel = fq_nullspace(rows, len(cols), q) if cols else []
        if q ** len(kernel) > budget:
            raise BudgetExceeded(f"{q}^{len(kernel)} kernel vectors exceed budget {budget}")
        for coeffs in itertools.product(range(q), repeat=len(kernel)):
            vec = [0] * len(cols)
            for c, basis in zip(coeffs, kernel):
                if c:
                    vec = [(x + c * y) % q for x, y in zip(vec, basis)]
            polys = [[0] * (max((l for jj, l in cols if jj == j), default=-1) + 1) for j in range(w.n)]
            for (j, l), c in zip(cols, vec):
                polys[j][l] = c
            qv = tuple(LaurentNum(p, 0, q) for p in polys)
            ny = quasi_norm(qv, "beta", w)
            if ny.is_zero() or ny.exponent != k:
                continue
            if not C2.contains(qv, w):
                continue
            fracs = []
            for i in range(w.m):
                y = sum((A[i][j] * qv[j] for j in range(w.n)), LaurentNum.zero(q))
                fracs.append(y.split()[1])
            boxes = [_poly_vectors(q, [e_i - 1]) if e_i >= 1 else [(LaurentNum.zero(q),)] for e_i in e]
            for deltas in itertools.product(*[list(b) for b in boxes]):
                x = tuple(f - dl[0] for f, dl in zip(fracs, deltas))
                if all(xi.is_zero() for xi in x):
                    degenerate += 1
                    continue
                if C1.is_full:
                    count += 1
                    continue
                proj = direction_project(x, "alpha", w, C1.depth)
                # digits of x consulted: down to degree -(s a_i) - depth + 1
                probe = max(proj.s * a for a in w.alpha) + C1.depth - 1
                probe += max(int(p.degree) if not p.is_zero() else 0 for p in qv)
                deepest = max(deepest, probe)
                if C1.contains_table(proj.digits):
                    count += 1
    if precision is not None and deepest > precision:
        raise InsufficientPrecision(f"directions need {deepest} digits of A, only {precision} known")
    return CountResult(count, q, w, R, T, max(need, deepest), degenerate=degenerate)


# ---------------------------------------------------------------------------
# expectation oracle


def _probability_system(qvec, w: Weights, R: int, depth):
    """Rows over the digit variables of A forcing the row thresholds for q."""
    q = qvec[0].q
    ny = quasi_norm(qvec, "beta", w)
    if ny.is_zero():
        raise ZeroVector("solution_probability needs a nonzero vector")
    k = ny.exponent
    e = [math.ceil((R - k) * a) for a in w.alpha]
    degq = max(int(x.degree) for x in qvec if not x.is_zero())
    umax = max([0] + [-x for x in e]) + degq
    if depth is not None:
        umax = min(umax, depth)
    var = {}
    for i in range(w.m):
        for j in range(w.n):
            for u in range(1, umax + 1):
                var[(i, j, u)] = len(var)
    rows = []
    for i in range(w.m):
        for s in range(1, -e[i] + 1):
            row = [0] * len(var)
            for j in range(w.n):
                for l in range(degq + 1):
                    c = qvec[j].digit(l)
                    u = s + l
                    if c and (i, j, u) in var:
                        row[var[(i, j, u)]] = c
            rows.append(row)
    return rows, len(var), e, q


def solution_probability(qvec, w, R: int, q: int | None = None, depth: int | None = None) -> Fraction:
    """Probability over uniform A that p exists with |(Aq - p)_i| under every row threshold."""
    w = _weights(w)
    rows, nvar, e, field_q = _probability_system(tuple(qvec), w, R, depth)
    q = field_q if q is None else q
    if not rows:
        return Fraction(1)
    return Fraction(1, q ** fq_matrix_rank(rows, q))


def expected_solutions(qvec, w, R: int, depth: int | None = None) -> Fraction:
    """Expected number of p paired with q: the probability times the p-box size."""
    w = _weights(w)
    qvec = tuple(qvec)
    q = qvec[0].q
    k = quasi_norm(qvec, "beta", w).exponent
    mult = q ** sum(max(math.ceil((R - k) * a), 0) for a in w.alpha)
    return mult * solution_probability(qvec, w, R, q, depth)


def expected_shell_masses(q: int, w, R: int, T: int, budget: int = DEFAULT_BUDGET) -> dict:
    """Expected number of solutions per beta-shell k in [0, T], as a dict k -> Fraction."""
    w = _weights(w)
    tops = [math.floor(T * b) for b in w.beta]
    size = q ** sum(t + 1 for t in tops)
    if size > budget:
        raise BudgetExceeded(f"{size} candidate vectors exceed budget {budget}")
    out = {k: Fraction(0) for k in shell_levels(w.beta, T)}
    for qv in _poly_vectors(q, tops):
        ny = quasi_norm(qv, "beta", w)
        if ny.is_zero():
            continue
        out[ny.exponent] += expected_solutions(qv, w, R)
    return out


def expected_count(q: int, w, R: int, T: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Sum of expected solutions over all nonzero q with 1 <= |q|_b <= q^T."""
    if T < 0:
        return Fraction(0)
    return sum(expected_shell_masses(q, w, R, T, budget).values(), Fraction(0))
