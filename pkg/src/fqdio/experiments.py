"""Seeded experiments, regression helpers and the brute-force oracles."""
from __future__ import annotations

import itertools
import math
import re
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import LaurentNum, check_prime
from .diophantine import (count_solutions, count_solutions_directional, expected_count,
                          expected_shell_masses, measure_E, measure_E_directional, measure_F,
                          precision_needed)
from .dynamics import birkhoff_series, orbit_precision, parse_observable
from .errors import BudgetExceeded, ConfigError, DegenerateFit, InsufficientPrecision
from .regions import Cylinder, EDirRegion, RegionSpec, direction_project, quasi_norm
from .weights import Weights, as_weights

# ---------------------------------------------------------------------------
# sampling


def derive_seed(master_seed: int, trial: int) -> int:
    """Per-trial seed; depends only on (master_seed, trial)."""
    ss = np.random.SeedSequence([int(master_seed), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def sample_digits(q: int, m: int, n: int, depth: int, seed) -> np.ndarray:
    """Uniform digit array of shape (m, n, depth); [i, j, u] is the digit at degree -(u+1)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return _rng(seed).integers(0, q, size=(m, n, depth), dtype=np.int64)


def matrix_from_digits(digits: np.ndarray, q: int) -> list:
    m, n, depth = digits.shape
    return [[LaurentNum(digits[i, j, ::-1].tolist(), -depth, q) for j in range(n)] for i in range(m)]


def sample_matrix(q: int, m: int, n: int, depth: int, seed) -> list:
    """m x n matrix of LaurentNum with zero integral part and ``depth`` random fractional digits."""
    check_prime(q)
    return matrix_from_digits(sample_digits(q, m, n, depth, seed), q)


# ---------------------------------------------------------------------------
# configuration and records


@dataclass
class ExperimentConfig:
    q: int
    weights: Weights
    R: int = 0
    T: int | None = None
    T_values: tuple = ()
    N: int | None = None
    N0: int | None = None
    trials: int = 1
    depth: int | None = None
    master_seed: int = 0
    observable: str = "siegel:E"
    region: str | None = None
    cylinders: tuple = ()
    budget: int = 1 << 20
    out: str | None = None
    format: str = "csv"
    workers: int = 1
    kind: str = "count"
    force_zero: bool = False

    def sweep(self) -> tuple:
        if self.T_values:
            return tuple(self.T_values)
        if self.T is None:
            raise ConfigError("T or a T sweep is required")
        return (self.T,)

    def required_depth(self) -> int:
        w = self.weights
        if self.kind == "orbit":
            obs = parse_observable(self.observable, w, self.T, self.R, self.cylinders, self.budget)
            return max(orbit_precision(obs, w, self.N or 1), 1)
        need = precision_needed(w, self.R, max(self.sweep()))
        if self.cylinders:
            # directions read digits below the threshold; a tiny x needs more,
            # and a shortfall raises InsufficientPrecision instead of guessing
            need += 2 * max(w.a) + 24
        return need

    def validate(self) -> "ExperimentConfig":
        check_prime(self.q)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.kind not in ("count", "orbit"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "orbit" and (self.N is None or self.N < 1):
            raise ConfigError("orbit experiments need N >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.depth is None:
            self.depth = self.required_depth()
        elif self.depth < self.required_depth():
            raise ConfigError(f"depth {self.depth} is below the required {self.required_depth()}")
        return self


@dataclass
class TrialRecord:
    trial: int
    seed: int
    T_or_N: int
    value: Fraction
    centering: Fraction
    norm_error: Fraction | None
    micros: int = 0


class RecordList(list):
    """List of TrialRecord carrying the run's aggregate summary."""

    def __init__(self, records=(), aggregate=None):
        super().__init__(records)
        self.aggregate = aggregate or {}


def rational_sqrt(x: Fraction, bits: int = 20) -> Fraction:
    """Floor of sqrt(x) on the grid 2^-bits; a fixed rational stand-in for sqrt."""
    x = Fraction(x)
    return Fraction(math.isqrt(x.numerator * 4 ** bits // x.denominator), 2 ** bits)


def log_q_exponent(x: Fraction, q: int) -> int:
    """Integer exponent e of the q-power nearest to x (at least 1)."""
    e = round(math.log(x) / math.log(q))
    return max(e, 1)


def normalized_error(value, centering, q: int) -> Fraction | None:
    """(value - c) / (sqrt(c) * (log_q c)^2) with rational stand-ins for sqrt and log."""
    c = Fraction(centering)
    if c <= 0:
        return None
    root = rational_sqrt(c)
    if root == 0:
        return None
    return (Fraction(value) - c) / (root * log_q_exponent(c, q) ** 2)


# ---------------------------------------------------------------------------
# count experiments


def _count_trial(cfg: ExperimentConfig, trial: int, centers: dict) -> list[TrialRecord]:
    w, q = cfg.weights, cfg.q
    seed = derive_seed(cfg.master_seed, trial)
    if cfg.force_zero and trial == 0:
        A = [[LaurentNum.zero(q)] * w.n for _ in range(w.m)]
        precision = None
    else:
        A = sample_matrix(q, w.m, w.n, cfg.depth, seed)
        precision = cfg.depth
    sweep = cfg.sweep()
    out = []
    if cfg.cylinders:
        c1 = next((c for c in cfg.cylinders if c.side == "alpha"), Cylinder.full("alpha"))
        c2 = next((c for c in cfg.cylinders if c.side == "beta"), Cylinder.full("beta"))
        for T in sweep:
            t0 = time.perf_counter_ns()
            res = count_solutions_directional(A, w, cfg.R, T, c1, c2, precision, cfg.budget)
            micros = (time.perf_counter_ns() - t0) // 1000
            out.append(TrialRecord(trial, seed, T, Fraction(res.count), centers[T],
                                   normalized_error(res.count, centers[T], q), micros))
        return out
    t0 = time.perf_counter_ns()
    res = count_solutions(A, w, cfg.R, max(sweep), precision, budget=cfg.budget)
    micros = (time.perf_counter_ns() - t0) // 1000
    for T in sweep:
        value = sum(v for k, v in res.shells.items() if k <= T)
        out.append(TrialRecord(trial, seed, T, Fraction(value), centers[T],
                               normalized_error(value, centers[T], q), micros))
    return out


def _run_trials(fn, cfg: ExperimentConfig, *args) -> list:
    trials = range(cfg.trials)
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(fn, itertools.repeat(cfg), trials, *[itertools.repeat(a) for a in args]))
    else:
        chunks = [fn(cfg, t, *args) for t in trials]
    return [r for chunk in chunks for r in chunk]


def _quantiles(values: Sequence[Fraction], probs=(Fraction(1, 10), Fraction(1, 2), Fraction(9, 10))) -> dict:
    """Nearest-rank quantiles; exact values taken from the sample."""
    vals = sorted(values)
    if not vals:
        return {}
    out = {}
    for p in probs:
        idx = max(0, math.ceil(p * len(vals)) - 1)
        out[str(p)] = vals[idx]
    return out


def run_count_experiment(cfg: ExperimentConfig) -> RecordList:
    """One record per (trial, T); the aggregate holds ratios, quantiles and the error slope."""
    cfg.validate()
    w, q, R = cfg.weights, cfg.q, cfg.R
    sweep = cfg.sweep()
    if cfg.cylinders:
        c1 = next((c for c in cfg.cylinders if c.side == "alpha"), Cylinder.full("alpha"))
        c2 = next((c for c in cfg.cylinders if c.side == "beta"), Cylinder.full("beta"))
        centers = {T: Fraction(q) ** w.d * measure_E_directional(q, w, R, T, c1, c2) for T in sweep}
    else:
        masses = expected_shell_masses(q, w, R, max(sweep), cfg.budget)
        centers = {T: sum((v for k, v in masses.items() if k <= T), Fraction(0)) for T in sweep}
    records = _run_trials(_count_trial, cfg, centers)
    records.sort(key=lambda r: (r.trial, r.T_or_N))
    return RecordList(records, aggregate_count(records, cfg, centers))


def aggregate_count(records, cfg: ExperimentConfig, centers: dict) -> dict:
    by_T: dict = {}
    for r in records:
        by_T.setdefault(r.T_or_N, []).append(r)
    mean_ratio = {}
    mean_abs = {}
    for T, recs in sorted(by_T.items()):
        c = centers[T]
        mean_ratio[T] = sum((r.value for r in recs), Fraction(0)) / (len(recs) * c) if c else None
        mean_abs[T] = sum((abs(r.value - c) for r in recs), Fraction(0)) / len(recs)
    pts = [(float(centers[T]), float(mean_abs[T])) for T in sorted(by_T) if mean_abs[T] > 0 and centers[T] > 0]
    try:
        slope = fit_loglog_slope(pts)[0]
    except DegenerateFit:
        slope = None
    Tmax = max(by_T)
    errs = [r.norm_error for r in by_T[Tmax] if r.norm_error is not None]
    w = cfg.weights
    measure = measure_E(cfg.q, w, cfg.R, Tmax)
    agg = {
        "q": cfg.q, "weights": str(w), "R": cfg.R, "trials": cfg.trials,
        "master_seed": cfg.master_seed, "depth": cfg.depth,
        "centering": {T: centers[T] for T in sorted(centers)},
        "mean_ratio": mean_ratio,
        "mean_abs_error": mean_abs,
        "norm_error_quantiles": _quantiles(errs),
        "fitted_slope": slope,
        "expected_over_measure": (centers[Tmax] / measure) if measure and not cfg.cylinders else None,
    }
    return agg


# ---------------------------------------------------------------------------
# orbit experiments


def orbit_target(cfg: ExperimentConfig) -> Fraction | None:
    """T * c_hat for siegel:E, with c_hat = E(N0) - E(N0 - 1) from the expectation oracle."""
    obs = cfg.observable.split(":")
    if obs[:2] != ["siegel", "E"]:
        return siegel_mean(cfg)
    N0 = cfg.N0 if cfg.N0 is not None else max(cfg.T, 1)
    c_hat = expected_count(cfg.q, cfg.weights, cfg.R, N0, cfg.budget) - \
        expected_count(cfg.q, cfg.weights, cfg.R, N0 - 1, cfg.budget)
    return cfg.T * c_hat


def siegel_mean(cfg: ExperimentConfig) -> Fraction | None:
    """Integral of the observable over the space of lattices, when known in closed form."""
    w, q = cfg.weights, cfg.q
    parts = cfg.observable.split(":")
    scale = Fraction(q) ** w.d
    if parts[0] != "siegel":
        return None
    kind = parts[1].lower()
    if kind == "e":
        return scale * measure_E(q, w, cfg.R, cfg.T)
    if kind == "f":
        return scale * measure_F(q, w, cfg.R, cfg.T)
    if kind == "ball":
        return Fraction(q) ** (w.d * int(parts[2]))
    if kind == "edir":
        c1 = next((c for c in cfg.cylinders if c.side == "alpha"), Cylinder.full("alpha"))
        c2 = next((c for c in cfg.cylinders if c.side == "beta"), Cylinder.full("beta"))
        return scale * measure_E_directional(q, w, cfg.R, cfg.T, c1, c2)
    if kind == "empty":
        return Fraction(0)
    return None


def checkpoints(N: int, start: int = 16) -> list[int]:
    pts = []
    k = start
    while k < N:
        pts.append(k)
        k *= 2
    pts.append(N)
    return pts


def _orbit_trial(cfg: ExperimentConfig, trial: int, target) -> list[TrialRecord]:
    w, q = cfg.weights, cfg.q
    seed = derive_seed(cfg.master_seed, trial)
    if cfg.force_zero and trial == 0:
        A = [[LaurentNum.zero(q)] * w.n for _ in range(w.m)]
        precision = None
    else:
        A = sample_matrix(q, w.m, w.n, cfg.depth, seed)
        precision = cfg.depth
    obs = parse_observable(cfg.observable, w, cfg.T, cfg.R, cfg.cylinders, cfg.budget)
    t0 = time.perf_counter_ns()
    series = birkhoff_series(obs, A, w, cfg.N, precision)
    micros = (time.perf_counter_ns() - t0) // 1000
    center = target if target is not None else Fraction(0)
    out = []
    for k in checkpoints(cfg.N, 1 if cfg.N < 16 else 16):
        v = series[k - 1]
        out.append(TrialRecord(trial, seed, k, v, center, normalized_error(v, center, q), micros))
    return out


def run_orbit_experiment(cfg: ExperimentConfig) -> RecordList:
    cfg.validate()
    target = orbit_target(cfg)
    records = _run_trials(_orbit_trial, cfg, target)
    records.sort(key=lambda r: (r.trial, r.T_or_N))
    return RecordList(records, aggregate_orbit(records, cfg, target))


def deviation_slope(recs: Sequence[TrialRecord], center) -> float | None:
    pts = [(r.T_or_N, float(abs(r.value - center))) for r in recs if r.value != center]
    try:
        return fit_loglog_slope(pts)[0]
    except DegenerateFit:
        return None


def aggregate_orbit(records, cfg: ExperimentConfig, target) -> dict:
    by_trial: dict = {}
    for r in records:
        by_trial.setdefault(r.trial, []).append(r)
    mean = siegel_mean(cfg)
    agg = {"q": cfg.q, "weights": str(cfg.weights), "R": cfg.R, "T": cfg.T, "N": cfg.N,
           "observable": cfg.observable, "trials": cfg.trials, "master_seed": cfg.master_seed,
           "depth": cfg.depth, "target": target, "siegel_mean": mean}
    for name, center in (("target", target), ("siegel_mean", mean)):
        if center is None:
            continue
        slopes = {t: deviation_slope(recs, center) for t, recs in sorted(by_trial.items())}
        finals = [recs[-1].value for _, recs in sorted(by_trial.items())]
        within = sum(1 for v in finals if center and abs(v - center) <= center / 10)
        agg[f"{name}_slopes"] = slopes
        agg[f"{name}_slope_ok"] = sum(1 for s in slopes.values() if s is not None and s <= -0.4)
        agg[f"{name}_within_10pct"] = within
        agg[f"{name}_mean_final"] = sum(finals, Fraction(0)) / len(finals)
    return agg


# ---------------------------------------------------------------------------
# regression


def fit_loglog_slope(points) -> tuple[float, float]:
    """Least-squares fit of log y = slope * log x + intercept."""
    pts = [(float(x), float(y)) for x, y in points]
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise DegenerateFit("log-log fit needs positive coordinates")
    if len({x for x, _ in pts}) < 2:
        raise DegenerateFit("need at least two distinct abscissae")
    xs = [math.log(x) for x, _ in pts]
    ys = [math.log(y) for _, y in pts]
    slope, intercept = statistics.linear_regression(xs, ys)
    return slope, intercept


# ---------------------------------------------------------------------------
# (C, alpha)-good checker


class MPoly:
    """Polynomial in x1..xr with LaurentNum coefficients: {exponents: coeff}."""

    def __init__(self, terms: dict, r: int, q: int):
        self.r, self.q = r, q
        self.terms = {tuple(e): c for e, c in terms.items() if not c.is_zero()}

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @classmethod
    def parse(cls, text: str, q: int, r: int | None = None) -> "MPoly":
        """Terms like ``2*t^-1*x1^2*x2`` joined by + or -."""
        s = text.replace(" ", "")
        chunks = [c for c in re.split(r"(?<!\^)(?=[+-])", s) if c]
        parsed = []
        nvars = 0
        for chunk in chunks:
            sign = -1 if chunk[0] == "-" else 1
            body = chunk.lstrip("+-")
            coef = LaurentNum([sign], 0, q)
            expo: dict = {}
            for fac in body.split("*"):
                m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", fac)
                if m:
                    i = int(m.group(1))
                    nvars = max(nvars, i)
                    expo[i] = expo.get(i, 0) + int(m.group(2) or 1)
                    continue
                coef = coef * LaurentNum.parse(fac, q)
            parsed.append((expo, coef))
        r = r if r is not None else max(nvars, 1)
        terms: dict = {}
        for expo, coef in parsed:
            key = tuple(expo.get(i + 1, 0) for i in range(r))
            terms[key] = terms.get(key, LaurentNum.zero(q)) + coef
        return cls(terms, r, q)

    def __str__(self):
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mons = [f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k]
            parts.append("*".join([f"({c})"] + mons) if mons else f"({c})")
        return " + ".join(parts) or "0"


class _Series:
    """Batch of truncated Laurent values: digits[:, k] is the coefficient of t^(lo+k)."""

    def __init__(self, digits: np.ndarray, lo: int, q: int):
        self.digits, self.lo, self.q = digits, lo, q

    @classmethod
    def const(cls, x: LaurentNum, npts: int) -> "_Series":
        if x.is_zero():
            return cls(np.zeros((npts, 1), dtype=np.int64), 0, x.q)
        row = np.array(x.coeffs, dtype=np.int64)
        return cls(np.tile(row, (npts, 1)), x.lo, x.q)

    def __mul__(self, other: "_Series") -> "_Series":
        a, b, q = self.digits, other.digits, self.q
        out = np.zeros((a.shape[0], a.shape[1] + b.shape[1] - 1), dtype=np.int64)
        for k in range(a.shape[1]):
            col = a[:, k:k + 1]
            if col.any():
                out[:, k:k + b.shape[1]] += col * b
        return _Series(out % q, self.lo + other.lo, q)

    def __add__(self, other: "_Series") -> "_Series":
        lo = min(self.lo, other.lo)
        hi = max(self.lo + self.digits.shape[1], other.lo + other.digits.shape[1])
        out = np.zeros((self.digits.shape[0], hi - lo), dtype=np.int64)
        for s in (self, other):
            off = s.lo - lo
            out[:, off:off + s.digits.shape[1]] += s.digits
        return _Series(out % self.q, lo, self.q)

    def degrees(self) -> np.ndarray:
        """Top degree per point; NEG for zero."""
        nz = self.digits != 0
        L = nz.shape[1]
        top = (L - 1) - np.argmax(nz[:, ::-1], axis=1) + self.lo
        return np.where(nz.any(axis=1), top, -(1 << 40))


@dataclass
class GoodRow:
    eps_exponent: int
    ratio: Fraction
    bound: float
    quotient: float | None


@dataclass
class GoodTable:
    rows: list
    sup_exponent: int | None
    r: int
    s: int
    C: float | None
    slope: float | None


def good_function_check(f: MPoly, ball=None, epsilons=None, depth: int = 6, strict: bool = True,
                        budget: int = 1 << 22) -> GoodTable:
    """Sublevel-set ratios of |f| on a ball at truncation ``depth``.

    ``ball`` is (center, radius_exponent) for {x : |x - center| <= q^radius};
    the default is O^r.  Points are the cell representatives
    center + t^radius * z with z running over all digit patterns of O^r at
    degrees 0..-(depth-1).  ``epsilons`` are integer exponents e (eps = q^e);
    ``strict`` selects |f| < eps, otherwise |f| <= eps.
    """
    q, r = f.q, f.r
    if not f.terms:
        raise ValueError("f must be nonzero")
    center, rho = ball if ball is not None else ((LaurentNum.zero(q),) * r, 0)
    npts = q ** (r * depth)
    if npts > budget:
        raise BudgetExceeded(f"{npts} grid points exceed budget {budget}")
    idx = np.arange(npts, dtype=np.int64)
    xs = []
    for v in range(r):
        digs = np.empty((npts, depth), dtype=np.int64)
        for k in range(depth):
            digs[:, depth - 1 - k] = idx % q  # column 0 is the lowest degree
            idx = idx // q
        z = _Series(digs, rho - depth + 1, q)
        xs.append(z + _Series.const(center[v], npts))
    acc = None
    for expo, coef in f.terms.items():
        term = _Series.const(coef, npts)
        for v, k in enumerate(expo):
            for _ in range(k):
                term = term * xs[v]
        acc = term if acc is None else acc + term
    degs = acc.degrees()
    nonzero = degs > -(1 << 39)
    sup = int(degs[nonzero].max()) if nonzero.any() else None
    s = f.degree
    if epsilons is None:
        top = sup if sup is not None else 0
        epsilons = list(range(top, top - depth, -1))
    rows = []
    for e in epsilons:
        hit = (~nonzero) | (degs < e) if strict else (~nonzero) | (degs <= e)
        ratio = Fraction(int(hit.sum()), npts)
        if sup is None:
            bound = math.inf
        else:
            bound = float(Fraction(q) ** (e - sup)) ** (1.0 / (r * max(s, 1)))
        quo = float(ratio) / bound if bound not in (0.0, math.inf) else None
        rows.append(GoodRow(e, ratio, bound, quo))
    quos = [row.quotient for row in rows if row.quotient is not None]
    C = max(quos) if quos else None
    pts = [(float(Fraction(q) ** row.eps_exponent), float(row.ratio)) for row in rows if row.ratio > 0]
    try:
        slope = fit_loglog_slope(pts)[0]
    except DegenerateFit:
        slope = None
    return GoodTable(rows, sup, r, s, C, slope)


# ---------------------------------------------------------------------------
# digit-grid measure oracle

NEG = -(1 << 40)


def _digit_chunks(q: int, ndig: int, chunk: int = 1 << 16):
    total = q ** ndig
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digs = np.empty((idx.size, ndig), dtype=np.int64)
        for k in range(ndig - 1, -1, -1):
            digs[:, k] = idx % q
            idx //= q
        yield digs


def grid_measure_oracle(region: RegionSpec, depth: int, q: int, budget: int = 1 << 24,
                        full_depth: bool = False) -> Fraction:
    """Measure of a region by enumerating digit patterns in its bounding box.

    Each coordinate gets a window of digits from its maximal degree down to
    the lowest degree that can change membership; ``depth`` caps the window
    length (InsufficientPrecision if the region needs more).  With
    ``full_depth`` every window is exactly ``depth`` digits long.  A cell
    fixes the window digits and leaves everything below free, so its
    measure is the product of q^(floor_c - 1).
    """
    check_prime(q)
    if isinstance(region, EDirRegion):
        return _grid_directional(region, depth, q, budget)
    ups, fls = region.grid_window()
    ups = list(ups)
    floors = [min(f, u + 1) for u, f in zip(ups, fls)]
    need = max([u - f + 1 for u, f in zip(ups, floors)] + [0])
    if need > depth:
        raise InsufficientPrecision(f"region needs {need} digits per coordinate, depth is {depth}")
    if full_depth:
        floors = [u - depth + 1 for u in ups]
    spans = [u - f + 1 for u, f in zip(ups, floors)]
    ndig = sum(spans)
    if q ** ndig > budget:
        raise BudgetExceeded(f"{q}^{ndig} cells exceed budget {budget}")
    d = len(ups)
    hits = 0
    for digs in _digit_chunks(q, ndig):
        degs = np.full((digs.shape[0], d), NEG, dtype=np.int64)
        off = 0
        for c in range(d):
            block = digs[:, off:off + spans[c]]  # column 0 = degree ups[c]
            off += spans[c]
            if spans[c] == 0:
                continue
            nz = block != 0
            first = np.argmax(nz, axis=1)
            degs[:, c] = np.where(nz.any(axis=1), ups[c] - first, NEG)
        hits += int(region.contains_degrees(degs).sum())
    cell = Fraction(q) ** sum(f - 1 for f in floors)
    return hits * cell


def _shell_fraction(C: Cylinder, side: str, w: Weights, q: int) -> Fraction:
    """Share of the unit shell in C, by projecting explicit digit patterns."""
    if C.is_full:
        return Fraction(1)
    a = w.side(side)
    depth = max([C.depth] + list(a))
    hit = tot = 0
    for tab in itertools.product(range(q), repeat=depth * len(a)):
        vec = tuple(LaurentNum.from_digits(tab[i * depth:(i + 1) * depth], 0, q) for i in range(len(a)))
        if all(v.is_zero() for v in vec):
            continue
        proj = direction_project(vec, side, w, C.depth)
        if proj.s != 0:
            continue  # outside the unit shell
        tot += 1
        hit += C.contains_table(proj.digits)
    return Fraction(hit, tot)


def _grid_directional(region: EDirRegion, depth: int, q: int, budget: int) -> Fraction:
    w, R, T = region.w, region.R, region.T
    D = max(region.C1.depth, region.C2.depth, 1)
    xu = [math.ceil(R * a) - 1 for a in w.alpha]
    xf = [(R - T) * a for a in w.alpha]  # below this, every x is in the region
    xlow = [f - D for f in xf]
    yu = [T * b for b in w.beta]
    ylow = [-D] * w.n
    spans_x = [max(0, u - l + 1) for u, l in zip(xu, xlow)]
    spans_y = [u - l + 1 for u, l in zip(yu, ylow)]
    if max(spans_x + spans_y) > depth:
        raise InsufficientPrecision(f"directional grid needs {max(spans_x + spans_y)} digits, depth is {depth}")
    nx, ny = sum(spans_x), sum(spans_y)
    if q ** (nx + ny) > budget:
        raise BudgetExceeded(f"{q}^{nx + ny} cells exceed budget {budget}")

    def vectors(spans, ups):
        for tab in itertools.product(range(q), repeat=sum(spans)):
            off = 0
            vec = []
            for sp, u in zip(spans, ups):
                vec.append(LaurentNum.from_digits(tab[off:off + sp], u, q))
                off += sp
            yield tuple(vec)

    y_cell = Fraction(q) ** sum(l - 1 for l in ylow)
    x_cell = Fraction(q) ** sum(l - 1 for l in xlow)
    tail = _shell_fraction(region.C1, "alpha", w, q) * Fraction(q) ** ((R - T) * sum(w.alpha) - w.m)
    xs = [x for x in vectors(spans_x, xu)
          if any(not xi.is_zero() and xi.degree >= f for xi, f in zip(x, xf))]
    total = Fraction(0)
    for y in vectors(spans_y, yu):
        ky = quasi_norm(y, "beta", w)
        if ky.is_zero() or not (0 <= ky.exponent <= T) or not region.C2.contains(y, w):
            continue
        total += y_cell * tail
        for x in xs:
            if region.contains(x + y):
                total += y_cell * x_cell
    return total


# ---------------------------------------------------------------------------
# exhaustive expectation oracle


def all_matrices(q: int, w: Weights, depth: int):
    """Every m x n matrix whose entries have digits only at degrees -1..-depth."""
    w = as_weights(w)
    for digs in itertools.product(range(q), repeat=w.m * w.n * depth):
        arr = np.array(digs, dtype=np.int64).reshape(w.m, w.n, depth)
        yield matrix_from_digits(arr, q)


def exhaustive_counts(q: int, w, R: int, T: int, chunk: int = 1 << 14, budget: int = 1 << 21) -> np.ndarray:
    """N_R(T, A) for every depth-P* matrix A, by direct enumeration of (q, p).

    Index a of the result encodes A in base q: digit of A[i][j] at degree
    -(u+1) is the base-q digit number ((i*n + j)*P + u) counted from the most
    significant end.  For every candidate q the fractional digits of A q are
    formed explicitly (as a product with a digit-convolution matrix) and the
    row thresholds are tested on them; p ranges over the threshold box.
    """
    w = as_weights(w)
    P = precision_needed(w, R, T)
    nvar = w.m * w.n * P
    total = q ** nvar
    if total > budget:
        raise BudgetExceeded(f"{total} matrices exceed budget {budget}")
    tops = [math.floor(T * b) for b in w.beta]
    cand = []
    for coeffs in itertools.product(*[list(itertools.product(range(q), repeat=t + 1)) for t in tops]):
        degs = [max((l for l, c in enumerate(cs) if c), default=None) for cs in coeffs]
        if all(dg is None for dg in degs):
            continue
        k = max(Fraction(dg, b) for dg, b in zip(degs, w.beta) if dg is not None)
        if k > T:
            continue
        e = [math.ceil((R - k) * a) for a in w.alpha]
        cand.append((coeffs, e))
    counts = np.zeros(total, dtype=np.int64)
    # convolution columns: for candidate q and row i, digit -s of (Aq)_i
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        idx = np.arange(start, stop, dtype=np.int64)
        digs = np.empty((stop - start, nvar), dtype=np.int64)
        for k in range(nvar - 1, -1, -1):
            digs[:, k] = idx % q
            idx //= q
        Ad = digs.reshape(-1, w.m, w.n, P).astype(np.float64)
        acc = np.zeros(stop - start, dtype=np.int64)
        for coeffs, e in cand:
            ok = np.ones(stop - start, dtype=bool)
            mult = 1
            for i in range(w.m):
                if e[i] >= 1:
                    mult *= q ** e[i]
                    continue
                nd = -e[i]
                if nd == 0:
                    continue
                # fractional digits -1..-nd of sum_j A_ij q_j
                M = np.zeros((w.n, P, nd))
                for j in range(w.n):
                    for l, c in enumerate(coeffs[j]):
                        if c:
                            for s in range(1, nd + 1):
                                u = s + l  # A digit at degree -u
                                if u <= P:
                                    M[j, u - 1, s - 1] += c
                vals = Ad[:, i].reshape(-1, w.n * P) @ M.reshape(w.n * P, nd)
                ok &= (np.rint(vals).astype(np.int64) % q == 0).all(axis=1)
            acc += ok * mult
        counts[start:stop] = acc
    return counts


def exhaustive_average(q: int, w, R: int, T: int, method: str = "batch", budget: int = 1 << 21) -> Fraction:
    """Average of N_R(T, A) over all depth-P* matrices A."""
    w = as_weights(w)
    if method == "batch":
        counts = exhaustive_counts(q, w, R, T, budget=budget)
        return Fraction(int(counts.sum()), counts.size)
    if method == "literal":
        P = precision_needed(w, R, T)
        n = q ** (w.m * w.n * P)
        if n > budget:
            raise BudgetExceeded(f"{n} matrices exceed budget {budget}")
        tot = sum(count_solutions(A, w, R, T, precision=P).count for A in all_matrices(q, w, P))
        return Fraction(tot, n)
    raise ValueError(f"unknown method {method!r}")


def matrix_by_index(q: int, w, R: int, T: int, index: int) -> list:
    """The matrix A with the given index in ``exhaustive_counts`` order."""
    w = as_weights(w)
    P = precision_needed(w, R, T)
    nvar = w.m * w.n * P
    digs = []
    for _ in range(nvar):
        digs.append(index % q)
        index //= q
    arr = np.array(digs[::-1], dtype=np.int64).reshape(w.m, w.n, P)
    return matrix_from_digits(arr, q)
