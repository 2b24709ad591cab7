"""Derived statistics: time to solution, P(SAT) curves and scaling windows,
ansatz fits, data collapse, percentiles, rank correlation and empirical
approximation ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import rankdata

from .formula import Assignment, Formula, count_violations

DEFAULT_PERCENTILES = (0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)
DEFAULT_EXPONENT_GRID = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
INAPPROX_RHO = 21 / 22
PTAS_RHO = 0.94


# --- time to solution -------------------------------------------------------

@dataclass(frozen=True)
class TTSRecord:
    p: float
    p_desired: float
    t_f: float
    k: float  # int, or math.inf when p == 0
    t_soln: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.k)


def repetitions(p: float, p_desired: float = 0.99) -> float:
    if not 0 < p_desired < 1:
        raise ValueError("p_desired must lie in (0, 1)")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if p == 0:
        return math.inf
    if p == 1:
        return 1
    ratio = math.log1p(-p_desired) / math.log1p(-p)
    if math.isinf(ratio):  # p below float resolution
        return math.inf
    # shave float noise so exact ratios such as 2.0000000000000004 stay 2
    return max(1, math.ceil(ratio * (1 - 1e-12)))


def tts(p: float, p_desired: float = 0.99, t_f: float = 1e-3) -> TTSRecord:
    k = repetitions(p, p_desired)
    return TTSRecord(p, p_desired, t_f, k, t_f * k)


# --- satisfiability curves ----------------------------------------------------

def psat_curve(groups: Mapping[float, Sequence[int | None]]) -> list[tuple[float, float]]:
    """Fraction of instances with optimum 0 per clause density.

    ``None`` entries (undecided within budget) are left out of both counts.
    """
    out = []
    for alpha in sorted(groups):
        known = [o for o in groups[alpha] if o is not None]
        if not known:
            raise ValueError(f"no decided instances at alpha={alpha}")
        out.append((float(alpha), sum(1 for o in known if o == 0) / len(known)))
    return out


@dataclass(frozen=True)
class ScalingWindow:
    alpha_left: float | None
    alpha_right: float | None
    high: float
    low: float

    @property
    def defined(self) -> bool:
        return self.alpha_left is not None and self.alpha_right is not None

    @property
    def width(self) -> float | None:
        return self.alpha_right - self.alpha_left if self.defined else None


def first_drop_below(curve: Sequence[tuple[float, float]], level: float) -> float | None:
    """Linearly interpolated alpha where the curve first falls below ``level``."""
    pts = sorted(curve)
    for i, (a, y) in enumerate(pts):
        if y < level:
            if i == 0:
                return None
            a0, y0 = pts[i - 1]
            return a0 + (y0 - level) / (y0 - y) * (a - a0)
    return None


def scaling_window(curve: Sequence[tuple[float, float]], high: float = 0.98,
                   low: float = 0.3) -> ScalingWindow:
    return ScalingWindow(first_drop_below(curve, high), first_drop_below(curve, low),
                         high, low)


def power_law_fit(x, y) -> tuple[float, float]:
    """(exponent, prefactor) of y = prefactor * x**exponent in log-log space."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icept = np.polyfit(lx, ly, 1)
    return float(slope), float(np.exp(icept))


# --- ansatz fits ----------------------------------------------------------------

def prob_ansatz(alpha, n, A, gamma, delta):
    return np.exp(-A * np.power(alpha, gamma) * np.power(n, delta))


def tts_ansatz(alpha, n, A, B, gamma, delta):
    return A * np.exp(B * np.power(alpha, gamma) * np.power(n, delta))


def tts_extended(alpha, n, A, B, gamma, delta, C, D, zeta, E, F):
    return (A * np.exp(B * np.power(alpha, gamma) * np.power(n, delta))
            + C * np.exp(D * np.power(alpha, zeta)) + E * alpha + F)


@dataclass(frozen=True)
class _Form:
    func: Callable
    params: tuple[str, ...]
    # start box per parameter: (low, high, log-uniform?)
    box: dict[str, tuple[float, float, bool]]


FORMS = {
    "prob_ansatz": _Form(prob_ansatz, ("A", "gamma", "delta"), {
        "A": (1e-7, 1e-1, True), "gamma": (0.25, 4.0, True), "delta": (0.25, 3.0, True)}),
    "tts_ansatz": _Form(tts_ansatz, ("A", "B", "gamma", "delta"), {
        "A": (1e-2, 1e2, True), "B": (1e-5, 1.0, True),
        "gamma": (0.25, 3.0, True), "delta": (0.25, 3.0, True)}),
    "tts_extended": _Form(tts_extended, ("A", "B", "gamma", "delta", "C", "D", "zeta", "E", "F"), {
        "A": (1e-2, 1e2, True), "B": (1e-5, 1.0, True),
        "gamma": (0.25, 3.0, True), "delta": (0.25, 3.0, True),
        "C": (-5.0, 5.0, False), "D": (1e-3, 5.0, True), "zeta": (1e-3, 3.0, True),
        "E": (-1.0, 1.0, False), "F": (-1.0, 1.0, False)}),
}


@dataclass(frozen=True)
class FitModel:
    form: str
    parameters: dict[str, float]
    fixed: tuple[str, ...]
    r_squared: float
    converged: bool = True
    ss_res: float = 0.0
    evaluations: int = 0

    def predict(self, alpha, n):
        return FORMS[self.form].func(np.asarray(alpha, float), np.asarray(n, float),
                                     **self.parameters)


def r_squared(y, yhat) -> float:
    y, yhat = np.asarray(y, float), np.asarray(yhat, float)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res <= 1e-12 * max(1.0, float(np.sum(y ** 2))) else 0.0
    return 1.0 - ss_res / ss_tot


def fit(form: str, alpha, n, y, fixed: Mapping[str, float] | None = None,
        starts: int = 16, seed: int = 0, max_evals: int = 10_000,
        tol: float = 1e-8) -> FitModel:
    """Least-squares fit by multi-start Nelder-Mead.

    Each start is drawn from the form's parameter box (log-uniform for
    positive parameters) and the simplex runs in coordinates scaled by the
    start, so ``tol`` is a relative step size.
    """
    if form not in FORMS:
        raise ValueError(f"unknown model form {form!r}")
    spec = FORMS[form]
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(spec.params)
    if unknown:
        raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
    alpha, n, y = (np.asarray(v, float) for v in (alpha, n, y))
    if y.size == 0:
        raise ValueError("no data to fit")
    free = [p for p in spec.params if p not in fixed]

    def model(theta):
        params = dict(fixed)
        params.update(zip(free, theta))
        with np.errstate(all="ignore"):
            return spec.func(alpha, n, **params)

    def ss(theta):
        r = model(theta) - y
        val = float(np.dot(r, r))
        return val if np.isfinite(val) else 1e300

    if not free:
        yhat = model([])
        return FitModel(form, {p: float(fixed[p]) for p in spec.params}, tuple(spec.params),
                        r_squared(y, yhat), True, ss([]), 1)

    rng = np.random.default_rng(seed)
    best = None
    converged_any = False
    evals = 0
    for _ in range(starts):
        x0 = []
        for p in free:
            lo, hi, log = spec.box[p]
            x0.append(math.exp(rng.uniform(math.log(lo), math.log(hi))) if log
                      else rng.uniform(lo, hi))
        scale = np.maximum(np.abs(x0), 1e-12)
        res = minimize(lambda u: ss(u * scale), np.ones(len(free)), method="Nelder-Mead",
                       options={"xatol": tol, "fatol": 0.0, "maxfev": max_evals,
                                "maxiter": max_evals})
        evals += res.nfev
        converged_any |= bool(res.success)
        if best is None or res.fun < best[0]:
            best = (float(res.fun), res.x * scale, bool(res.success))
    params = dict(fixed)
    params.update(zip(free, (float(v) for v in best[1])))
    params = {p: float(params[p]) for p in spec.params}
    return FitModel(form, params, tuple(p for p in spec.params if p in fixed),
                    r_squared(y, model(best[1])), converged_any, best[0], evals)


# --- data collapse ----------------------------------------------------------------

@dataclass(frozen=True)
class CollapseResult:
    form: str
    exponent: float
    residual: float
    residuals: dict[float, float] = field(default_factory=dict)


def collapse_transform(form: str, alpha, n, y, exponent: float,
                       params: Mapping[str, float] | None = None):
    """Map each point onto master-curve coordinates; returns (key, z, mask).

    prob_ansatz: curves per N over alpha; z = log(-log p) - exponent*log N,
    the log of -log(p ** N**-exponent). tts_ansatz: curves per alpha over N;
    z = log(log(T/A)) - exponent*log alpha. Points where the logs are
    undefined are masked out.
    """
    alpha, n, y = (np.asarray(v, float) for v in (alpha, n, y))
    with np.errstate(all="ignore"):
        if form == "prob_ansatz":
            mask = (y > 0) & (y < 1)
            z = np.log(-np.log(y)) - exponent * np.log(n)
            return alpha, z, mask
        if form == "tts_ansatz":
            if not params or "A" not in params:
                raise ValueError("tts_ansatz collapse needs the prefactor A")
            ratio = y / params["A"]
            mask = (ratio > 1) & (alpha > 0)
            z = np.log(np.log(ratio)) - exponent * np.log(alpha)
            return n, z, mask
    raise ValueError(f"no collapse transform for form {form!r}")


def data_collapse(alpha, n, y, form: str = "prob_ansatz",
                  exponent_grid: Sequence[float] = DEFAULT_EXPONENT_GRID,
                  params: Mapping[str, float] | None = None) -> CollapseResult:
    """Pick the exponent whose transformed curves sit closest to their pooled mean."""
    n_arr = np.asarray(n, float)
    if len(np.unique(n_arr)) < 2:
        raise ValueError("data collapse needs at least two distinct N")
    residuals = {}
    for e in exponent_grid:
        key, z, mask = collapse_transform(form, alpha, n, y, e, params)
        total = 0.0
        k, zz = key[mask], z[mask]
        for value in np.unique(k):
            grp = zz[k == value]
            total += float(np.sum((grp - grp.mean()) ** 2))
        residuals[float(e)] = total
    # ties resolve to the first grid entry
    best = min(residuals, key=lambda e: (residuals[e], list(residuals).index(e)))
    return CollapseResult(form, best, residuals[best], residuals)


# --- percentiles ----------------------------------------------------------------

def nearest_rank(values, q: float, descending: bool = False) -> float:
    v = sorted(values, reverse=descending)
    if not v:
        raise ValueError("empty group")
    if not 0 < q <= 1:
        raise ValueError("percentile level must lie in (0, 1]")
    rank = max(1, math.ceil(q * len(v) - 1e-12))
    return v[rank - 1]


def percentile_scaling(groups: Mapping[int, Sequence[float]],
                       levels: Sequence[float] = DEFAULT_PERCENTILES,
                       transform: Callable[[float], float] | None = None,
                       order: str = "transform-first",
                       transform_decreasing: bool = False) -> dict[float, list[tuple[int, float]]]:
    """Nearest-rank percentile curves per group (e.g. per N).

    With a ``transform`` (e.g. p -> time to solution) the two orders are
    "transform-first" (transform every value, then take percentiles) and
    "percentile-first" (percentile of the raw values, then transform). For a
    decreasing transform the raw values are ranked in descending order so
    both orders agree.
    """
    if order not in ("transform-first", "percentile-first"):
        raise ValueError(f"unknown order {order!r}")
    out: dict[float, list[tuple[int, float]]] = {q: [] for q in levels}
    for key in sorted(groups):
        vals = list(groups[key])
        if not vals:
            raise ValueError(f"empty group {key}")
        for q in levels:
            if transform is None:
                out[q].append((key, nearest_rank(vals, q)))
            elif order == "transform-first":
                out[q].append((key, nearest_rank([transform(v) for v in vals], q)))
            else:
                out[q].append((key, transform(nearest_rank(vals, q, transform_decreasing))))
    return out


# --- correlation ----------------------------------------------------------------

@dataclass(frozen=True)
class RankCorrelation:
    spearman: float | None
    copula: list[tuple[int, int]]


def rank_correlation(x, y) -> RankCorrelation:
    """Spearman coefficient (average ranks for ties) and the copula rank pairs.

    The copula uses ordinal ranks 1..n so every rank appears once per axis.
    ``spearman`` is None when either input has no variance.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    if x.size < 2:
        raise ValueError("need at least two points")
    rx, ry = rankdata(x, method="average"), rankdata(y, method="average")
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    rho = None
    if sxx > 0 and syy > 0:
        rho = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    ox = rankdata(x, method="ordinal").astype(int)
    oy = rankdata(y, method="ordinal").astype(int)
    return RankCorrelation(rho, list(zip(ox.tolist(), oy.tolist())))


# --- approximation ratio ----------------------------------------------------------------

def empirical_rho(f: Formula, proposed: Assignment, optimum: int) -> float:
    """Satisfied clauses of ``proposed`` over the true maximum M - optimum."""
    n_t = f.m - optimum
    if n_t <= 0:
        raise ValueError("no clause can be satisfied; ratio undefined")
    rho = (f.m - count_violations(f, proposed)) / n_t
    if rho > 1:
        raise ValueError("proposed assignment beats the stated optimum")
    return rho


def rho_from_violations(m: int, violations: int, optimum: int) -> float:
    n_t = m - optimum
    if n_t <= 0:
        raise ValueError("no clause can be satisfied; ratio undefined")
    return (m - violations) / n_t


# --- density histograms ----------------------------------------------------------------

@dataclass(frozen=True)
class DensityHistogram:
    counts: np.ndarray  # shape (x bins, y bins), column-normalised over y
    x_edges: np.ndarray
    y_edges: np.ndarray


def density_histogram(x, y, bins=(20, 20), range=None) -> DensityHistogram:
    bx, by = (bins, bins) if np.isscalar(bins) else bins
    if bx < 1 or by < 1:
        raise ValueError("need at least one bin per axis")
    raw, xe, ye = np.histogram2d(np.asarray(x, float), np.asarray(y, float),
                                 bins=(bx, by), range=range)
    sums = raw.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        norm = np.where(sums > 0, raw / np.where(sums > 0, sums, 1), 0.0)
    return DensityHistogram(norm, xe, ye)
