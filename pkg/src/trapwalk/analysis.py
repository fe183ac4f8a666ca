"""
Stretched-exponential analysis of survival curves.

A curve ``<P(t)> ~ exp(-a t**beta)`` is a straight line in the coordinates
``x = ln t``, ``y = ln(-ln <P(t)>)`` with slope ``beta`` and intercept ``ln a``.
All fits below are ordinary (optionally weighted) least squares in that space.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .ensemble import SurvivalSeries
from .errors import FitError
from .walk import Chirality

__all__ = [
    "StretchFit",
    "PiecewiseFit",
    "AnalyticPrediction",
    "ClassicalReferences",
    "DEFAULT_T_MIN",
    "DEFAULT_MARGIN",
    "usable_points",
    "fit_stretch_exponent",
    "detect_crossover",
    "predict",
    "classical_references",
    "jackknife",
]

DEFAULT_T_MIN = 4
DEFAULT_MARGIN = 0.05
MIN_POINTS = 5
MIN_SCAN_POINTS = 20
LOG_FLOOR = 10 * np.finfo(np.float64).eps
PERFECT_SSE = 1e-20


class StretchFit(NamedTuple):
    beta: float
    intercept: float
    sse: float


class ClassicalReferences(NamedTuple):
    beta_rs: float
    beta_dv: float
    beta_ct_quantum: float


def _arrays(series) -> tuple[NDArray, NDArray]:
    if isinstance(series, SurvivalSeries):
        return series.mean, series.stderr
    mean = np.asarray(series, dtype=np.float64)
    return mean, np.zeros_like(mean)


def usable_points(series, t_lo: float = 1, t_hi: float | None = None, weighted: bool = False):
    """Return ``(t, x, y, w)`` for samples inside ``[t_lo, t_hi]`` that can be log-transformed.

    A point is usable when ``LOG_FLOOR < <P(t)> < 1`` and ``t >= 1``.
    """
    mean, stderr = _arrays(series)
    t = np.arange(mean.size)
    hi = mean.size - 1 if t_hi is None else t_hi
    keep = (t >= max(t_lo, 1)) & (t <= hi) & (mean > LOG_FLOOR) & (mean < 1.0)
    t = t[keep]
    m = mean[keep]
    x = np.log(t)
    logp = np.log(m)
    y = np.log(-logp)
    if weighted:
        # delta method: sd of ln(-ln P) is sd(P) / (P |ln P|)
        sd = stderr[keep] / (m * np.abs(logp))
        if np.any(sd <= 0):
            raise FitError("weighted fit needs a positive stderr at every usable point")
        w = 1.0 / sd**2
    else:
        w = np.ones_like(x)
    return t, x, y, w


def _wls(x: NDArray, y: NDArray, w: NDArray) -> StretchFit:
    sw = np.sqrt(w)
    A = np.column_stack([x * sw, sw])
    coef, *_ = np.linalg.lstsq(A, y * sw, rcond=None)
    resid = y - (coef[0] * x + coef[1])
    return StretchFit(float(coef[0]), float(coef[1]), float(np.sum(w * resid**2)))


def fit_stretch_exponent(series, window: tuple[float, float | None] = (DEFAULT_T_MIN, None), weighted: bool = False) -> StretchFit:
    """Fit ``ln(-ln <P>) = intercept + beta * ln t`` over ``window``.

    Samples with ``<P> >= 1`` or below the log floor are skipped; fewer than five
    remaining samples is a :class:`FitError`.
    """
    t_lo, t_hi = window
    t, x, y, w = usable_points(series, t_lo, t_hi, weighted)
    if t.size < MIN_POINTS:
        raise FitError(f"only {t.size} usable points in window [{t_lo}, {t_hi}], need {MIN_POINTS}")
    return _wls(x, y, w)


@dataclass(frozen=True)
class PiecewiseFit:
    beta1: float
    beta2: float
    t_c: int
    a1: float
    a2: float
    sse: float
    window: tuple[int, int]
    crossover: bool
    beta_single: float
    a_single: float
    sse_single: float
    margin: float
    weighted: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _segment_sse(S: dict[str, NDArray]) -> NDArray:
    sw, sx, sy, sxx, sxy, syy = (S[k] for k in ("w", "x", "y", "xx", "xy", "yy"))
    cxx = sxx - sx * sx / sw
    cxy = sxy - sx * sy / sw
    cyy = syy - sy * sy / sw
    with np.errstate(divide="ignore", invalid="ignore"):
        sse = cyy - np.where(cxx > 0, cxy * cxy / cxx, 0.0)
    return np.maximum(sse, 0.0)


def detect_crossover(
    series,
    t_min: int = DEFAULT_T_MIN,
    t_max: int | None = None,
    margin: float = DEFAULT_MARGIN,
    weighted: bool = False,
) -> PiecewiseFit:
    """Two-segment stretched-exponential fit with an exhaustive breakpoint scan.

    Every usable sample time ``t_c`` with at least five points on each side is a
    candidate; the early segment covers ``[t_min, t_c]`` and the late one
    ``[t_c, t_max]``.  The breakpoint minimising the summed residual is kept.
    Unless that residual beats the single-segment fit by the fraction
    ``margin``, the result is flagged ``crossover=False`` with both exponents
    equal to the single-segment slope.
    """
    t, x, y, w = usable_points(series, t_min, t_max, weighted)
    n = t.size
    if n < MIN_SCAN_POINTS:
        raise FitError(f"only {n} usable points past t_min={t_min}, need {MIN_SCAN_POINTS}")
    window = (int(t[0]), int(t[-1]))
    single = _wls(x, y, w)

    # centred prefix sums; segment [i, j] inclusive is P[j+1] - P[i]
    xc = x - np.average(x, weights=w)
    yc = y - np.average(y, weights=w)
    cols = {"w": w, "x": w * xc, "y": w * yc, "xx": w * xc * xc, "xy": w * xc * yc, "yy": w * yc * yc}
    P = {k: np.concatenate([[0.0], np.cumsum(v)]) for k, v in cols.items()}
    j = np.arange(MIN_POINTS - 1, n - MIN_POINTS + 1)
    early = {k: P[k][j + 1] - P[k][0] for k in P}
    late = {k: P[k][n] - P[k][j] for k in P}
    total = _segment_sse(early) + _segment_sse(late)
    best = int(j[np.argmin(total)])

    fit1 = _wls(x[: best + 1], y[: best + 1], w[: best + 1])
    fit2 = _wls(x[best:], y[best:], w[best:])
    sse_two = fit1.sse + fit2.sse
    found = single.sse > PERFECT_SSE and sse_two <= (1.0 - margin) * single.sse
    if not found:
        return PiecewiseFit(
            single.beta, single.beta, window[1], math.exp(single.intercept), math.exp(single.intercept),
            single.sse, window, False, single.beta, math.exp(single.intercept), single.sse, margin, weighted,
        )
    return PiecewiseFit(
        fit1.beta, fit2.beta, int(t[best]), math.exp(fit1.intercept), math.exp(fit2.intercept),
        sse_two, window, True, single.beta, math.exp(single.intercept), single.sse, margin, weighted,
    )


@dataclass(frozen=True)
class AnalyticPrediction:
    """Closed-form exponents and crossover estimates at trap density ``rho``."""

    rho: float
    init: Chirality
    beta1_pred: float
    beta2_pred: float
    tc_up_symmetric: float
    tc_mixed: float
    lambda_: float
    trapped_spread_exponent: float
    free_spread_exponent: float = 1.0

    @property
    def tc(self) -> float:
        return self.tc_mixed if self.init is Chirality.MIXED else self.tc_up_symmetric

    def trap_hit_probability(self, t: float) -> float:
        """Effective per-step position-measurement probability ``(1/t)**(1 - rho)``."""
        return float(t) ** (self.rho - 1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init"] = self.init.value
        d["lambda"] = d.pop("lambda_")
        d["tc"] = self.tc
        return d


def predict(rho: float, init: Chirality | str = Chirality.UP) -> AnalyticPrediction:
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return AnalyticPrediction(
        rho=rho,
        init=Chirality(init),
        beta1_pred=1.0 - rho / 2.0,
        beta2_pred=rho / 2.0,
        tc_up_symmetric=25.0 / rho,
        tc_mixed=8.0 / rho,
        lambda_=-math.log1p(-rho),
        trapped_spread_exponent=1.0 - rho / 2.0,
    )


def classical_references() -> ClassicalReferences:
    """Rosenstock 1/2, Donsker-Varadhan 1/3 and continuous-time quantum 1/4."""
    return ClassicalReferences(0.5, 1.0 / 3.0, 0.25)


def jackknife(series: SurvivalSeries, statistic: Callable[[SurvivalSeries], float], groups: int = 20) -> float:
    """Delete-a-group jackknife standard error of ``statistic`` over configurations.

    Configurations are split into ``groups`` contiguous blocks by index.
    """
    configs = series.per_config
    if configs is None:
        raise ValueError("series has no per-configuration data; rerun with keep_configs=True")
    M = configs.shape[0]
    G = min(groups, M)
    if G < 2:
        raise ValueError("jackknife needs at least two configurations")
    bounds = np.linspace(0, M, G + 1).astype(int)
    stats = []
    for g in range(G):
        keep = np.r_[0 : bounds[g], bounds[g + 1] : M]
        sub = SurvivalSeries.from_configs(configs[keep], series.spec)
        stats.append(statistic(sub))
    stats = np.asarray(stats)
    return float(np.sqrt((G - 1) / G * np.sum((stats - stats.mean()) ** 2)))
