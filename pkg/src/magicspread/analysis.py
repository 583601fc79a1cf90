"""Ensemble reductions, relaxation-law fits and saturation times."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

PERCENTILES = (20, 33, 50, 66, 80)


@dataclass
class EnsembleSeries:
    """Observable values on a shared time grid, one row per realisation."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[None, :]
        if vals.shape[1] != self.times.size:
            raise ValueError(f"values have {vals.shape[1]} time points, grid has {self.times.size}")
        self.values = vals

    @classmethod
    def from_curve(cls, times, values) -> "EnsembleSeries":
        return cls(times, np.asarray(values, dtype=float)[None, :])

    @property
    def num_realizations(self) -> int:
        return self.values.shape[0]

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def stderr(self) -> np.ndarray:
        r = self.num_realizations
        if r < 2:
            return np.zeros(self.times.size)
        return self.values.std(axis=0, ddof=1) / math.sqrt(r)

    def percentiles(self, qs=PERCENTILES) -> dict[int, np.ndarray]:
        table = np.percentile(self.values, qs, axis=0)
        return {int(q): row for q, row in zip(qs, table)}

    def subset(self, rows) -> "EnsembleSeries":
        return EnsembleSeries(self.times, self.values[np.asarray(rows)])

    def window(self, t_lo: float, t_hi: float) -> "EnsembleSeries":
        sel = (self.times >= t_lo) & (self.times <= t_hi)
        return EnsembleSeries(self.times[sel], self.values[:, sel])


@dataclass
class FitResult:
    model: str
    amplitude: float
    rate_or_exponent: float
    fit_window: tuple[float, float]
    residual_rms: float
    parameter_std_errors: tuple[float, float]
    num_points: int = 0

    def predict(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.model == "exponential":
            return self.amplitude * np.exp(-self.rate_or_exponent * t)
        return self.amplitude * t ** (-self.rate_or_exponent)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SaturationResult:
    epsilon: float
    t_sat: float
    persistence_window: int
    defined: bool


class FitError(ValueError):
    pass


def long_time_average(series: EnsembleSeries, window: tuple[float, float]) -> tuple[float, float]:
    """Time average (trapezoid rule) over ``window`` per realisation, then ensemble mean and standard error."""
    t_lo, t_hi = window
    if series.times.size == 0 or series.times.min() > t_lo or series.times.max() < t_hi:
        raise ValueError(f"series does not cover the window [{t_lo}, {t_hi}]")
    sub = series.window(t_lo, t_hi)
    if sub.times.size == 1:
        per_real = sub.values[:, 0]
    else:
        per_real = np.trapezoid(sub.values, sub.times, axis=1) / (sub.times[-1] - sub.times[0])
    r = per_real.size
    err = per_real.std(ddof=1) / math.sqrt(r) if r > 1 else 0.0
    return float(per_real.mean()), float(err)


def deviation_series(series: EnsembleSeries, reference) -> EnsembleSeries:
    """Delta(t) = reference - value(t), elementwise; ``reference`` may be a scalar or a per-time array."""
    ref = np.asarray(reference, dtype=float)
    return EnsembleSeries(series.times, ref - series.values)


def noise_cutoff(delta: EnsembleSeries, t_lo: float, noise_factor: float = 3.0) -> float:
    """Last time (>= t_lo) before the ensemble-mean Delta first drops below noise_factor standard errors.

    With a single realisation the cutoff is where Delta first becomes non-positive.
    """
    mean, err = delta.mean(), delta.stderr()
    threshold = noise_factor * err if delta.num_realizations > 1 else np.zeros_like(mean)
    sel = np.nonzero(delta.times >= t_lo)[0]
    last = None
    for i in sel:
        if mean[i] <= threshold[i] or mean[i] <= 0:
            break
        last = i
    if last is None:
        raise FitError(f"Delta is already within noise at t = {t_lo}")
    return float(delta.times[last])


def _linregress(x: np.ndarray, y: np.ndarray):
    a = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    n = x.size
    dof = max(n - 2, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(a.T @ a)
    return coef, resid, np.sqrt(np.diag(cov))


def _fit(delta: EnsembleSeries, window, model: str) -> FitResult:
    mean = delta.mean()
    t_lo, t_hi = window if window is not None else (delta.times.min(), delta.times.max())
    sel = (delta.times >= t_lo) & (delta.times <= t_hi)
    t, y = delta.times[sel], mean[sel]
    if t.size < 3:
        raise FitError(f"need at least 3 points in window [{t_lo}, {t_hi}], got {t.size}")
    if np.any(y <= 0):
        raise FitError("non-positive Delta inside the fit window; shrink the window")
    if model == "power_law":
        if np.any(t <= 0):
            raise FitError("power-law fits need t > 0")
        x = np.log(t)
    else:
        x = t
    coef, resid, err = _linregress(x, np.log(y))
    amp = math.exp(coef[0])
    return FitResult(
        model=model,
        amplitude=amp,
        rate_or_exponent=float(-coef[1]),
        fit_window=(float(t[0]), float(t[-1])),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        parameter_std_errors=(float(amp * err[0]), float(err[1])),
        num_points=int(t.size),
    )


def fit_exponential(delta: EnsembleSeries, window=None) -> FitResult:
    """Delta = A exp(-alpha t) by least squares of ln Delta against t, on the ensemble mean."""
    return _fit(delta, window, "exponential")


def fit_powerlaw(delta: EnsembleSeries, window=None) -> FitResult:
    """Delta = a t^(-beta) by least squares of ln Delta against ln t, on the ensemble mean."""
    return _fit(delta, window, "power_law")


def compare_models(delta: EnsembleSeries, window) -> dict:
    """Both fits on the same window; ``preferred`` is the one with smaller log-residual RMS."""
    exp_fit = fit_exponential(delta, window)
    pow_fit = fit_powerlaw(delta, window)
    preferred = "exponential" if exp_fit.residual_rms < pow_fit.residual_rms else "power_law"
    return {"exponential": exp_fit, "power_law": pow_fit, "preferred": preferred}


def saturation_time(delta, epsilon: float, persistence: int = 5, times=None) -> SaturationResult:
    """Earliest sampled t from which Delta <= epsilon for ``persistence`` consecutive samples.

    ``delta`` is an :class:`EnsembleSeries` (its mean is used) or a 1-d array with ``times``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if isinstance(delta, EnsembleSeries):
        times, curve = delta.times, delta.mean()
    else:
        curve = np.asarray(delta, dtype=float)
        times = np.asarray(times, dtype=float)
    below = curve <= epsilon
    n = curve.size
    for i in range(n - persistence + 1):
        if below[i:i + persistence].all():
            return SaturationResult(epsilon, float(times[i]), persistence, True)
    return SaturationResult(epsilon, float("nan"), persistence, False)


@dataclass
class ScalingFit:
    log_slope: float
    log_intercept: float
    log_residual_rms: float
    linear_slope: float
    linear_intercept: float
    linear_residual_rms: float
    preferred: str | None

    def to_dict(self) -> dict:
        return asdict(self)


def scaling_fit(t_sat_values: dict, margin: float = 0.1) -> ScalingFit:
    """Fit t_sat = c1 log2 N + c0 and t_sat = c1 N + c0.

    ``preferred`` names the model with the smaller residual RMS, or is None when
    the two RMS values differ by less than ``margin`` of the larger one.
    """
    if len(t_sat_values) < 4:
        raise ValueError("scaling fits need at least 4 system sizes")
    sizes = np.array(sorted(t_sat_values), dtype=float)
    ts = np.array([t_sat_values[n] for n in sorted(t_sat_values)], dtype=float)
    out = {}
    for name, x in (("log", np.log2(sizes)), ("linear", sizes)):
        coef, resid, _ = _linregress(x, ts)
        out[name] = (float(coef[1]), float(coef[0]), float(np.sqrt(np.mean(resid ** 2))))
    r_log, r_lin = out["log"][2], out["linear"][2]
    if abs(r_log - r_lin) <= margin * max(r_log, r_lin):
        preferred = None
    else:
        preferred = "log" if r_log < r_lin else "linear"
    return ScalingFit(*out["log"], *out["linear"], preferred)


def multifractal_fit(entropies: dict) -> tuple[float, float]:
    """Slope D_k and intercept c_k of S_k = D_k N + c_k."""
    sizes = np.array(sorted(entropies), dtype=float)
    vals = np.array([entropies[n] for n in sorted(entropies)], dtype=float)
    slope, intercept = np.polyfit(sizes, vals, 1)
    return float(slope), float(intercept)
