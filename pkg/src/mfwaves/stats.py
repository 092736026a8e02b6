"""Two-sample tests, CDF distances, and small optimization helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ValidationError


@dataclass(frozen=True)
class KSTestResult:
    statistic: float
    pvalue: float
    n: int
    m: int
    critical_value: float  # asymptotic two-sample critical value at the stored alpha
    alpha: float = 0.01

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value


def ks_critical_value(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample Kolmogorov critical value c(alpha)*sqrt((n+m)/(n*m))."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample KS statistic sup |F_x - F_y|."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / len(x)
    fy = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.abs(fx - fy).max())


def ks_two_sample(x: np.ndarray, y: np.ndarray, alpha: float = 0.01) -> KSTestResult:
    """Two-sample KS test with asymptotic Kolmogorov p-value."""
    n, m = len(x), len(y)
    d = ks_statistic(x, y)
    en = math.sqrt(n * m / (n + m))
    pvalue = float(special.kolmogorov(en * d))
    return KSTestResult(d, pvalue, n, m, ks_critical_value(n, m, alpha), alpha)


def ks_one_sample(x: np.ndarray, cdf) -> float:
    """One-sample KS statistic against a vectorized CDF callable."""
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def empirical_cdf_at(sample_sorted: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.searchsorted(sample_sorted, x, side="right") / len(sample_sorted)


def wasserstein_vs_cdf(
    sample_sorted: np.ndarray,
    grid: np.ndarray,
    cdf_values: np.ndarray,
    shift: float = 0.0,
    n_points: int = 4096,
) -> float:
    """W1 distance between an empirical sample and a tabulated CDF shifted by `shift`.

    Integrates |F_emp(x) - F_ref(x - shift)| over the union of both supports.
    """
    lo = min(sample_sorted[0], grid[0] + shift)
    hi = max(sample_sorted[-1], grid[-1] + shift)
    xs = np.linspace(lo, hi, n_points)
    f_emp = empirical_cdf_at(sample_sorted, xs)
    f_ref = np.interp(xs - shift, grid, cdf_values, left=0.0, right=1.0)
    return float(np.trapezoid(np.abs(f_emp - f_ref), xs))


def ks_vs_cdf(sample_sorted: np.ndarray, grid: np.ndarray, cdf_values: np.ndarray, shift: float = 0.0) -> float:
    """Sup distance between an empirical sample and a tabulated CDF shifted by `shift`."""
    f = np.interp(sample_sorted - shift, grid, cdf_values, left=0.0, right=1.0)
    n = len(sample_sorted)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, rel_tol: float = 1e-10, max_iter: int = 400):
    """Minimize a unimodal function on [lo, hi]; returns (x_min, f(x_min)).

    Stops when the bracket width falls below rel_tol * max(1, |x_min|).
    """
    if not hi > lo:
        raise ValidationError("golden_section: need hi > lo")
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        x = 0.5 * (a + b)
        if (b - a) < rel_tol * max(1.0, abs(x)):
            break
    x = c if fc < fd else d
    return x, min(fc, fd)


def fit_loglinear(x: np.ndarray, logy: np.ndarray):
    """Least-squares line through (x, log y); returns (slope, intercept)."""
    slope, intercept = np.polyfit(x, logy, 1)
    return float(slope), float(intercept)
