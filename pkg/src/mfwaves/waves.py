"""Travelling-wave profiles from sample pools, and their verification.

A pool of martingale-limit samples W (or V) induces the wave as an
exponential mixture: the synchronisation orientation decays to the right as
h(x) = 1 - E[exp(-W exp(-gamma x))], the power-of-2 orientation as
h(x) = E[exp(-V exp(gamma x))].  Conditionally on the mixing variable the
wave variable is Gumbel, which gives exact sampling.  Verification draws the
fixed-point right-hand sides and applies two-sample KS tests.
"""
from __future__ import annotations

import enum
import math
import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from .distributions import (
    ConstantIncrement,
    JumpLaw,
    SyncIncrement,
    as_generator,
    integrated_tail,
    mean,
    sample_increment,
    sample_jumps,
)
from .errors import NumericalFailure, ValidationError
from .stats import KSTestResult, fit_loglinear, ks_two_sample

# the tagged particle in the power-of-2 model is involved in pair events as
# either member, so its interaction clock runs at twice the per-pair rate
POWER2_TAGGED_RATE = 2.0


class Orientation(enum.Enum):
    SYNC_RIGHT = "sync-right"
    POWER2 = "power2"


def _as_orientation(value) -> Orientation:
    if isinstance(value, Orientation):
        return value
    try:
        return Orientation(value)
    except ValueError:
        raise ValidationError(f"unknown orientation {value!r}") from None


def _pool_samples(pool) -> np.ndarray:
    samples = pool.samples if hasattr(pool, "samples") else np.asarray(pool, dtype=float)
    if len(samples) == 0:
        raise ValidationError("empty pool")
    return np.asarray(samples, dtype=float)


@dataclass(eq=False)
class WaveProfile:
    """Tabulated survival function h on a grid, tied to the generating pool."""

    gamma: float
    orientation: Orientation
    pool: np.ndarray
    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    @property
    def pool_mean(self) -> float:
        return float(self.pool.mean())

    def cdf_values(self) -> np.ndarray:
        return 1.0 - self.values

    def h(self, x) -> np.ndarray:
        return np.interp(x, self.grid, self.values, left=1.0, right=0.0)


def default_grid(gamma: float, span: float = 12.0, n: int = 481) -> np.ndarray:
    """Symmetric grid spanning +-span/gamma, wide enough for both wave tails."""
    half = span / gamma
    return np.linspace(-half, half, n)


def profile_eval(pool, gamma: float, orientation, grid) -> WaveProfile:
    """Evaluate h on the grid as a pool average, with per-point standard errors."""
    orientation = _as_orientation(orientation)
    samples = _pool_samples(pool)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValidationError("profile_eval: grid must be sorted and one-dimensional")
    if gamma <= 0:
        raise ValidationError("profile_eval: gamma must be positive")
    m = len(samples)
    values = np.empty(len(grid))
    stderr = np.empty(len(grid))
    ddof = 1 if m > 1 else 0
    chunk = max(1, (1 << 24) // m)
    for start in range(0, len(grid), chunk):
        x = grid[start : start + chunk]
        if orientation is Orientation.SYNC_RIGHT:
            terms = -np.expm1(-np.exp(-gamma * x)[:, None] * samples[None, :])
        else:
            terms = np.exp(-np.exp(gamma * x)[:, None] * samples[None, :])
        values[start : start + len(x)] = terms.mean(axis=1)
        stderr[start : start + len(x)] = terms.std(axis=1, ddof=ddof) / math.sqrt(m)
    return WaveProfile(gamma, orientation, samples, grid, values, stderr)


def sample_wave(pool, gamma: float, orientation, n: int, rng=None) -> np.ndarray:
    """Exact draws of the wave variable via the conditional Gumbel mixture.

    Zero pool entries cannot mix (log of zero); they are rejected and
    resampled, with a warning carrying the rejection count.
    """
    orientation = _as_orientation(orientation)
    samples = _pool_samples(pool)
    if gamma <= 0:
        raise ValidationError("sample_wave: gamma must be positive")
    if not np.any(samples > 0):
        raise ValidationError("sample_wave: pool is entirely zero (degenerate limit)")
    gen = as_generator(rng)
    idx = gen.integers(0, len(samples), size=n)
    w = samples[idx]
    rejected = 0
    while True:
        bad = w == 0.0
        n_bad = int(bad.sum())
        if n_bad == 0:
            break
        rejected += n_bad
        w[bad] = samples[gen.integers(0, len(samples), size=n_bad)]
    if rejected:
        _warnings.warn(f"sample_wave: resampled {rejected} zero pool entries", RuntimeWarning)
    g = gen.gumbel(size=n)
    if orientation is Orientation.SYNC_RIGHT:
        return (np.log(w) + g) / gamma
    return -(np.log(w) + g) / gamma


# ---------------------------------------------------------------------------
# fixed-point verification


def verify_fixed_point_sync(xi: np.ndarray, inc, rng=None, m: int | None = None,
                            alpha: float = 0.01) -> KSTestResult:
    """Two-sample KS between xi and max(xi_i, xi_j) - A with fresh increments.

    The increment is usually a SyncIncrement; a ConstantIncrement is accepted
    for calibration identities (max-stability of the Gumbel).
    """
    xi = np.asarray(xi, dtype=float)
    if len(xi) < 10**5:
        raise ValidationError("verify_fixed_point_sync: need at least 1e5 samples")
    if not isinstance(inc, (SyncIncrement, ConstantIncrement)):
        raise ValidationError("verify_fixed_point_sync: increment must be sync or constant")
    gen = as_generator(rng)
    m = len(xi) if m is None else m
    i, j = gen.integers(0, len(xi), size=(2, m))
    a = np.asarray(sample_increment(inc, gen, size=m), dtype=float)
    rhs = np.maximum(xi[i], xi[j]) - a
    return ks_two_sample(xi, rhs, alpha=alpha)


def _power2_rhs(xi: np.ndarray, jumps: JumpLaw, sigma2: float, gen, m: int,
                c: float = 1.0) -> np.ndarray:
    """xi_i + 1{xi_i <= xi_j} X - c T + Gamma(T) with the rate-2 tagged clock."""
    i, j = gen.integers(0, len(xi), size=(2, m))
    x = np.asarray(sample_jumps(jumps, gen, size=m), dtype=float)
    t = gen.exponential(1.0 / POWER2_TAGGED_RATE, size=m)
    rhs = xi[i] + (xi[i] <= xi[j]) * x - c * t
    if sigma2 > 0:
        rhs = rhs + gen.normal(0.0, 1.0, size=m) * np.sqrt(sigma2 * t)
    return rhs


def verify_fixed_point_power2(xi: np.ndarray, jumps: JumpLaw, sigma2: float, rng=None,
                              m: int | None = None, alpha: float = 0.01) -> KSTestResult:
    """Two-sample KS between xi and the power-of-2 conditional-jump right side.

    The travelling wave assumes mean-1 jumps.  A law with a different mean is
    accepted and simply fails the test: that is the negative control.
    """
    xi = np.asarray(xi, dtype=float)
    if len(xi) < 10**5:
        raise ValidationError("verify_fixed_point_power2: need at least 1e5 samples")
    gen = as_generator(rng)
    m = len(xi) if m is None else m
    rhs = _power2_rhs(xi, jumps, sigma2, gen, m)
    return ks_two_sample(xi, rhs, alpha=alpha)


def verify_equivalence_power2(xi: np.ndarray, jumps: JumpLaw, sigma2: float, rng=None,
                              m: int | None = None, alpha: float = 0.01) -> KSTestResult:
    """Two-sample KS between the conditional-jump and min-plus-tail right sides.

    Both ensembles are built from the same xi pool: the first draws
    xi_1 + 1{xi_1 <= xi_2} X - T + Gamma(T), the second
    min(xi_1, xi_2) + Xbar + Z.  On a travelling wave the two agree in law.
    """
    xi = np.asarray(xi, dtype=float)
    if len(xi) < 10**5:
        raise ValidationError("verify_equivalence_power2: need at least 1e5 samples")
    if abs(mean(jumps) - 1.0) > 1e-9:
        raise ValidationError("verify_equivalence_power2: jump law must have mean 1")
    gen = as_generator(rng)
    m = len(xi) if m is None else m
    rhs1 = _power2_rhs(xi, jumps, sigma2, gen, m)
    i, j = gen.integers(0, len(xi), size=(2, m))
    xbar = np.asarray(integrated_tail(jumps).sample(gen, size=m), dtype=float)
    rhs2 = np.minimum(xi[i], xi[j]) + xbar
    if sigma2 > 0:
        rhs2 = rhs2 + gen.exponential(sigma2 / 2.0, size=m)
    return ks_two_sample(rhs1, rhs2, alpha=alpha)


# ---------------------------------------------------------------------------
# tail asymptotics


@dataclass(frozen=True)
class TailReport:
    right_slope: float
    right_prefactor: float
    left_slope: float
    left_prefactor: float
    pool_mean: float
    density_at_zero: float


def tail_asymptotics(pool, gamma: float, orientation, window=(1e-5, 1e-2),
                     points_per_side: int = 60) -> TailReport:
    """Log-linear tail fits of the profile over the window where it is tiny.

    The right fit regresses log h(x) on x where h is inside the window; the
    left fit regresses log(1 - h(x)) symmetrically.  Prefactors are the fitted
    values extrapolated to x = 0.  For the sync orientation the right
    prefactor estimates the pool mean and the left one the mixing density at
    0+; the power-of-2 orientation swaps the two roles.
    """
    orientation = _as_orientation(orientation)
    samples = _pool_samples(pool)
    if gamma <= 0:
        raise ValidationError("tail_asymptotics: gamma must be positive")
    lo, hi = window
    pool_mean = float(samples.mean())

    def h_of(x):
        return profile_eval(samples, gamma, orientation, x).values

    # h in [lo, hi] on the right: h ~ pref * exp(-gamma x), so bracket by the
    # mean-prefactor guess and widen until the window is covered
    right_x = _window_grid(h_of, gamma, pool_mean, lo, hi, side="right", n=points_per_side)
    h_right = h_of(right_x)
    keep = (h_right >= lo) & (h_right <= hi)
    if keep.sum() < 10:
        raise NumericalFailure("insufficient tail resolution (right window)")
    right_slope, right_b = fit_loglinear(right_x[keep], np.log(h_right[keep]))

    def g_of(x):
        return 1.0 - h_of(x)

    left_x = _window_grid(g_of, gamma, pool_mean, lo, hi, side="left", n=points_per_side)
    g_left = g_of(left_x)
    keep = (g_left >= lo) & (g_left <= hi)
    if keep.sum() < 10:
        raise NumericalFailure("insufficient tail resolution (left window)")
    left_slope, left_b = fit_loglinear(left_x[keep], np.log(g_left[keep]))

    return TailReport(
        right_slope=right_slope,
        right_prefactor=float(np.exp(right_b)),
        left_slope=left_slope,
        left_prefactor=float(np.exp(left_b)),
        pool_mean=pool_mean,
        density_at_zero=_density_at_zero(samples),
    )


def _window_grid(f, gamma: float, pool_mean: float, lo: float, hi: float, side: str, n: int):
    """Grid of x values where f passes through [lo, hi], found by widening."""
    scale = max(pool_mean, 1e-12)
    if side == "right":
        x0 = math.log(scale / hi) / gamma
        x1 = math.log(scale / lo) / gamma
    else:
        x0 = -math.log(scale / lo) / gamma
        x1 = -math.log(scale / hi) / gamma
    lo_x, hi_x = min(x0, x1), max(x0, x1)
    pad = (hi_x - lo_x) * 0.5 + 2.0 / gamma
    return np.linspace(lo_x - pad, hi_x + pad, 3 * n)


def _density_at_zero(samples: np.ndarray) -> float:
    """Reflection-corrected Gaussian kernel estimate of the mixing density at 0+."""
    sd = samples.std(ddof=1)
    iqr = np.subtract(*np.percentile(samples, [75, 25]))
    width = min(sd, iqr / 1.34) if iqr > 0 else sd
    if width <= 0:
        return 0.0
    bw = 0.9 * width * len(samples) ** (-0.2)
    z = samples / bw
    kernel = np.exp(-0.5 * z**2) / math.sqrt(2.0 * math.pi)
    return float(2.0 * kernel.mean() / bw)
