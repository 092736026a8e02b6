"""Monte Carlo pools for the martingale limit of the linear smoothing recursion.

The pool method iterates the map V -> (V_1 + ... + V_k) * exp(-gamma * A) on
an empirical population, resampling parents with replacement and drawing a
fresh increment per draw.  An independent genealogical construction
(branching_cross_check) realizes the same limit law exactly at finite depth
and serves as the bias oracle for the pool method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import Regime, regime_classify
from .distributions import IncrementLaw, RngStream, as_generator, sample_increment
from .errors import ValidationError

MIN_POOL_SIZE = 10_000
ZERO_FRACTION_BOUND = 1e-4


@dataclass
class SamplePool:
    """Empirical population of martingale-limit samples at fixed gamma."""

    samples: np.ndarray
    gamma: float
    increment: IncrementLaw
    iterations: int
    k: int
    seed: RngStream | None
    ks_trace: np.ndarray
    mean_trace: np.ndarray
    stderr_trace: np.ndarray  # cumulative resampling stderr of the pool mean
    regime: Regime
    warnings: tuple = ()

    def mean(self) -> float:
        return float(self.samples.mean())

    def std(self) -> float:
        return float(self.samples.std(ddof=1))

    def zero_fraction(self) -> float:
        return float(np.mean(self.samples == 0.0))

    def summary(self) -> dict:
        return {
            "gamma": self.gamma,
            "size": int(len(self.samples)),
            "iterations": self.iterations,
            "k": self.k,
            "mean": self.mean(),
            "stddev": self.std(),
            "zero_fraction": self.zero_fraction(),
            "regime": self.regime.value,
            "ks_trace": [float(v) for v in self.ks_trace],
            "warnings": list(self.warnings),
        }


def iterate_pool(
    inc: IncrementLaw,
    gamma: float,
    pool_size: int,
    iterations: int,
    k: int = 2,
    rng=None,
    initial: np.ndarray | None = None,
    ks_stop: float = 1e-3,
    ks_stop_runs: int = 3,
    check_regime: bool = True,
    workers: int = 1,
) -> SamplePool:
    """Iterate the pool from V == 1, tracking per-step KS distance and mean.

    Stops early once the KS distance between consecutive pools stays below
    ks_stop for ks_stop_runs iterations.  A non-supercritical increment only
    attaches a degeneracy warning; the iteration still runs.

    The draw layout never depends on `workers`: output is bitwise identical
    for any worker count (the per-iteration work is vectorized, so extra
    workers are accepted for interface compatibility and not used).
    """
    if workers < 1:
        raise ValidationError("iterate_pool: workers must be >= 1")
    if pool_size < MIN_POOL_SIZE:
        raise ValidationError(f"iterate_pool: pool_size must be >= {MIN_POOL_SIZE}")
    if iterations < 1:
        raise ValidationError("iterate_pool: iterations must be >= 1")
    if k < 2:
        raise ValidationError("iterate_pool: k must be >= 2")
    warnings: list[str] = []
    regime = Regime.SUPERCRITICAL
    if check_regime:
        regime = regime_classify(inc, gamma, k=k).regime
        if regime is Regime.CRITICAL:
            warnings.append(
                "critical increment: the finite-mean martingale limit degenerates to 0; "
                "pool output is not a travelling-wave mixing law"
            )
        elif regime is Regime.INVALID:
            warnings.append(
                "invalid increment: E[exp(-gamma A)] != 1/k, the pool mean is not conserved"
            )

    seed = rng if isinstance(rng, RngStream) else None
    gen = as_generator(rng)
    m = int(pool_size)
    if initial is None:
        pool = np.ones(m)
    else:
        pool = np.asarray(initial, dtype=float)
        if pool.shape != (m,):
            raise ValidationError("iterate_pool: initial pool must have shape (pool_size,)")

    ks_trace, mean_trace, stderr_trace = [], [], []
    cum_var = 0.0
    sorted_prev = np.sort(pool)
    streak = 0
    performed = 0
    for _ in range(iterations):
        idx = gen.integers(0, m, size=(k, m))
        summed = pool[idx].sum(axis=0)
        a = np.asarray(sample_increment(inc, gen, size=m), dtype=float)
        pool = summed * np.exp(-gamma * a)
        performed += 1

        sorted_new = np.sort(pool)
        ks = _ks_sorted(sorted_prev, sorted_new)
        sorted_prev = sorted_new
        ks_trace.append(ks)
        mean_trace.append(float(pool.mean()))
        cum_var += float(pool.var(ddof=1)) / m
        stderr_trace.append(math.sqrt(cum_var))

        streak = streak + 1 if ks < ks_stop else 0
        if streak >= ks_stop_runs:
            break

    zero_frac = float(np.mean(pool == 0.0))
    if regime is Regime.SUPERCRITICAL and zero_frac >= ZERO_FRACTION_BOUND:
        warnings.append(f"pool carries {zero_frac:.2e} exact zeros (underflow)")
    return SamplePool(
        samples=pool,
        gamma=gamma,
        increment=inc,
        iterations=performed,
        k=k,
        seed=seed,
        ks_trace=np.asarray(ks_trace),
        mean_trace=np.asarray(mean_trace),
        stderr_trace=np.asarray(stderr_trace),
        regime=regime,
        warnings=tuple(warnings),
    )


def _ks_sorted(a: np.ndarray, b: np.ndarray) -> float:
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


def branching_cross_check(
    inc: IncrementLaw,
    gamma: float,
    generations: int,
    replicates: int,
    rng=None,
    k: int = 2,
    max_nodes: int = 2**23,
) -> np.ndarray:
    """Exact finite-depth martingale values from the full k-ary genealogy.

    Each lifetime edge (one per node; its weight exp(-gamma * A_edge) is
    shared by all k children) carries a fresh increment, and the replicate
    value is the sum over the k^generations leaves of the ancestry products,
    with expectation exactly 1.  One generation applied to unit leaves is
    exactly one smoothing step, so the depth-g law is the g-fold image of
    the point mass at 1 without any resampling coupling: a bias oracle for
    iterate_pool.
    """
    if generations < 0 or generations > 25:
        raise ValidationError("branching_cross_check: generations must be in [0, 25]")
    if replicates < 100:
        raise ValidationError("branching_cross_check: need at least 100 replicates")
    width = k**generations
    if width > max_nodes:
        raise ValidationError(
            f"branching_cross_check: k^generations = {width} exceeds node budget {max_nodes}"
        )
    gen = as_generator(rng)
    batch = max(1, max_nodes // width)
    out = np.empty(replicates)
    done = 0
    while done < replicates:
        b = min(batch, replicates - done)
        w = np.ones(b)
        for _ in range(generations):
            a = np.asarray(sample_increment(inc, gen, size=w.size), dtype=float)
            w = np.repeat(w * np.exp(-gamma * a), k)
        out[done : done + b] = w.reshape(b, width).sum(axis=1)
        done += b
    return out


@dataclass(frozen=True)
class ResidualReport:
    """Laplace functional residual of a pool against the smoothing recursion."""

    s_grid: np.ndarray
    lhs: np.ndarray  # phi(s) over the pool
    rhs: np.ndarray  # E[phi(s exp(-gamma A))^2] over fresh increments
    stderr: np.ndarray
    max_residual: float

    def residuals(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs)


def laplace_functional_residual(
    pool,
    inc: IncrementLaw,
    gamma: float,
    s_grid,
    rng=None,
    n_increments: int = 10**5,
    grid_points: int = 1024,
) -> ResidualReport:
    """Check phi(s) = E[phi(s exp(-gamma A))^2] on a grid of s values.

    phi is the pool's empirical Laplace transform.  The inner expectation is
    Monte Carlo over fresh increments; phi at the tilted arguments is exact
    when few distinct arguments occur, otherwise interpolated from an exact
    log-spaced table (interpolation error is negligible against the Monte
    Carlo standard error, which is reported).
    """
    samples = pool.samples if hasattr(pool, "samples") else np.asarray(pool, dtype=float)
    if len(samples) == 0:
        raise ValidationError("laplace_functional_residual: empty pool")
    s_grid = np.asarray(s_grid, dtype=float)
    gen = as_generator(rng)
    a = np.asarray(sample_increment(inc, gen, size=n_increments), dtype=float)
    tilt = np.exp(-gamma * a)

    lhs = _pool_laplace(samples, s_grid)
    # one shared evaluation table for all tilted arguments s * tilt
    args = s_grid[:, None] * tilt[None, :]
    uniq = np.unique(args)
    if len(uniq) <= grid_points:
        table = uniq
    else:
        table = np.exp(np.linspace(math.log(uniq[0]), math.log(uniq[-1]), grid_points))
    phi_table = _pool_laplace(samples, table)
    log_table = np.log(table)

    rhs = np.empty_like(s_grid)
    stderr = np.empty_like(s_grid)
    for i in range(len(s_grid)):
        phi_vals = np.interp(np.log(args[i]), log_table, phi_table)
        sq = phi_vals**2
        rhs[i] = sq.mean()
        stderr[i] = sq.std(ddof=1) / math.sqrt(len(sq))
    max_residual = float(np.abs(lhs - rhs).max())
    return ResidualReport(s_grid, lhs, rhs, stderr, max_residual)


def _pool_laplace(samples: np.ndarray, s_values: np.ndarray, value_chunk: int = 16,
                  pool_chunk: int = 1 << 18) -> np.ndarray:
    """phi(s) = mean(exp(-s V)) over the pool, blocked to bound memory."""
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    total = np.zeros(len(s_values))
    n = len(samples)
    for v0 in range(0, n, pool_chunk):
        v = samples[v0 : v0 + pool_chunk]
        for s0 in range(0, len(s_values), value_chunk):
            block = s_values[s0 : s0 + value_chunk]
            total[s0 : s0 + len(block)] += np.exp(-block[:, None] * v[None, :]).sum(axis=1)
    return total / n
