import math

import numpy as np
import pytest

from mfwaves.dispersion import Regime
from mfwaves.distributions import (
    Brownian,
    ConstantIncrement,
    Exponential,
    NoLevy,
    Power2Increment,
    RngStream,
    SyncIncrement,
)
from mfwaves.errors import ValidationError
from mfwaves.smoothing import (
    branching_cross_check,
    iterate_pool,
    laplace_functional_residual,
)
from mfwaves.stats import ks_critical_value, ks_statistic, ks_two_sample

POWER2_EXP = Power2Increment(Exponential(1.0), 0.0)
PURE_COPY = SyncIncrement(NoLevy(), 1.0)


def test_pool_fixed_point_constant_increment():
    # e^{-gamma A} = 1/2 exactly: (1 + 1) * 1/2 = 1 forever
    inc = ConstantIncrement(math.log(2.0))
    pool = iterate_pool(inc, 1.0, 10_000, 8, rng=RngStream(1))
    assert np.all(pool.samples == 1.0)
    assert pool.regime is Regime.SUPERCRITICAL  # E[A e^{-gamma A}] = ln2 / 2 > 0


def test_pool_martingale_mean_band(pool_power2_exp):
    pool = pool_power2_exp
    assert pool.mean() == pytest.approx(1.0, abs=0.02)
    # every iteration stays within 5 cumulative standard errors of 1
    assert np.all(np.abs(pool.mean_trace - 1.0) < 5.0 * pool.stderr_trace)
    assert pool.zero_fraction() < 1e-4
    assert np.all(pool.samples >= 0)


def test_pool_pure_copy_mean_and_trace():
    pool = iterate_pool(PURE_COPY, 1.0, 50_000, 40, rng=RngStream(3))
    assert np.all(np.abs(pool.mean_trace - 1.0) < 5.0 * pool.stderr_trace)
    assert pool.ks_trace[-1] < 1e-2


def test_pool_requires_minimum_size():
    with pytest.raises(ValidationError, match="pool_size"):
        iterate_pool(POWER2_EXP, 1.0, 100, 5, rng=RngStream(4))


def test_pool_critical_regime_warns_but_runs():
    inc = SyncIncrement(Brownian(1.0), math.sqrt(2.0))
    pool = iterate_pool(inc, math.sqrt(2.0), 10_000, 3, rng=RngStream(5))
    assert pool.regime is Regime.CRITICAL
    assert any("degenerate" in w for w in pool.warnings)
    assert pool.iterations == 3


def test_pool_scale_family(pool_power2_exp):
    # multiplying the initial pool by a scales the final quantiles by a
    a = 3.7
    base = iterate_pool(POWER2_EXP, 1.0, 20_000, 10, rng=RngStream(6))
    scaled = iterate_pool(POWER2_EXP, 1.0, 20_000, 10, rng=RngStream(6),
                          initial=np.full(20_000, a))
    q = np.percentile(base.samples, [10, 25, 50, 75, 90])
    qs = np.percentile(scaled.samples, [10, 25, 50, 75, 90])
    assert np.allclose(qs / q, a, rtol=1e-12)


def test_pool_fixed_point_one_step_image(pool_power2_exp):
    # spec invariant: KS between pool and its one-step image < 2 * KS_crit(M)
    pool = pool_power2_exp
    m = len(pool.samples)
    gen = RngStream(7).generator()
    idx = gen.integers(0, m, size=(2, m))
    from mfwaves.distributions import sample_increment

    image = pool.samples[idx].sum(axis=0) * np.exp(-pool.gamma * sample_increment(POWER2_EXP, gen, m))
    assert ks_statistic(pool.samples, image) < 2.0 * ks_critical_value(m, m, 0.01)


def test_pool_determinism():
    a = iterate_pool(POWER2_EXP, 1.0, 10_000, 5, rng=RngStream(8))
    b = iterate_pool(POWER2_EXP, 1.0, 10_000, 5, rng=RngStream(8))
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.ks_trace, b.ks_trace)


# ---------------------------------------------------------------------------
# branching cross-check


def test_branching_generation_zero_is_one():
    out = branching_cross_check(POWER2_EXP, 1.0, 0, 200, rng=RngStream(9))
    assert np.all(out == 1.0)


def test_branching_martingale_mean():
    out = branching_cross_check(POWER2_EXP, 1.0, 12, 10_000, rng=RngStream(10))
    se = out.std(ddof=1) / math.sqrt(len(out))
    assert abs(out.mean() - 1.0) < 3 * se


def test_branching_one_generation_is_one_smoothing_step():
    # depth-1 law is (1+1) e^{-gamma A}: compare against direct draws
    gen = RngStream(11).generator()
    out = branching_cross_check(POWER2_EXP, 1.0, 1, 20_000, rng=RngStream(12))
    direct = 2.0 * np.exp(-gen.exponential(size=20_000))
    res = ks_two_sample(out, direct)
    assert res.passed


def test_branching_agrees_with_pool(pool_power2_exp):
    out = branching_cross_check(POWER2_EXP, 1.0, 14, 4_000, rng=RngStream(13))
    assert ks_two_sample(out, pool_power2_exp.samples).statistic < 0.03


def test_branching_memory_guard():
    with pytest.raises(ValidationError, match="node budget"):
        branching_cross_check(POWER2_EXP, 1.0, 25, 100, max_nodes=2**20)
    with pytest.raises(ValidationError, match="replicates"):
        branching_cross_check(POWER2_EXP, 1.0, 4, 10)


# ---------------------------------------------------------------------------
# Laplace functional residual


def test_residual_constant_increment_identity():
    # pool == 1 and e^{-gamma A} = 1/2: |e^{-s} - (e^{-s/2})^2| = 0 exactly
    inc = ConstantIncrement(math.log(2.0))
    pool = iterate_pool(inc, 1.0, 10_000, 2, rng=RngStream(14))
    rep = laplace_functional_residual(pool, inc, 1.0, [0.25, 0.5, 1, 2, 4],
                                      rng=RngStream(15), n_increments=1000)
    assert rep.max_residual < 1e-12


def test_residual_converged_pool(pool_power2_exp):
    rep = laplace_functional_residual(pool_power2_exp, POWER2_EXP, 1.0,
                                      [0.25, 0.5, 1, 2, 4], rng=RngStream(16))
    assert rep.max_residual < 0.01
    assert np.all(rep.stderr > 0)


def test_residual_monotone_in_convergence():
    # a one-step pool is farther from the fixed point than a converged pool
    rough = iterate_pool(POWER2_EXP, 1.0, 50_000, 1, rng=RngStream(17))
    smooth = iterate_pool(POWER2_EXP, 1.0, 50_000, 40, rng=RngStream(17))
    r_rough = laplace_functional_residual(rough, POWER2_EXP, 1.0, [0.25, 0.5, 1, 2, 4],
                                          rng=RngStream(18))
    r_smooth = laplace_functional_residual(smooth, POWER2_EXP, 1.0, [0.25, 0.5, 1, 2, 4],
                                           rng=RngStream(18))
    assert r_rough.max_residual > r_smooth.max_residual


def test_pool_with_three_interacting_particles():
    # k = 3 normalization: E[exp(-gamma Y)] = 1/3 keeps the pool mean at 1
    from mfwaves.dispersion import solve_gamma_power2
    from mfwaves.distributions import Exponential as Exp

    res = solve_gamma_power2(Exp(1.0), 0.0, k=3)
    assert res.gamma == pytest.approx(2.0, abs=1e-12)
    pool = iterate_pool(POWER2_EXP, res.gamma, 30_000, 25, k=3, rng=RngStream(19))
    assert np.all(np.abs(pool.mean_trace - 1.0) < 5.0 * pool.stderr_trace)
    mg = branching_cross_check(POWER2_EXP, res.gamma, 8, 2_000, k=3, rng=RngStream(20))
    assert ks_two_sample(mg, pool.samples).statistic < 0.04
