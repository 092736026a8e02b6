import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfwaves.dispersion import (
    Regime,
    brownian_dispersion,
    critical_point_bs,
    gamma_from_speed_bs,
    power2_exp_closed_form,
    regime_classify,
    solve_gamma_power2,
    speed_from_gamma_bs,
)
from mfwaves.distributions import (
    Brownian,
    CompoundPoisson,
    Deterministic,
    Exponential,
    NoLevy,
    Power2Increment,
    RngStream,
    SyncIncrement,
    laplace_A,
)
from mfwaves.errors import NumericalFailure


def bisect_oracle(f, lo, hi, tol=1e-13):
    """Plain interval bisection, kept independent of the library solvers."""
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# power-of-2 decay rate


def test_power2_exp_sigma0():
    # 1/(1+gamma) = 1/2  =>  gamma = 1
    res = solve_gamma_power2(Exponential(1.0), 0.0)
    assert res.gamma == pytest.approx(1.0, abs=1e-12)
    assert res.c == 1.0
    assert res.regime is Regime.SUPERCRITICAL


def test_power2_exp_sigma2_quadratic_root():
    # oracle: root of (1+g)(1+g) = 2 i.e. g = sqrt(2) - 1 for sigma2 = 2
    oracle = bisect_oracle(lambda g: (1 + g) * (1 + g) - 2.0, 0.0, 1.0)
    res = solve_gamma_power2(Exponential(1.0), 2.0)
    assert res.gamma == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-12)
    assert res.gamma == pytest.approx(oracle, abs=1e-10)


def test_power2_deterministic_uniform_root():
    # Laplace transform of Uniform(0,1): (1 - e^-g)/g = 1/2
    oracle = bisect_oracle(lambda g: (1 - math.exp(-g)) / g - 0.5, 0.1, 5.0)
    res = solve_gamma_power2(Deterministic(1.0), 0.0)
    assert res.gamma == pytest.approx(oracle, abs=1e-10)
    assert res.gamma == pytest.approx(1.593624, abs=1e-6)


def test_power2_monotone_bracketing_invariant():
    res = solve_gamma_power2(Exponential(1.0), 2.0)
    inc = Power2Increment(Exponential(1.0), 2.0)
    assert laplace_A(inc, res.gamma - 1e-6, 1.0) > 0.5 > laplace_A(inc, res.gamma + 1e-6, 1.0)


def test_power2_closed_form_note_emitted():
    res = solve_gamma_power2(Exponential(1.0), 2.0)
    assert len(res.notes) == 1
    note = res.notes[0]
    assert "closed form" in note and "0.618033989" in note and "0.414213562" in note
    # the closed form itself disagrees with the defining equation
    cf = power2_exp_closed_form(2.0)
    assert abs(cf - res.gamma) > 0.2


def test_power2_general_k():
    # k = 3: 1/(1+gamma) = 1/3 => gamma = 2
    res = solve_gamma_power2(Exponential(1.0), 0.0, k=3)
    assert res.gamma == pytest.approx(2.0, abs=1e-12)


# ---------------------------------------------------------------------------
# copying model speed-decay relations


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_pure_copying_family(gamma):
    assert speed_from_gamma_bs(gamma, 0.0, None) * gamma == pytest.approx(1.0, abs=1e-12)


def test_speed_from_gamma_exponential_jumps():
    # v(g) = 1/g + lam/(1-g)
    assert speed_from_gamma_bs(0.5, 1.0, Exponential(1.0)) == pytest.approx(4.0, abs=1e-12)
    assert speed_from_gamma_bs(0.25, 1.0, Exponential(1.0)) == pytest.approx(4.0 + 4.0 / 3.0, abs=1e-12)


def test_speed_from_gamma_divergent_mgf():
    with pytest.raises(NumericalFailure, match="MGF divergent"):
        speed_from_gamma_bs(1.5, 1.0, Exponential(1.0))


def test_critical_point_exponential_jumps():
    res = critical_point_bs(1.0, Exponential(1.0))
    assert res.gamma == pytest.approx(0.5, abs=1e-10)
    assert res.c == pytest.approx(4.0, abs=1e-10)
    assert res.regime is Regime.CRITICAL


def test_critical_point_deterministic_jumps_grid_oracle():
    # grid-search oracle for min of v(g) = e^g / g over (0, 10]
    grid = np.linspace(1e-4, 10.0, 2_000_001)
    vals = np.exp(grid) / grid
    i = int(np.argmin(vals))
    res = critical_point_bs(1.0, Deterministic(1.0))
    assert res.gamma == pytest.approx(grid[i], abs=1e-5)
    assert res.c == pytest.approx(vals[i], rel=1e-9)
    assert res.gamma == pytest.approx(1.0, abs=1e-10)  # stationarity: e^g (g-1) = -1+e^g... min at g=1
    assert res.c == pytest.approx(math.e, abs=1e-10)


def test_critical_point_minimality():
    res = critical_point_bs(2.0, Exponential(1.0))
    v = lambda g: speed_from_gamma_bs(g, 2.0, Exponential(1.0))
    assert res.c <= v(res.gamma - 0.01) and res.c <= v(res.gamma + 0.01)


def test_critical_point_requires_positive_lambda():
    with pytest.raises(NumericalFailure, match="no interior minimum"):
        critical_point_bs(0.0, Exponential(1.0))


def test_gamma_from_speed_at_critical():
    res = gamma_from_speed_bs(4.0, 1.0, Exponential(1.0))
    assert res.regime is Regime.CRITICAL
    assert res.gamma == pytest.approx(0.5, abs=1e-9)


def test_gamma_from_speed_supercritical():
    # oracle: bisection for 1/(g(1-g)) = 4.5 on (0, 1/2); exact root is 1/3
    oracle = bisect_oracle(lambda g: 1.0 / (g * (1 - g)) - 4.5, 1e-6, 0.5 - 1e-9)
    res = gamma_from_speed_bs(4.5, 1.0, Exponential(1.0))
    assert res.gamma == pytest.approx(oracle, abs=1e-10)
    assert res.gamma == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert res.regime is Regime.SUPERCRITICAL


def test_gamma_from_speed_below_critical_errors():
    with pytest.raises(NumericalFailure, match="no travelling wave below"):
        gamma_from_speed_bs(3.0, 1.0, Exponential(1.0))


def test_convex_duality_consistency():
    # spec invariant: supercritical results satisfy v(gamma) = c and gamma < gamma*
    star = critical_point_bs(1.0, Exponential(1.0))
    for c in (4.2, 4.5, 5.0, 7.5):
        res = gamma_from_speed_bs(c, 1.0, Exponential(1.0))
        assert speed_from_gamma_bs(res.gamma, 1.0, Exponential(1.0)) == pytest.approx(c, abs=1e-9)
        assert res.gamma < star.gamma


# ---------------------------------------------------------------------------
# Brownian closed forms


def test_brownian_minimal_speed():
    res = brownian_dispersion(1.0, "minimal")
    assert res.gamma == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert res.c == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert res.regime is Regime.CRITICAL


def test_brownian_minimal_speed_sigma4():
    res = brownian_dispersion(4.0, "minimal")
    assert res.c == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


def test_brownian_from_gamma():
    res = brownian_dispersion(1.0, "from_gamma", gamma=1.0)
    assert res.c == pytest.approx(1.5, abs=1e-12)
    assert res.regime is Regime.SUPERCRITICAL


@given(st.floats(min_value=0.2, max_value=5.0), st.floats(min_value=1.01, max_value=4.0))
@settings(max_examples=100, deadline=None)
def test_brownian_from_speed_quadratic_oracle(sigma2, speed_multiple):
    # direct quadratic-formula oracle within 1e-12
    c = speed_multiple * math.sqrt(2.0 * sigma2)
    res = brownian_dispersion(sigma2, "from_speed", c=c)
    oracle = (c - math.sqrt(c * c - 2.0 * sigma2)) / sigma2
    assert res.gamma == pytest.approx(oracle, abs=1e-12)
    assert res.regime is Regime.SUPERCRITICAL


def test_brownian_from_speed_below_minimum():
    with pytest.raises(NumericalFailure, match="below c_min"):
        brownian_dispersion(1.0, "from_speed", c=1.0)


# ---------------------------------------------------------------------------
# regime classification


def test_classify_power2_supercritical():
    res = regime_classify(Power2Increment(Exponential(1.0), 0.0), 1.0)
    assert res.regime is Regime.SUPERCRITICAL
    assert res.diagnostics["psi1"] == pytest.approx(0.5, abs=1e-12)
    assert res.diagnostics["mean_tilt"] > 0


def test_classify_brownian_critical():
    res = regime_classify(SyncIncrement(Brownian(1.0), math.sqrt(2.0)), math.sqrt(2.0))
    assert res.regime is Regime.CRITICAL
    assert abs(res.diagnostics["mean_tilt"]) < 1e-7


def test_classify_pure_copy_supercritical():
    res = regime_classify(SyncIncrement(NoLevy(), 1.0), 1.0)
    assert res.regime is Regime.SUPERCRITICAL
    assert res.diagnostics["psi1"] == pytest.approx(0.5, abs=1e-12)
    assert res.diagnostics["mean_tilt"] == pytest.approx(0.25, abs=1e-12)  # E[T e^-T]


def test_classify_invalid_when_normalization_broken():
    res = regime_classify(SyncIncrement(NoLevy(), 2.0), 1.0)  # psi1 = 1/3
    assert res.regime is Regime.INVALID


def test_classify_mc_agrees_with_analytic():
    # spec invariant: MC psi1 within 3 stderr of the analytic transform
    inc = SyncIncrement(CompoundPoisson(1.0, Exponential(1.0)), 4.5)
    gamma = 1.0 / 3.0
    ana = laplace_A(inc, gamma, 1.0)
    res = regime_classify(inc, gamma, method="mc", n_draws=10**6, rng=RngStream(17))
    assert abs(res.diagnostics["psi1"] - ana) < 3 * res.diagnostics["psi1_stderr"]
    assert res.regime is Regime.SUPERCRITICAL


@given(st.floats(min_value=0.3, max_value=3.0))
@settings(max_examples=30, deadline=None)
def test_pure_copy_gamma_c_duality(c):
    res = gamma_from_speed_bs(c, 0.0, None)
    assert res.gamma * c == pytest.approx(1.0, rel=1e-12)
    assert res.regime is Regime.SUPERCRITICAL


def test_runtime_budgets():
    import time

    t0 = time.perf_counter()
    brownian_dispersion(1.0, "minimal")
    assert time.perf_counter() - t0 < 1e-3
    t0 = time.perf_counter()
    critical_point_bs(1.0, Exponential(1.0))
    assert time.perf_counter() - t0 < 10e-3
    t0 = time.perf_counter()
    solve_gamma_power2(Exponential(1.0), 2.0)
    assert time.perf_counter() - t0 < 10e-3
