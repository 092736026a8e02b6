import math

import numpy as np
import pytest
from scipy import stats as sps

from mfwaves.distributions import RngStream
from mfwaves.stats import (
    golden_section,
    ks_critical_value,
    ks_one_sample,
    ks_statistic,
    ks_two_sample,
    ks_vs_cdf,
    wasserstein_vs_cdf,
)


def test_ks_statistic_matches_scipy():
    gen = RngStream(1).generator()
    x = gen.normal(size=3000)
    y = gen.normal(0.1, 1.0, size=2500)
    ours = ks_statistic(x, y)
    ref = sps.ks_2samp(x, y, method="asymp")
    assert ours == pytest.approx(ref.statistic, abs=1e-12)


def test_ks_two_sample_pvalue_matches_scipy():
    # scipy's asymp mode uses the finite-n kstwo refinement; the pure
    # Kolmogorov limit agrees with it to O(1/sqrt(n))
    gen = RngStream(2).generator()
    x = gen.normal(size=20_000)
    y = gen.normal(size=20_000)
    ours = ks_two_sample(x, y)
    ref = sps.ks_2samp(x, y, method="asymp")
    assert ours.pvalue == pytest.approx(ref.pvalue, abs=0.02)


def test_ks_critical_value_formula():
    # c(0.01) = sqrt(-ln(0.005)/2) = 1.6276...
    assert ks_critical_value(10**6, 10**6, 0.01) == pytest.approx(
        1.62762 * math.sqrt(2 / 10**6), rel=1e-4
    )


def test_ks_one_sample_exact_uniform():
    x = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    assert ks_one_sample(x, lambda v: v) == pytest.approx(0.1, abs=1e-12)


def test_golden_section_quadratic():
    x, fx = golden_section(lambda t: (t - 1.3) ** 2 + 2.0, 0.0, 5.0, rel_tol=1e-12)
    assert x == pytest.approx(1.3, abs=1e-6)
    assert fx == pytest.approx(2.0, abs=1e-12)


def test_wasserstein_vs_cdf_shift_recovery():
    gen = RngStream(3).generator()
    grid = np.linspace(-8, 8, 2001)
    cdf = 1.0 / (1.0 + np.exp(-grid))  # logistic CDF
    sample = np.sort(gen.logistic(size=50_000))
    w0 = wasserstein_vs_cdf(sample, grid, cdf, shift=0.0)
    w1 = wasserstein_vs_cdf(sample, grid, cdf, shift=2.0)
    assert w0 < 0.02
    assert w1 == pytest.approx(2.0, abs=0.05)  # W1 under pure translation is the shift


def test_ks_vs_cdf_matches_one_sample():
    gen = RngStream(4).generator()
    sample = np.sort(gen.random(10_000))
    grid = np.linspace(0, 1, 5001)
    assert ks_vs_cdf(sample, grid, grid) == pytest.approx(
        ks_one_sample(sample, lambda v: np.clip(v, 0, 1)), abs=1e-6
    )
