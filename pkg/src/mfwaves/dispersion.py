"""Speed-decay relations and regime classification.

A travelling wave with decay rate gamma and speed c exists when the tilted
increment satisfies E[exp(-gamma A)] = 1/k (k interacting particles,
default 2) together with the sign of the tilted mean E[A exp(-gamma A)]:
positive means supercritical (finite-mean martingale limit), zero means
critical (minimal speed; the finite-mean limit degenerates).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .distributions import (
    Brownian,
    CompoundPoisson,
    Exponential,
    IncrementLaw,
    JumpLaw,
    NoLevy,
    Power2Increment,
    SyncIncrement,
    as_generator,
    cumulant,
    cumulant_domain,
    exp_moment,
    laplace_A,
    mgf,
    sample_increment,
    theta_max,
    tilted_moment,
)
from .errors import NumericalFailure, ValidationError
from .stats import golden_section

# tolerances for the analytic classification path (Monte Carlo uses stderr units)
PSI_TOL = 1e-9
TILT_TIE_TOL = 1e-7
BRACKET_LO = 1e-8
BRACKET_HI = 50.0


class Regime(enum.Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    INVALID = "invalid"


@dataclass(frozen=True)
class SpeedDecayResult:
    gamma: float
    c: float
    regime: Regime
    model: str  # "brownian" | "bs" | "power2" | "generic-levy"
    diagnostics: dict = field(default_factory=dict)
    notes: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "gamma": self.gamma,
            "c": self.c,
            "regime": self.regime.value,
            "diagnostics": dict(self.diagnostics),
            "notes": list(self.notes),
        }


def _classify(psi1: float, mean_tilt: float, k: int, psi_tol=PSI_TOL, tie_tol=TILT_TIE_TOL) -> Regime:
    if abs(psi1 - 1.0 / k) > psi_tol:
        return Regime.INVALID
    if mean_tilt > tie_tol:
        return Regime.SUPERCRITICAL
    if abs(mean_tilt) <= tie_tol:
        return Regime.CRITICAL
    return Regime.INVALID


def _model_tag(inc: IncrementLaw) -> str:
    if isinstance(inc, Power2Increment):
        return "power2"
    if isinstance(inc, SyncIncrement):
        return "brownian" if isinstance(inc.levy, Brownian) else "bs"
    return "generic-levy"


# ---------------------------------------------------------------------------
# power-of-2 model: speed is pinned to 1, solve for gamma


def solve_gamma_power2(jumps: JumpLaw, sigma2: float = 0.0, k: int = 2) -> SpeedDecayResult:
    """Root gamma of E[exp(-gamma Y)] = 1/k for Y = Xbar + Z; speed fixed to 1.

    Phi(gamma) is strictly decreasing from 1 to 0, so the root is unique and
    bracketed bisection converges unconditionally.  The regime is always
    supercritical because Y > 0 almost surely.
    """
    inc = Power2Increment(jumps, sigma2)
    target = 1.0 / k

    def phi_minus(g):
        return laplace_A(inc, g, 1.0) - target

    lo, hi = BRACKET_LO, BRACKET_HI
    while phi_minus(hi) > 0:
        hi *= 2.0
        if hi > 1e9:
            raise NumericalFailure("solve_gamma_power2: bracket expansion failed")
    gamma = float(optimize.bisect(phi_minus, lo, hi, xtol=1e-15, maxiter=300))
    if abs(phi_minus(gamma)) > 1e-12:
        raise NumericalFailure("solve_gamma_power2: residual above 1e-12")
    psi1 = laplace_A(inc, gamma, 1.0)
    mean_tilt = tilted_moment(inc, gamma, 1)
    diag = {
        "psi1": psi1,
        "mean_tilt": mean_tilt,
        "moment2_tilt": tilted_moment(inc, gamma, 2),
        "domain_bound": math.inf,
        "k": k,
    }
    notes = ()
    note = power2_closed_form_note(jumps, sigma2, gamma)
    if note is not None:
        notes = (note,)
    return SpeedDecayResult(gamma, 1.0, _classify(psi1, mean_tilt, k), "power2", diag, notes)


def power2_exp_closed_form(sigma2: float) -> float:
    """Closed-form decay rate (sqrt(1 + 2*sigma2) - 1)/sigma2 for Exp(1) jumps.

    Kept only to document its disagreement with the defining equation; see
    power2_closed_form_note.
    """
    if sigma2 <= 0:
        raise ValidationError("closed form requires sigma2 > 0")
    return (math.sqrt(1.0 + 2.0 * sigma2) - 1.0) / sigma2


def power2_closed_form_note(jumps: JumpLaw, sigma2: float, gamma_root: float) -> str | None:
    """Discrepancy note for the circulated Exp(1)+Brownian closed form.

    The closed form (sqrt(1+2*sigma2)-1)/sigma2 does not satisfy the defining
    condition E[exp(-gamma Y)] = 1/2 that it is quoted for; the numeric root
    of the defining equation is authoritative.
    """
    if not (isinstance(jumps, Exponential) and abs(jumps.rate - 1.0) < 1e-12 and sigma2 > 0):
        return None
    cf = power2_exp_closed_form(sigma2)
    inc = Power2Increment(jumps, sigma2)
    phi_cf = laplace_A(inc, cf, 1.0)
    return (
        f"closed form (sqrt(1+2*sigma2)-1)/sigma2 = {cf:.9f} does not solve the defining "
        f"equation E[exp(-gamma*Y)] = 1/2 (it gives {phi_cf:.9f}); using the numeric root "
        f"gamma = {gamma_root:.9f} of the product equation "
        f"(1+gamma)*(1+sigma2*gamma/2) = 2 instead"
    )


# ---------------------------------------------------------------------------
# copying model with independent compound-Poisson jumps ("bs")


def speed_from_gamma_bs(gamma: float, lam: float, jumps: JumpLaw | None, k: int = 2) -> float:
    """Speed v(gamma) = (k - 1 + lam*(E[exp(gamma X)] - 1)) / gamma."""
    if gamma <= 0:
        raise ValidationError("speed_from_gamma_bs: gamma must be positive")
    if lam < 0:
        raise ValidationError("speed_from_gamma_bs: lam must be nonnegative")
    if lam == 0:
        return (k - 1.0) / gamma
    m = mgf(jumps, gamma)
    if math.isinf(m):
        raise NumericalFailure(f"MGF divergent at gamma={gamma} (domain bound {theta_max(jumps)})")
    return (k - 1.0 + lam * (m - 1.0)) / gamma


def _bs_sync_result(gamma: float, c: float, lam: float, jumps: JumpLaw | None, k: int,
                    regime: Regime | None = None, notes=()) -> SpeedDecayResult:
    levy = CompoundPoisson(lam, jumps) if lam > 0 else NoLevy()
    inc = SyncIncrement(levy, c)
    psi1 = laplace_A(inc, gamma, 1.0)
    mean_tilt = tilted_moment(inc, gamma, 1)
    D = 1.0 + gamma * c - cumulant(levy, gamma)
    diag = {
        "psi1": psi1,
        "mean_tilt": mean_tilt,
        "moment2_tilt": tilted_moment(inc, gamma, 2),
        "domain_bound": cumulant_domain(levy),
        "r": D,
        "k": k,
    }
    if regime is None:
        regime = _classify(psi1, mean_tilt, k)
    return SpeedDecayResult(gamma, c, regime, "bs", diag, notes)


def critical_point_bs(lam: float, jumps: JumpLaw, k: int = 2) -> SpeedDecayResult:
    """Minimize the strictly convex v(gamma) by golden section; verify stationarity.

    The stationary point satisfies v(gamma*) = lam * E[X exp(gamma* X)].
    Pure copying (lam = 0) has no interior minimum: v = (k-1)/gamma is monotone.
    """
    if lam <= 0:
        raise NumericalFailure("no interior minimum: pure copying speed (k-1)/gamma is monotone")
    bound = theta_max(jumps)
    if not bound > 0:
        raise ValidationError("critical_point_bs: jump MGF domain is empty")

    def v(g):
        return speed_from_gamma_bs(g, lam, jumps, k)

    lo = BRACKET_LO
    hi = min(bound * (1.0 - 1e-6), BRACKET_HI)
    if math.isinf(bound):
        # expand geometrically until v is increasing at the right end
        while v(hi) < v(hi * 0.99) and hi < 1e6:
            hi *= 2.0
    gamma_star, c_star = golden_section(v, lo, hi, rel_tol=1e-10)

    # golden section bottoms out at the sqrt(eps) comparison-noise floor of the
    # flat minimum; polish with the monotone stationarity equation v'(g) = 0
    def dv(g):
        return lam * g * exp_moment(jumps, g, 1) - (k - 1.0 + lam * (exp_moment(jumps, g, 0) - 1.0))

    g_lo = max(gamma_star * (1.0 - 1e-4), lo)
    g_hi = min(gamma_star * (1.0 + 1e-4), bound * (1.0 - 1e-9))
    if dv(g_lo) < 0 < dv(g_hi):
        gamma_star = float(optimize.brentq(dv, g_lo, g_hi, xtol=1e-15, maxiter=200))
        c_star = v(gamma_star)
    stationarity = abs(c_star - lam * exp_moment(jumps, gamma_star, 1))
    if stationarity > 1e-6 * c_star:
        raise NumericalFailure(
            f"critical point stationarity check failed: |v - lam*E[X e^(gX)]| = {stationarity}"
        )
    return _bs_sync_result(gamma_star, c_star, lam, jumps, k, regime=Regime.CRITICAL)


def gamma_from_speed_bs(c: float, lam: float, jumps: JumpLaw | None, k: int = 2) -> SpeedDecayResult:
    """Decay rate for a requested speed: the smaller root of v(gamma) = c.

    Speeds below the critical speed admit no travelling wave.  Pure copying
    (lam = 0) is a one-parameter family with gamma * c = k - 1 for any c > 0.
    """
    if lam < 0:
        raise ValidationError("gamma_from_speed_bs: lam must be nonnegative")
    if lam == 0:
        if c <= 0:
            raise NumericalFailure("pure copying requires a positive speed")
        return _bs_sync_result((k - 1.0) / c, c, lam, jumps, k)
    crit = critical_point_bs(lam, jumps, k)
    gamma_star, c_star = crit.gamma, crit.c
    if abs(c - c_star) <= 1e-9 * max(1.0, c_star):
        return crit
    if c < c_star:
        raise NumericalFailure(
            f"no travelling wave below c* = {c_star:.10g} (requested c = {c:.10g})"
        )

    def f(g):
        return speed_from_gamma_bs(g, lam, jumps, k) - c

    gamma = float(optimize.brentq(f, BRACKET_LO * 1e-4, gamma_star, xtol=1e-15, maxiter=300))
    return _bs_sync_result(gamma, c, lam, jumps, k, regime=Regime.SUPERCRITICAL)


# ---------------------------------------------------------------------------
# Brownian synchronisation model


def brownian_dispersion(sigma2: float, mode: str = "minimal", gamma: float | None = None,
                        c: float | None = None, k: int = 2) -> SpeedDecayResult:
    """Closed-form dispersion for Brownian diffusion: gamma*c - sigma2*gamma^2/2 = k - 1.

    minimal: the critical pair (sqrt(2(k-1))/sigma, sqrt(2(k-1))*sigma);
    from_gamma: c = (k - 1 + sigma2*gamma^2/2)/gamma;
    from_speed: the smaller quadratic root, erroring below the minimal speed.
    """
    if not sigma2 > 0:
        raise ValidationError("brownian_dispersion: sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    km1 = k - 1.0
    c_min = math.sqrt(2.0 * km1) * sigma
    if mode == "minimal":
        g, cc = math.sqrt(2.0 * km1) / sigma, c_min
        regime = Regime.CRITICAL
    elif mode == "from_gamma":
        if gamma is None or gamma <= 0:
            raise ValidationError("brownian_dispersion: from_gamma needs gamma > 0")
        g = gamma
        cc = (km1 + 0.5 * sigma2 * gamma**2) / gamma
        regime = None
    elif mode == "from_speed":
        if c is None:
            raise ValidationError("brownian_dispersion: from_speed needs c")
        disc = c**2 - 2.0 * km1 * sigma2
        if disc < -1e-12 * max(1.0, c**2):
            raise NumericalFailure(
                f"no travelling wave below c_min = {c_min:.10g} (requested c = {c:.10g})"
            )
        g = (c - math.sqrt(max(disc, 0.0))) / sigma2
        cc = c
        regime = None
    else:
        raise ValidationError(f"brownian_dispersion: unknown mode {mode!r}")
    inc = SyncIncrement(Brownian(sigma2), cc)
    psi1 = laplace_A(inc, g, 1.0)
    mean_tilt = tilted_moment(inc, g, 1)
    diag = {
        "psi1": psi1,
        "mean_tilt": mean_tilt,
        "moment2_tilt": tilted_moment(inc, g, 2),
        "domain_bound": math.inf,
        "r": 1.0 + g * cc - cumulant(Brownian(sigma2), g),
        "c_min": c_min,
        "k": k,
    }
    if regime is None:
        regime = _classify(psi1, mean_tilt, k)
    return SpeedDecayResult(g, cc, regime, "brownian", diag)


# ---------------------------------------------------------------------------
# regime classification for an arbitrary increment


def regime_classify(inc: IncrementLaw, gamma: float, k: int = 2, method: str = "analytic",
                    n_draws: int = 10**6, rng=None) -> SpeedDecayResult:
    """Classify (increment, gamma): supercritical, critical, or invalid.

    The analytic path evaluates the tilted moments exactly.  The Monte Carlo
    path estimates them from n_draws increments and reports standard errors;
    classification then uses 3 stderr (psi1) and 2 stderr (tilt tie) bands.
    """
    if gamma <= 0:
        raise ValidationError("regime_classify: gamma must be positive")
    c = inc.c if isinstance(inc, SyncIncrement) else 1.0
    if method == "analytic":
        psi1 = laplace_A(inc, gamma, 1.0)
        mean_tilt = tilted_moment(inc, gamma, 1)
        diag = {
            "psi1": psi1,
            "mean_tilt": mean_tilt,
            "moment2_tilt": tilted_moment(inc, gamma, 2),
            "domain_bound": cumulant_domain(inc.levy) if isinstance(inc, SyncIncrement) else math.inf,
            "k": k,
            "method": "analytic",
        }
        regime = _classify(psi1, mean_tilt, k)
    elif method == "mc":
        gen = as_generator(rng)
        a = np.asarray(sample_increment(inc, gen, size=n_draws), dtype=float)
        w = np.exp(-gamma * a)
        terms = {"psi1": w, "mean_tilt": a * w, "moment2_tilt": a * a * w}
        diag = {"k": k, "method": "mc", "n_draws": n_draws}
        for name, arr in terms.items():
            diag[name] = float(arr.mean())
            diag[name + "_stderr"] = float(arr.std(ddof=1) / math.sqrt(n_draws))
        psi_tol = 3.0 * diag["psi1_stderr"]
        tie_tol = 2.0 * diag["mean_tilt_stderr"]
        regime = _classify(diag["psi1"], diag["mean_tilt"], k, psi_tol=psi_tol, tie_tol=tie_tol)
    else:
        raise ValidationError(f"regime_classify: unknown method {method!r}")
    return SpeedDecayResult(gamma, c, regime, _model_tag(inc), diag)
