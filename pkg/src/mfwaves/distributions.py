"""Jump laws, Lévy driving processes, and the increment laws built from them.

Laws are immutable specs; sampling is a pure function of (spec, generator
state).  Streams are counter-based (Philox keyed by seed and stream id), so a
fixed ``RngStream`` pins the sample sequence regardless of scheduling or
worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import NumericalFailure, ValidationError

_GOLDEN64 = 0x9E3779B97F4A7C15  # splitmix-style substream dispersion


# ---------------------------------------------------------------------------
# random streams


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed % 2**64, self.stream_id % 2**64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, k: int) -> "RngStream":
        child = (self.stream_id * _GOLDEN64 + k + 1) % 2**64
        return RngStream(self.seed, child)


def as_generator(rng) -> np.random.Generator:
    """Normalize ints, RngStream, or Generator to a numpy Generator."""
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise ValidationError(f"cannot interpret rng of type {type(rng).__name__}")


# ---------------------------------------------------------------------------
# jump laws


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("Exponential: rate must be positive")


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValidationError("Deterministic: value must be positive")


@dataclass(frozen=True)
class GammaLaw:
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValidationError("GammaLaw: shape and rate must be positive")


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear CDF through strictly increasing (x, cdf) points."""

    x: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        cdf = np.asarray(self.cdf, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "cdf", cdf)
        if x.ndim != 1 or x.shape != cdf.shape or len(x) < 2:
            raise ValidationError("Tabulated: x and cdf must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(cdf) <= 0):
            raise ValidationError("Tabulated: x and cdf must be strictly increasing")
        if x[0] < 0:
            raise ValidationError("Tabulated: support must be nonnegative")
        if cdf[0] > 1e-12 or cdf[-1] < 1 - 1e-12:
            raise ValidationError("Tabulated: cdf must start <= 1e-12 and end >= 1 - 1e-12")


JumpLaw = Exponential | Deterministic | GammaLaw | Tabulated


def mean(law: JumpLaw) -> float:
    if isinstance(law, Exponential):
        return 1.0 / law.rate
    if isinstance(law, Deterministic):
        return law.value
    if isinstance(law, GammaLaw):
        return law.shape / law.rate
    if isinstance(law, Tabulated):
        dF = np.diff(law.cdf)
        mid = 0.5 * (law.x[:-1] + law.x[1:])
        return float(np.sum(dF * mid))
    raise ValidationError(f"unknown jump law {type(law).__name__}")


def theta_max(law: JumpLaw) -> float:
    """Supremum of the interval where E[exp(theta X)] is finite (strict bound)."""
    if isinstance(law, Exponential):
        return law.rate
    if isinstance(law, GammaLaw):
        return law.rate
    return math.inf  # bounded support


def exp_moment(law: JumpLaw, t: float, order: int = 0) -> float:
    """E[X^order * exp(t X)] for order in {0, 1, 2}; +inf at or beyond theta_max.

    Tabulated laws are integrated by the trapezoid rule against the CDF
    increments.
    """
    if order not in (0, 1, 2):
        raise ValidationError("exp_moment: order must be 0, 1, or 2")
    if t >= theta_max(law):
        return math.inf
    if isinstance(law, Exponential):
        r = law.rate
        return math.factorial(order) * r / (r - t) ** (order + 1)
    if isinstance(law, Deterministic):
        return law.value**order * math.exp(t * law.value)
    if isinstance(law, GammaLaw):
        a, r = law.shape, law.rate
        base = (r / (r - t)) ** a
        if order == 0:
            return base
        if order == 1:
            return base * a / (r - t)
        return base * a * (a + 1) / (r - t) ** 2
    if isinstance(law, Tabulated):
        g = law.x**order * np.exp(t * law.x)
        dF = np.diff(law.cdf)
        return float(np.sum(dF * 0.5 * (g[:-1] + g[1:])))
    raise ValidationError(f"unknown jump law {type(law).__name__}")


def mgf(law: JumpLaw, theta: float) -> float:
    """Moment generating function E[exp(theta X)]; +inf past the domain bound."""
    if theta < 0:
        raise ValidationError("mgf: theta must be nonnegative")
    return exp_moment(law, theta, 0)


def jump_cdf(law: JumpLaw, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(law, Exponential):
        return np.where(x < 0, 0.0, -np.expm1(-law.rate * np.maximum(x, 0.0)))
    if isinstance(law, Deterministic):
        return (x >= law.value).astype(float)
    if isinstance(law, GammaLaw):
        return special.gammainc(law.shape, law.rate * np.maximum(x, 0.0)) * (x >= 0)
    if isinstance(law, Tabulated):
        return np.interp(x, law.x, law.cdf, left=0.0, right=1.0)
    raise ValidationError(f"unknown jump law {type(law).__name__}")


def sample_jumps(law: JumpLaw, rng, size=None) -> np.ndarray:
    """Exact draws for parametric kinds; inverse piecewise-linear CDF for Tabulated."""
    gen = as_generator(rng)
    if isinstance(law, Exponential):
        return gen.exponential(1.0 / law.rate, size=size)
    if isinstance(law, Deterministic):
        if size is None:
            return law.value
        return np.full(size, law.value)
    if isinstance(law, GammaLaw):
        return gen.gamma(law.shape, 1.0 / law.rate, size=size)
    if isinstance(law, Tabulated):
        u = gen.random(size=size)
        return np.interp(u, law.cdf, law.x)
    raise ValidationError(f"unknown jump law {type(law).__name__}")


# ---------------------------------------------------------------------------
# integrated tail of a jump law


@dataclass(frozen=True)
class _ExponentialTail:
    """Integrated tail of Exponential(rate) is again Exponential(rate)."""

    rate: float

    def sample(self, rng, size=None):
        return as_generator(rng).exponential(1.0 / self.rate, size=size)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))


@dataclass(frozen=True)
class _UniformTail:
    """Integrated tail of a point mass at v is Uniform(0, v)."""

    high: float

    def sample(self, rng, size=None):
        return self.high * as_generator(rng).random(size=size)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(x / self.high, 0.0, 1.0)


class NumericIntegratedTail:
    """Grid-based integrated tail: density survival(x)/mean on a 4096-point grid.

    The grid covers [0, q999] (0.999 quantile of the integrated-tail law);
    beyond it the tail is extrapolated exponentially with the boundary hazard.
    Bounded-support laws get a grid over the full support and no tail branch.
    """

    GRID_POINTS = 4096

    def __init__(self, law: JumpLaw):
        mu = mean(law)
        if not (math.isfinite(mu) and mu > 0):
            raise NumericalFailure("integrated tail undefined: law has no finite positive mean")
        self._mu = mu
        support_end = law.x[-1] if isinstance(law, Tabulated) else None
        if support_end is None:
            support_end = self._locate_q999(law, mu)
        grid = np.linspace(0.0, support_end, self.GRID_POINTS)
        if isinstance(law, Tabulated):
            # include the knots so the trapezoid integral of the piecewise
            # linear survival is exact
            grid = np.unique(np.concatenate([grid, law.x]))
        surv = 1.0 - jump_cdf(law, grid)
        cdf = _cumtrapz(surv, grid) / mu
        self.grid = grid
        self.cdf_values = np.minimum(cdf, 1.0)
        self._cdf_end = float(self.cdf_values[-1])
        # boundary hazard for the exponential extrapolation
        tail_mass = max(1.0 - self._cdf_end, 0.0)
        if tail_mass > 1e-15 and surv[-1] > 0:
            self._hazard = (surv[-1] / mu) / tail_mass
        else:
            self._hazard = math.inf
            self._cdf_end = 1.0
            self.cdf_values[-1] = 1.0

    @staticmethod
    def _locate_q999(law, mu, target=0.999):
        hi = 1.0
        for _ in range(200):
            grid = np.linspace(0.0, hi, 2048)
            cdf = _cumtrapz(1.0 - jump_cdf(law, grid), grid) / mu
            if cdf[-1] >= target:
                return float(np.interp(target, cdf, grid))
            hi *= 2.0
        raise NumericalFailure("integrated tail undefined: quantile search did not converge")

    def sample(self, rng, size=None):
        gen = as_generator(rng)
        u = np.atleast_1d(gen.random(size=1 if size is None else size))
        out = np.interp(u, self.cdf_values, self.grid)
        if math.isfinite(self._hazard):
            tail = u > self._cdf_end
            if np.any(tail):
                excess = -np.log((1.0 - u[tail]) / (1.0 - self._cdf_end)) / self._hazard
                out[tail] = self.grid[-1] + excess
        return float(out[0]) if size is None else out.reshape(np.shape(u))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self.cdf_values, left=0.0)
        if math.isfinite(self._hazard):
            tail = x > self.grid[-1]
            if np.any(tail):
                out = np.asarray(out)
                out[tail] = 1.0 - (1.0 - self._cdf_end) * np.exp(
                    -self._hazard * (x[tail] - self.grid[-1])
                )
        return out


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[:-1] + y[1:]) * np.diff(x))
    return out


def integrated_tail(law: JumpLaw):
    """Sampler + CDF for the integrated-tail law (density survival(x)/mean)."""
    mu = mean(law)
    if not (math.isfinite(mu) and mu > 0):
        raise NumericalFailure("integrated tail undefined: law has no finite positive mean")
    if isinstance(law, Exponential):
        return _ExponentialTail(law.rate)
    if isinstance(law, Deterministic):
        return _UniformTail(law.value)
    return NumericIntegratedTail(law)


# ---------------------------------------------------------------------------
# Lévy driving processes


@dataclass(frozen=True)
class NoLevy:
    """No diffusion between interactions."""


@dataclass(frozen=True)
class Brownian:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValidationError("Brownian: sigma2 must be positive")


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    jumps: JumpLaw

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("CompoundPoisson: rate must be positive")


LevySpec = NoLevy | Brownian | CompoundPoisson


def cumulant_domain(spec: LevySpec) -> float:
    """Exact supremum theta_max of the interval where kappa(theta) is finite."""
    if isinstance(spec, CompoundPoisson):
        return theta_max(spec.jumps)
    return math.inf


def cumulant(spec: LevySpec, theta: float) -> float:
    """kappa(theta) = log E[exp(theta Gamma(1))]; +inf past the domain bound."""
    if isinstance(spec, NoLevy):
        return 0.0
    if isinstance(spec, Brownian):
        return 0.5 * spec.sigma2 * theta**2
    if isinstance(spec, CompoundPoisson):
        m = exp_moment(spec.jumps, theta, 0)
        return math.inf if math.isinf(m) else spec.rate * (m - 1.0)
    raise ValidationError(f"unknown levy spec {type(spec).__name__}")


def cumulant_deriv(spec: LevySpec, theta: float, order: int = 1) -> float:
    """kappa'(theta) (order=1) or kappa''(theta) (order=2)."""
    if order not in (1, 2):
        raise ValidationError("cumulant_deriv: order must be 1 or 2")
    if isinstance(spec, NoLevy):
        return 0.0
    if isinstance(spec, Brownian):
        return spec.sigma2 * theta if order == 1 else spec.sigma2
    if isinstance(spec, CompoundPoisson):
        m = exp_moment(spec.jumps, theta, order)
        return math.inf if math.isinf(m) else spec.rate * m
    raise ValidationError(f"unknown levy spec {type(spec).__name__}")


def _grouped_sums(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    idx = np.repeat(np.arange(len(counts)), counts)
    return np.bincount(idx, weights=values, minlength=len(counts))


def sample_displacement(spec: LevySpec, t, rng) -> np.ndarray:
    """Exact draw of Gamma(t) for each entry of t."""
    gen = as_generator(rng)
    t = np.asarray(t, dtype=float)
    if isinstance(spec, NoLevy):
        return np.zeros_like(t)
    if isinstance(spec, Brownian):
        return gen.normal(0.0, 1.0, size=t.shape) * np.sqrt(spec.sigma2 * t)
    if isinstance(spec, CompoundPoisson):
        counts = np.atleast_1d(gen.poisson(spec.rate * t))
        total = int(counts.sum())
        jumps = np.asarray(sample_jumps(spec.jumps, gen, size=total), dtype=float)
        return _grouped_sums(jumps, counts.ravel()).reshape(t.shape)
    raise ValidationError(f"unknown levy spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# increment laws


@dataclass(frozen=True)
class SyncIncrement:
    """A = c*T - Gamma(T) with T ~ Exp(1): frame increment of the copying models."""

    levy: LevySpec
    c: float


@dataclass(frozen=True, eq=False)
class Power2Increment:
    """Y = Xbar + Z: integrated-tail jump plus Exp(mean sigma2/2), Z = 0 when sigma2 = 0.

    The jump law must have mean 1 (the model's normalization).
    """

    jumps: JumpLaw
    sigma2: float = 0.0
    tail: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValidationError("Power2Increment: sigma2 must be nonnegative")
        mu = mean(self.jumps)
        if abs(mu - 1.0) > 1e-9:
            raise ValidationError(
                f"Power2Increment: jump law must have mean 1 (normalization rule), got {mu!r}"
            )
        object.__setattr__(self, "tail", integrated_tail(self.jumps))


@dataclass(frozen=True)
class ConstantIncrement:
    """Degenerate increment A = value: calibration aid for fixed-point identities."""

    value: float


IncrementLaw = SyncIncrement | Power2Increment | ConstantIncrement


def sample_A(inc: SyncIncrement, rng, size=None) -> np.ndarray:
    """One exact draw (or an array) of A = c*T - Gamma(T), T ~ Exp(1)."""
    gen = as_generator(rng)
    t = gen.exponential(size=1 if size is None else size)
    a = inc.c * t - sample_displacement(inc.levy, t, gen)
    return float(a[0]) if size is None else a


def sample_Y(inc: Power2Increment, rng, size=None) -> np.ndarray:
    """One exact draw (or an array) of Y = Xbar + Z."""
    gen = as_generator(rng)
    y = inc.tail.sample(gen, size=size)
    if inc.sigma2 > 0:
        y = y + gen.exponential(inc.sigma2 / 2.0, size=size)
    return y


def sample_increment(inc: IncrementLaw, rng, size=None) -> np.ndarray:
    if isinstance(inc, SyncIncrement):
        return sample_A(inc, rng, size=size)
    if isinstance(inc, Power2Increment):
        return sample_Y(inc, rng, size=size)
    if isinstance(inc, ConstantIncrement):
        if size is None:
            return inc.value
        return np.full(size, float(inc.value))
    raise ValidationError(f"unknown increment law {type(inc).__name__}")


def _laplace_jump(law: JumpLaw, u: float, order: int = 0) -> float:
    """E[X^order exp(-u X)] for u >= 0."""
    return exp_moment(law, -u, order)


def _laplace_integrated_tail(law: JumpLaw, u: float, order: int = 0) -> float:
    """E[Xbar^order exp(-u Xbar)] via the jump law's Laplace moments."""
    mu = mean(law)
    if u < 1e-12:
        # series limit at u = 0; higher orders are never requested there
        if order == 0:
            return 1.0
        if order == 1:
            return exp_moment(law, 0.0, 2) / (2.0 * mu)
        raise ValidationError("integrated-tail Laplace moment of order 2 undefined at u=0")
    lam0 = _laplace_jump(law, u, 0)
    if order == 0:
        return (1.0 - lam0) / (u * mu)
    lam1 = _laplace_jump(law, u, 1)
    if order == 1:
        return (1.0 - lam0 - lam1 * u) / (u**2 * mu)
    lam2 = _laplace_jump(law, u, 2)
    return (2.0 * (1.0 - lam0) - 2.0 * lam1 * u - lam2 * u**2) / (u**3 * mu)


def laplace_A(inc: IncrementLaw, gamma: float, s: float = 1.0) -> float:
    """Exact Laplace transform E[exp(-s*gamma*increment)].

    SyncIncrement: 1 / (1 + s*gamma*c - kappa(s*gamma)), defined while
    s*gamma stays inside the cumulant domain and the denominator is positive.
    Power2Increment: product of the integrated-tail and exponential factors.
    """
    if gamma <= 0:
        raise ValidationError("laplace_A: gamma must be positive")
    if s < 0:
        raise ValidationError("laplace_A: s must be nonnegative")
    u = s * gamma
    if isinstance(inc, SyncIncrement):
        if u >= cumulant_domain(inc.levy):
            raise NumericalFailure(
                f"transform undefined at s={s}: s*gamma={u} outside the cumulant domain"
            )
        denom = 1.0 + u * inc.c - cumulant(inc.levy, u)
        if denom <= 0:
            raise NumericalFailure(f"transform undefined at s={s}: denominator {denom} <= 0")
        return 1.0 / denom
    if isinstance(inc, Power2Increment):
        zeta = 1.0 / (1.0 + inc.sigma2 * u / 2.0)
        return _laplace_integrated_tail(inc.jumps, u, 0) * zeta
    if isinstance(inc, ConstantIncrement):
        return math.exp(-u * inc.value)
    raise ValidationError(f"unknown increment law {type(inc).__name__}")


def tilted_moment(inc: IncrementLaw, gamma: float, order: int) -> float:
    """E[U^order exp(-gamma U)] for the increment U, order in {0, 1, 2}, analytic."""
    if order == 0:
        return laplace_A(inc, gamma, 1.0)
    if isinstance(inc, SyncIncrement):
        if gamma >= cumulant_domain(inc.levy):
            raise NumericalFailure(f"transform undefined: gamma={gamma} outside cumulant domain")
        D = 1.0 + gamma * inc.c - cumulant(inc.levy, gamma)
        if D <= 0:
            raise NumericalFailure(f"transform undefined: denominator {D} <= 0")
        drift = inc.c - cumulant_deriv(inc.levy, gamma, 1)
        if order == 1:
            return drift / D**2
        kpp = cumulant_deriv(inc.levy, gamma, 2)
        return kpp / D**2 + 2.0 * drift**2 / D**3
    if isinstance(inc, Power2Increment):
        u = gamma
        zeta = 1.0 / (1.0 + inc.sigma2 * u / 2.0)
        dzeta = -(inc.sigma2 / 2.0) * zeta**2
        L = _laplace_integrated_tail(inc.jumps, u, 0)
        dL = -_laplace_integrated_tail(inc.jumps, u, 1)
        if order == 1:
            return -(dL * zeta + L * dzeta)
        d2zeta = 2.0 * (inc.sigma2 / 2.0) ** 2 * zeta**3
        d2L = _laplace_integrated_tail(inc.jumps, u, 2)
        return d2L * zeta + 2.0 * dL * dzeta + L * d2zeta
    if isinstance(inc, ConstantIncrement):
        return inc.value**order * math.exp(-gamma * inc.value)
    raise ValidationError(f"unknown increment law {type(inc).__name__}")
