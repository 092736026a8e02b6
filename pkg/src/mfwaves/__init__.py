"""Travelling waves of mean-field interacting particle systems.

Construction goes through distributional fixed points: a dispersion relation
pins the decay rate gamma for a given speed, a sample pool realizes the
martingale limit solving the linear smoothing recursion, the wave profile is
an exponential mixture over the pool, and an event-driven N-particle
simulator cross-checks speed and shape.
"""

__version__ = "0.1.0"

from .distributions import (  # noqa: F401
    Brownian,
    CompoundPoisson,
    ConstantIncrement,
    Deterministic,
    Exponential,
    GammaLaw,
    NoLevy,
    Power2Increment,
    RngStream,
    SyncIncrement,
    Tabulated,
    integrated_tail,
    laplace_A,
    mgf,
    sample_A,
    sample_Y,
)
from .dispersion import (  # noqa: F401
    Regime,
    SpeedDecayResult,
    brownian_dispersion,
    critical_point_bs,
    gamma_from_speed_bs,
    regime_classify,
    solve_gamma_power2,
    speed_from_gamma_bs,
)
from .errors import NumericalFailure, ValidationError  # noqa: F401
from .smoothing import SamplePool, branching_cross_check, iterate_pool, laplace_functional_residual  # noqa: F401
from .waves import (  # noqa: F401
    Orientation,
    WaveProfile,
    profile_eval,
    sample_wave,
    tail_asymptotics,
    verify_equivalence_power2,
    verify_fixed_point_power2,
    verify_fixed_point_sync,
)
from .particles import (  # noqa: F401
    EmpiricalCDF,
    ParticleSystemConfig,
    centered_profile,
    compare_profiles,
    estimate_speed,
    simulate,
)
