"""Named model presets wiring dispersion, pool, wave, and simulation choices."""
from __future__ import annotations

from dataclasses import dataclass

from .dispersion import SpeedDecayResult, brownian_dispersion, gamma_from_speed_bs, solve_gamma_power2
from .distributions import (
    Brownian,
    CompoundPoisson,
    Deterministic,
    Exponential,
    IncrementLaw,
    JumpLaw,
    LevySpec,
    NoLevy,
    Power2Increment,
    SyncIncrement,
)
from .errors import ValidationError
from .particles import ParticleSystemConfig


@dataclass(frozen=True)
class Preset:
    name: str
    mechanism: str                  # sync | bs | power2
    orientation: str                # sync-right | power2
    jumps: JumpLaw | None = None
    levy: LevySpec = NoLevy()
    jump_rate: float = 0.0          # independent-jump rate of the bs mechanism
    copy_rate: float = 1.0
    sigma2: float = 0.0             # power2 diffusion coefficient
    speed: float | None = None      # requested speed; None means model-determined

    def dispersion(self) -> SpeedDecayResult:
        if self.mechanism == "power2":
            return solve_gamma_power2(self.jumps, self.sigma2)
        if isinstance(self.levy, Brownian):
            return brownian_dispersion(self.levy.sigma2, "from_speed", c=self.speed)
        return gamma_from_speed_bs(self.speed, self.jump_rate, self.jumps)

    def increment(self) -> IncrementLaw:
        if self.mechanism == "power2":
            return Power2Increment(self.jumps, self.sigma2)
        if self.mechanism == "bs" and self.jump_rate > 0:
            # the bs particle system carries its jumps explicitly, but the frame
            # increment sees them as a compound Poisson displacement
            return SyncIncrement(CompoundPoisson(self.jump_rate, self.jumps), self.speed)
        return SyncIncrement(self.levy, self.speed)

    def particle_config(self, n_particles: int, horizon: float, seed, **kwargs) -> ParticleSystemConfig:
        if self.mechanism == "power2":
            levy = Brownian(self.sigma2) if self.sigma2 > 0 else NoLevy()
        else:
            levy = self.levy
        return ParticleSystemConfig(
            n_particles=n_particles,
            mechanism=self.mechanism,
            horizon=horizon,
            jumps=self.jumps,
            levy=levy,
            jump_rate=self.jump_rate,
            copy_rate=self.copy_rate,
            seed=seed,
            **kwargs,
        )


PRESETS = {
    # power-of-2 with unit-mean exponential jumps, no diffusion: gamma = 1, c = 1
    "power2-exp": Preset("power2-exp", "power2", "power2", jumps=Exponential(1.0)),
    # power-of-2 with unit point-mass jumps and Brownian diffusion
    "power2-det": Preset("power2-det", "power2", "power2", jumps=Deterministic(1.0), sigma2=1.0),
    # copying plus independent exponential jumps, supercritical speed 4.5 (gamma = 1/3)
    "bs-exp": Preset("bs-exp", "bs", "sync-right", jumps=Exponential(1.0),
                     jump_rate=1.0, speed=4.5),
    # Brownian synchronisation, supercritical pair (gamma = 1, c = 1.5)
    "fkpp-brownian": Preset("fkpp-brownian", "sync", "sync-right", levy=Brownian(1.0), speed=1.5),
    # pure copying without diffusion: one-parameter family, pick gamma = c = 1
    "pure-copy": Preset("pure-copy", "sync", "sync-right", speed=1.0),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
