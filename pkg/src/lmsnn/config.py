"""Parameter containers and validation for simulations.

All times are in milliseconds, voltages in mV, rates in Hz. Conductances are
dimensionless multiples of the leak conductance, so the membrane equation
stays unit-free apart from voltage and time.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


class ConfigError(ValueError):
    """Raised when a parameter set violates a structural constraint."""


@dataclass(frozen=True)
class LifParams:
    """Conductance-based leaky integrate-and-fire neuron constants."""

    v_rest: float = -65.0
    v_reset: float = -60.0
    v_thresh_base: float = -52.0
    tau_v: float = 100.0
    refractory: float = 5.0
    e_exc: float = 0.0
    e_inh: float = -100.0
    tau_ge: float = 1.0
    tau_gi: float = 2.0
    theta_plus: float = 0.05
    tau_theta: float = 1.0e7

    def validate(self) -> None:
        if not (self.v_reset < self.v_thresh_base):
            raise ConfigError(
                f"v_reset must lie below v_thresh_base, got {self.v_reset} >= {self.v_thresh_base}"
            )
        if not (self.v_rest < self.v_thresh_base):
            raise ConfigError(
                f"v_rest must lie below v_thresh_base, got {self.v_rest} >= {self.v_thresh_base}"
            )
        for name in ("tau_v", "tau_ge", "tau_gi", "tau_theta"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.refractory < 0.0:
            raise ConfigError("refractory must be non-negative")
        if self.theta_plus < 0.0:
            raise ConfigError("theta_plus must be non-negative")
        if not (self.e_inh < self.v_rest < self.e_exc):
            raise ConfigError(
                "reversal potentials must bracket the resting potential "
                f"(e_inh={self.e_inh}, v_rest={self.v_rest}, e_exc={self.e_exc})"
            )


@dataclass(frozen=True)
class StdpParams:
    """Trace-based pair STDP with multiplicative soft bounds.

    Potentiation on a postsynaptic spike moves w toward w_max scaled by the
    presynaptic trace; depression on a presynaptic spike shrinks w scaled by
    the postsynaptic trace. eta_post >> eta_pre keeps learning potentiation
    dominated, matching the classic unsupervised-digit setup.
    """

    eta_post: float = 0.01
    eta_pre: float = 1.0e-4
    tau_pre: float = 20.0
    tau_post: float = 20.0
    w_max: float = 1.0
    norm_sum: float = 78.4

    def validate(self) -> None:
        if self.w_max <= 0.0:
            raise ConfigError("w_max must be positive")
        for name in ("tau_pre", "tau_post"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        for name in ("eta_post", "eta_pre"):
            eta = getattr(self, name)
            if not (0.0 <= eta <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {eta}")
        if self.norm_sum <= 0.0:
            raise ConfigError("norm_sum must be positive")


def _multiple_of(duration: float, dt: float) -> bool:
    steps = round(duration / dt)
    return steps >= 0 and abs(steps * dt - duration) < 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Full simulation configuration: integration grid, encoding, neuron and
    synapse constants.

    dt divides both durations exactly so presentations always run an integer
    number of steps. rest_duration may be zero (a no-op rest).
    """

    dt: float = 0.5
    present_duration: float = 350.0
    rest_duration: float = 150.0
    rate_scale: float = 0.25
    rate_offset: float = 0.0
    min_spikes: int = 5
    retry_rate_boost: float = 32.0
    max_retries: int = 5
    seed: int = 0
    lif: LifParams = dataclasses.field(default_factory=LifParams)
    stdp: StdpParams = dataclasses.field(default_factory=StdpParams)

    def validate(self) -> None:
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.present_duration <= 0.0 or not _multiple_of(self.present_duration, self.dt):
            raise ConfigError(
                f"present_duration must be a positive multiple of dt, got "
                f"{self.present_duration} with dt={self.dt}"
            )
        if self.rest_duration < 0.0 or not _multiple_of(self.rest_duration, self.dt):
            raise ConfigError(
                f"rest_duration must be a non-negative multiple of dt, got "
                f"{self.rest_duration} with dt={self.dt}"
            )
        if self.rate_scale < 0.0:
            raise ConfigError("rate_scale must be non-negative")
        if self.rate_offset < 0.0:
            raise ConfigError("rate_offset must be non-negative")
        if self.min_spikes < 0:
            raise ConfigError("min_spikes must be non-negative")
        if self.retry_rate_boost < 0.0:
            raise ConfigError("retry_rate_boost must be non-negative")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        self.lif.validate()
        self.stdp.validate()

    @property
    def present_steps(self) -> int:
        return round(self.present_duration / self.dt)

    @property
    def rest_steps(self) -> int:
        return round(self.rest_duration / self.dt)

    def replace(self, **kwargs) -> "SimConfig":
        cfg = dataclasses.replace(self, **kwargs)
        cfg.validate()
        return cfg


def config_to_dict(cfg: SimConfig) -> dict:
    """Flatten a SimConfig into plain JSON-serializable nesting."""
    return dataclasses.asdict(cfg)


def config_from_dict(payload: dict) -> SimConfig:
    lif = LifParams(**payload.get("lif", {}))
    stdp = StdpParams(**payload.get("stdp", {}))
    scalar = {k: v for k, v in payload.items() if k not in ("lif", "stdp")}
    cfg = SimConfig(lif=lif, stdp=stdp, **scalar)
    cfg.validate()
    return cfg
