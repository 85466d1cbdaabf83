"""Inner-loop torques to thermal-rate heat: PD torques, window RMS, Joule heat."""

from dataclasses import dataclass, field

import numpy as np

from .network import HeatInput

N_MOTORS = 12
INNER_RATE_HZ = 200.0
THERMAL_RATE_HZ = 50.0
DEFAULT_WINDOW = int(INNER_RATE_HZ / THERMAL_RATE_HZ)  # 4 samples


@dataclass(frozen=True)
class TorqueWindow:
    samples: np.ndarray  # (n_samples, n_motors), N*m
    inner_dt: float = 1.0 / INNER_RATE_HZ

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError("a torque window needs at least one sample row")
        object.__setattr__(self, "samples", s)


def _per_joint(value, n):
    v = np.asarray(value, dtype=float)
    return np.full(n, float(v)) if v.ndim == 0 else v


@dataclass(frozen=True)
class ActuationParams:
    kp: np.ndarray = field(default_factory=lambda: np.full(N_MOTORS, 20.0))
    kd: np.ndarray = field(default_factory=lambda: np.full(N_MOTORS, 0.5))
    torque_limit: np.ndarray = field(default_factory=lambda: np.full(N_MOTORS, 33.5))
    nominal_angles: np.ndarray = field(
        default_factory=lambda: np.tile([0.0, 0.9, -1.8], 4).astype(float)
    )
    heat_coeff: np.ndarray = field(default_factory=lambda: np.full(N_MOTORS, 0.12))

    def __post_init__(self):
        n = len(np.atleast_1d(self.nominal_angles))
        for name in ("kp", "kd", "torque_limit", "nominal_angles", "heat_coeff"):
            object.__setattr__(self, name, _per_joint(getattr(self, name), n))
            if getattr(self, name).shape != (n,):
                raise ValueError(f"actuation.{name}: expected {n} entries")
        if np.any(self.kp < 0) or np.any(self.kd < 0):
            raise ValueError("actuation gains kp, kd must be >= 0")
        if np.any(self.torque_limit <= 0):
            raise ValueError("actuation.torque_limit must be > 0")
        if np.any(self.heat_coeff < 0):
            raise ValueError("actuation.heat_coeff must be >= 0")

    @classmethod
    def from_dict(cls, data):
        keys = ("kp", "kd", "torque_limit", "nominal_angles", "heat_coeff")
        unknown = set(data) - set(keys)
        if unknown:
            raise ValueError(f"actuation: unknown fields {sorted(unknown)}")
        return cls(**{k: data[k] for k in keys if k in data})

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("kp", "kd", "torque_limit", "nominal_angles", "heat_coeff")}


def torque_rms(window):
    """Per-motor RMS over the samples actually present in the window."""
    s = window.samples if isinstance(window, TorqueWindow) else TorqueWindow(window).samples
    return np.sqrt(np.mean(s * s, axis=0))


def joule_heat(rms, params):
    """heat = heat_coeff * rms**2; heat_coeff absorbs R_d over the squared torque constant."""
    rms = np.asarray(rms, dtype=float)
    if np.any(rms < 0):
        raise ValueError("RMS torque cannot be negative")
    return params.heat_coeff * rms * rms


def assemble_heat_input(joule, network):
    joule = np.asarray(joule, dtype=float)
    motors = network.motor_indices
    if joule.shape != (len(motors),):
        raise ValueError(f"expected {len(motors)} motor heat values, got shape {joule.shape}")
    watts = network.aux_heat.copy()
    watts[list(motors)] += joule
    watts[network.env_index] = 0.0
    return HeatInput(watts)


def pd_torque(target, pos, vel, params):
    target, pos, vel = (np.asarray(v, dtype=float) for v in (target, pos, vel))
    if not (target.shape == pos.shape == vel.shape == params.kp.shape):
        raise ValueError("target, pos, vel and gains must have equal lengths")
    tau = params.kp * (target - pos) - params.kd * vel
    return np.clip(tau, -params.torque_limit, params.torque_limit)
