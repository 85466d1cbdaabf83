"""Locomotion reward terms, the CBF motor-temperature penalty, and the gamma bound."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

TERM_NAMES = (
    "lin_vel_tracking",
    "ang_vel_tracking",
    "lin_vel_z",
    "ang_vel_xy",
    "orientation",
    "joint_acc",
    "termination",
    "body_height",
    "foot_clearance",
    "action_rate",
    "smoothness",
    "motor_temperature",
)

DEFAULT_WEIGHTS = {
    "lin_vel_tracking": 1.0,
    "ang_vel_tracking": 0.8,
    "lin_vel_z": -2.0,
    "ang_vel_xy": -0.05,
    "orientation": -0.2,
    "joint_acc": -2.5e-7,
    "termination": -200.0,
    "body_height": -1.0,
    "foot_clearance": -0.01,
    "action_rate": -0.01,
    "smoothness": -0.01,
    "motor_temperature": 2.0,
}

# worst-case ambient for the gamma bound: top of the randomized ambient range
WORST_CASE_AMBIENT = 35.0


@dataclass(frozen=True)
class RewardConfig:
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    sigma: float = 0.25
    h_target: float = 0.3
    pz_target: float = -0.2
    T_max: float = 60.0
    clip_min: float = 55.0
    clip_max: float = 65.0
    gamma_T: float = 0.35

    def __post_init__(self):
        w = dict(DEFAULT_WEIGHTS)
        unknown = set(self.weights) - set(DEFAULT_WEIGHTS)
        if unknown:
            raise ValueError(f"reward.weights: unknown terms {sorted(unknown)}")
        w.update({k: float(v) for k, v in self.weights.items()})
        object.__setattr__(self, "weights", w)
        if not self.sigma > 0:
            raise ValueError("reward.sigma must be > 0")
        if not self.clip_min <= self.T_max <= self.clip_max:
            raise ValueError("reward: need clip_min <= T_max <= clip_max")
        if not self.gamma_T > 0:
            raise ValueError("reward.gamma_T must be > 0")

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k != "schema_version"}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"reward: unknown fields {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


_VEC_LENGTHS = {
    "cmd_lin_vel": 3,
    "lin_vel": 3,
    "ang_vel": 3,
    "gravity": 3,
    "joint_pos": 12,
    "joint_vel": 12,
    "joint_acc": 12,
    "temperatures": 12,
    "temp_rate": 12,
    "action": 12,
    "prev_action": 12,
    "prev_prev_action": 12,
    "foot_heights": 4,
    "foot_xy_speed": 4,
    "external_force": 3,
}


@dataclass(frozen=True)
class RobotSnapshot:
    """One policy tick of robot state, in the base frame."""

    cmd_lin_vel: np.ndarray
    cmd_yaw_rate: float
    lin_vel: np.ndarray
    ang_vel: np.ndarray
    gravity: np.ndarray
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    joint_acc: np.ndarray
    temperatures: np.ndarray
    temp_rate: np.ndarray
    action: np.ndarray
    prev_action: np.ndarray
    prev_prev_action: np.ndarray
    base_height: float
    foot_heights: np.ndarray
    foot_xy_speed: np.ndarray
    external_force: np.ndarray
    terminated: bool = False

    def __post_init__(self):
        for name, n in _VEC_LENGTHS.items():
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (n,):
                raise ValueError(f"snapshot.{name}: expected {n} entries, got shape {v.shape}")
            object.__setattr__(self, name, v)
        if abs(np.linalg.norm(self.gravity) - 1.0) > 1e-6:
            raise ValueError("snapshot.gravity must be a unit vector")

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k != "schema_version"}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"snapshot: unknown fields {sorted(unknown)}")
        missing = known - set(data) - {"terminated"}
        if missing:
            raise ValueError(f"snapshot: missing fields {sorted(missing)}")
        return cls(**data)

    @classmethod
    def nominal(cls, **overrides):
        """Standing still on target height, level, cold motors, no command."""
        base = dict(
            cmd_lin_vel=np.zeros(3),
            cmd_yaw_rate=0.0,
            lin_vel=np.zeros(3),
            ang_vel=np.zeros(3),
            gravity=np.array([0.0, 0.0, -1.0]),
            joint_pos=np.zeros(12),
            joint_vel=np.zeros(12),
            joint_acc=np.zeros(12),
            temperatures=np.full(12, 35.0),
            temp_rate=np.zeros(12),
            action=np.zeros(12),
            prev_action=np.zeros(12),
            prev_prev_action=np.zeros(12),
            base_height=0.3,
            foot_heights=np.full(4, -0.2),
            foot_xy_speed=np.zeros(4),
            external_force=np.zeros(3),
            terminated=False,
        )
        base.update(overrides)
        return cls(**base)


def clip_temperatures(T, cfg):
    return np.clip(np.asarray(T, dtype=float), cfg.clip_min, cfg.clip_max)


def cbf_margin(temp_rate, T_clip, cfg):
    """-dT/dt + gamma_T * (T_max - T_clip); nonnegative where the barrier condition holds."""
    temp_rate = np.asarray(temp_rate, dtype=float)
    T_clip = np.asarray(T_clip, dtype=float)
    if temp_rate.shape != T_clip.shape:
        raise ValueError("temp_rate and T_clip must have equal shapes")
    return -temp_rate + cfg.gamma_T * (cfg.T_max - T_clip)


def thermal_reward_term(margins, cfg):
    """Weighted L1 norm of the violated margins (<= 0; 0 iff all margins >= 0).

    Accepts a (..., n_motors) array; the reduction runs over the last axis.
    """
    violation = np.maximum(0.0, -np.asarray(margins, dtype=float))
    return cfg.weights["motor_temperature"] * -np.sum(violation, axis=-1)


def temperature_rate(T_now, T_prev, h):
    """Backward-difference estimate of dT/dt fed to the thermal reward."""
    return (np.asarray(T_now, dtype=float) - np.asarray(T_prev, dtype=float)) / h


def reward_terms(snap, cfg):
    """Unweighted value of every reward row, keyed by TERM_NAMES."""
    lin_err = snap.cmd_lin_vel[:2] - snap.lin_vel[:2]
    yaw_err = snap.cmd_yaw_rate - snap.ang_vel[2]
    margins = cbf_margin(snap.temp_rate, clip_temperatures(snap.temperatures, cfg), cfg)
    return {
        "lin_vel_tracking": float(np.exp(-np.dot(lin_err, lin_err) / cfg.sigma)),
        "ang_vel_tracking": float(np.exp(-(yaw_err**2) / cfg.sigma)),
        "lin_vel_z": float(snap.lin_vel[2] ** 2),
        "ang_vel_xy": float(np.sum(snap.ang_vel[:2] ** 2)),
        # horizontal part of projected gravity; the full unit vector would be constant
        "orientation": float(np.sum(snap.gravity[:2] ** 2)),
        "joint_acc": float(np.dot(snap.joint_acc, snap.joint_acc)),
        "termination": 1.0 if snap.terminated else 0.0,
        "body_height": float((cfg.h_target - snap.base_height) ** 2),
        "foot_clearance": float(np.sum((cfg.pz_target - snap.foot_heights) ** 2 * np.abs(snap.foot_xy_speed))),
        "action_rate": float(np.sum((snap.action - snap.prev_action) ** 2)),
        "smoothness": float(np.sum((snap.action - 2 * snap.prev_action + snap.prev_prev_action) ** 2)),
        "motor_temperature": float(-np.sum(np.maximum(0.0, -margins))),
    }


def total_reward(snap, cfg):
    """Return ``(total, breakdown)``; breakdown holds each weighted term."""
    raw = reward_terms(snap, cfg)
    breakdown = {name: cfg.weights[name] * raw[name] + 0.0 for name in TERM_NAMES}  # no -0.0
    return float(sum(breakdown.values())), breakdown


def worst_case_temperatures(network, cfg, ambient=WORST_CASE_AMBIENT):
    """All non-environment nodes at clip_max, the environment at ``ambient``."""
    T = np.full(network.n, cfg.clip_max, dtype=float)
    T[network.env_index] = ambient
    return T


def free_rates(mat, T):
    """One-step zero-input rate (A(h) - I) T / h."""
    return (mat.A @ T - T) / mat.h


def max_feasible_gamma(mat, network, cfg, ambient=WORST_CASE_AMBIENT):
    """Largest gamma_T for which a motor at clip_max with zero input meets the barrier condition.

    With every non-env node at clip_max and zero input, motor ``i`` cools at
    rate ``r_i``; the condition ``-r_i + gamma (T_max - clip_max) >= 0``
    holds for every motor iff ``gamma <= min_i (-r_i) / (clip_max - T_max)``.
    Returns 0 when some motor does not cool at all.
    """
    gap = cfg.clip_max - cfg.T_max
    if not gap > 0:
        raise ValueError("max_feasible_gamma needs clip_max > T_max")
    T = worst_case_temperatures(network, cfg, ambient)
    motors = list(network.motor_indices)
    r = free_rates(mat, T)[motors]
    if np.any(r >= 0):
        return 0.0
    gamma = float(np.min(-r) / gap)
    margins = -r + gamma * (cfg.T_max - T[motors])
    if np.min(margins) < -1e-9:  # pragma: no cover - algebraic identity
        raise RuntimeError(f"gamma bound failed its own check (min margin {np.min(margins)})")
    return gamma
