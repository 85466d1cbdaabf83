"""Seeded episode-initialization sampler.

Every draw comes from ``numpy.random.Generator(PCG64(seed)).random()``;
uniform and triangular values are built from those doubles by explicit
formulas, so output depends only on the PCG64 bit stream, which numpy keeps
stable across versions and platforms.  Fields are drawn in the order of
``FIELDS``; changing that order changes every sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

GENERATOR = "numpy.random.PCG64"
N_MOTORS = 12
POLICY_DT = 0.02

# (name, number of components)
FIELDS = (
    ("payload_mass", 1),
    ("com_displacement", 3),
    ("external_force", 3),
    ("ground_friction", 1),
    ("init_joint_scale", N_MOTORS),
    ("system_delay", 1),
    ("motor_strength_scale", N_MOTORS),
    ("init_motor_temp", N_MOTORS),
    ("ambient_temp", 1),
)


@dataclass(frozen=True)
class RandomizationRanges:
    payload_mass: tuple = (0.0, 4.0)
    com_displacement: tuple = (-0.1, 0.1)
    external_force: tuple = (-30.0, 30.0)
    ground_friction: tuple = (0.2, 1.25)
    init_joint_scale: tuple = (0.5, 1.5)
    system_delay_steps: tuple = (0.0, 3.0)  # multiples of policy_dt
    motor_strength_scale: tuple = (0.8, 1.2)
    init_motor_temp_offset: tuple = (-25.0, 10.0)  # relative to T_max
    ambient_temp: tuple = (0.0, 35.0)
    T_max: float = 60.0
    policy_dt: float = POLICY_DT
    temp_mode: str = "uniform"  # or "triangular": peak at T_max

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (tuple, list)):
                lo, hi = (float(x) for x in v)
                if not lo <= hi:
                    raise ValueError(f"randomization.{f.name}: min {lo} > max {hi}")
                object.__setattr__(self, f.name, (lo, hi))
        if self.temp_mode not in ("uniform", "triangular"):
            raise ValueError(f"randomization.temp_mode: unknown mode {self.temp_mode!r}")
        if self.temp_mode == "triangular":
            lo, hi = self.bounds("init_motor_temp")
            if not lo <= self.T_max <= hi:
                raise ValueError("triangular temperature mode needs T_max inside the temperature range")
        if not self.policy_dt > 0:
            raise ValueError("randomization.policy_dt must be > 0")

    def bounds(self, name):
        """Absolute (min, max) for a sampled field."""
        if name == "system_delay":
            lo, hi = self.system_delay_steps
            return lo * self.policy_dt, hi * self.policy_dt
        if name == "init_motor_temp":
            lo, hi = self.init_motor_temp_offset
            return self.T_max + lo, self.T_max + hi
        return getattr(self, name)

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k not in ("schema_version", "enabled")}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"randomization: unknown fields {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class SampledEpisodeConfig:
    seed: int
    payload_mass: float
    com_displacement: np.ndarray
    external_force: np.ndarray
    ground_friction: float
    init_joint_scale: np.ndarray
    system_delay: float
    motor_strength_scale: np.ndarray
    init_motor_temp: np.ndarray
    ambient_temp: float
    generator: str = field(default=GENERATOR)

    def to_record(self):
        out = {"seed": self.seed, "generator": self.generator}
        for name, _ in FIELDS:
            v = getattr(self, name)
            out[name] = v.tolist() if isinstance(v, np.ndarray) else float(v)
        return out


def _triangular(u, lo, mode, hi):
    # inverse CDF of the triangular distribution
    if hi == lo:
        return lo
    c = (mode - lo) / (hi - lo)
    if u < c:
        return lo + math.sqrt(u * (hi - lo) * (mode - lo))
    return hi - math.sqrt((1.0 - u) * (hi - lo) * (hi - mode))


def sample_episode(ranges, seed):
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    values = {}
    for name, count in FIELDS:
        lo, hi = ranges.bounds(name)
        u = rng.random(count)
        if name == "init_motor_temp" and ranges.temp_mode == "triangular":
            v = np.array([_triangular(x, lo, ranges.T_max, hi) for x in u])
        else:
            v = lo + (hi - lo) * u
        # guard the closed interval against lo + (hi - lo) * u rounding past hi
        v = np.clip(v, lo, hi)
        values[name] = float(v[0]) if count == 1 else v
    return SampledEpisodeConfig(seed=int(seed), **values)
