"""Endurance scenarios: synthetic trot torques, CBF torque throttling, sweeps."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from ._backend import kernels
from .actuation import DEFAULT_WINDOW, ActuationParams, TorqueWindow
from .config import ConfigError, check_schema, read_json, resolve_path
from .network import JOINT_ROLES, LEGS, initial_state, load_network, network_from_dict
from .randomizer import RandomizationRanges, sample_episode
from .rewards import (
    WORST_CASE_AMBIENT,
    RewardConfig,
    cbf_margin,
    clip_temperatures,
    max_feasible_gamma,
    thermal_reward_term,
)
from .thermal import EXACT, SimulationTrace, matrices_for, n_steps_for

BASELINE = "baseline"
THROTTLED = "throttled"
CONTROLLERS = (BASELINE, THROTTLED)

# trot: diagonal pairs FL+RR and FR+RL share a phase
LEG_PHASE_OFFSET = {"FL": 0.0, "FR": 0.5, "RL": 0.5, "RR": 0.0}
SWING_FRACTION = 0.1
_TICK_CHUNK = 8192


@dataclass(frozen=True)
class GaitParams:
    step_frequency: float = 2.0
    duty_factor: float = 0.5
    base_torque_amplitude: dict = field(default_factory=lambda: {"hip": 4.0, "thigh": 10.0, "knee": 18.0})
    payload_mass: float = 0.0
    payload_torque_gain: dict = field(default_factory=lambda: {"hip": 0.5, "thigh": 1.5, "knee": 4.0})
    command_speed: float = 1.0  # reported only; does not shape the waveform

    def __post_init__(self):
        if not self.step_frequency > 0:
            raise ValueError("gait.step_frequency must be > 0")
        if not 0 < self.duty_factor < 1:
            raise ValueError("gait.duty_factor must lie in (0, 1)")
        for name in ("base_torque_amplitude", "payload_torque_gain"):
            d = getattr(self, name)
            if set(d) != set(JOINT_ROLES):
                raise ValueError(f"gait.{name} needs exactly the roles {list(JOINT_ROLES)}")
            if any(float(v) < 0 for v in d.values()):
                raise ValueError(f"gait.{name}: values must be >= 0")
        if self.payload_mass < 0:
            raise ValueError("gait.payload_mass must be >= 0")

    def role_amplitude(self, role):
        """Stance peak torque: amplitude * (1 + gain * payload / amplitude)."""
        return float(self.base_torque_amplitude[role]) + float(self.payload_torque_gain[role]) * self.payload_mass

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"gait: unknown fields {sorted(unknown)}")
        return cls(**data)


def gait_torques(gait, times):
    """Torque of every motor at each time, shape ``(len(times), 12)``."""
    times = np.asarray(times, dtype=float)
    amps = np.array([gait.role_amplitude(r) for r in JOINT_ROLES])
    out = np.empty(times.shape + (len(LEGS) * len(JOINT_ROLES),))
    duty = gait.duty_factor
    for li, leg in enumerate(LEGS):
        phase = np.mod(gait.step_frequency * times + LEG_PHASE_OFFSET[leg], 1.0)
        stance = phase < duty
        shape = np.where(
            stance,
            np.sin(np.pi * phase / duty),
            SWING_FRACTION * np.sin(np.pi * (phase - duty) / (1.0 - duty)),
        )
        out[..., 3 * li : 3 * li + 3] = shape[..., None] * amps
    return out


def synth_gait_torques(gait, t, window=DEFAULT_WINDOW, inner_dt=None, h=0.02):
    """Inner-loop samples at ``t + m * inner_dt`` for m = 0..window-1."""
    inner_dt = h / window if inner_dt is None else inner_dt
    times = t + inner_dt * np.arange(window)
    return TorqueWindow(gait_torques(gait, times), inner_dt)


def throttle_scale(temps, network, mat, demanded_heat, cfg, guard=0.0):
    """Largest torque scale in [0, 1] that keeps every motor on the barrier condition.

    Scaling every torque by ``s`` scales the Joule heat by ``s**2``.  The
    one-step predicted rate of motor ``i`` is affine in ``s**2``, so each
    motor admits ``s_i**2 = Q_allow_i / demanded_i`` and the result is the
    smallest ``s_i`` clamped to [0, 1].  ``guard`` lowers the target below
    T_max.
    """
    x = np.asarray(temps, dtype=float)
    demand = np.asarray(demanded_heat, dtype=float)
    motors = list(network.motor_indices)
    Bd = mat.B[:, motors] @ demand
    free = mat.A @ x + mat.B @ network.aux_heat
    limit = cfg.T_max - guard
    s2 = 1.0
    for i in motors:
        if Bd[i] <= 0.0:
            continue
        ratio = (cfg.gamma_T * (limit - x[i]) * mat.h - (free[i] - x[i])) / Bd[i]
        s2 = min(s2, ratio)
    if s2 <= 0.0:
        return 0.0
    return math.sqrt(s2) if s2 < 1.0 else 1.0


def first_crossing(times, values, threshold):
    """First time ``values`` reaches ``threshold``, linearly interpolated, or None.

    ``values`` may be 1-D or (n_samples, n_series); with several series the
    earliest crossing of any series is returned.
    """
    times = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if len(times) == 0:
        raise ValueError("empty trace")
    best = None
    for col in v.T:
        hit = np.flatnonzero(col >= threshold)
        if hit.size == 0:
            continue
        k = int(hit[0])
        if k == 0:
            t = times[0]
        else:
            v0, v1 = col[k - 1], col[k]
            t = times[k - 1] + (threshold - v0) / (v1 - v0) * (times[k] - times[k - 1])
        if best is None or t < best:
            best = float(t)
    return best


def time_to_threshold(trace, threshold, nodes=None):
    """First crossing of ``threshold`` by any of ``nodes`` (default: all columns)."""
    cols = trace.temperatures if nodes is None else trace.temperatures[:, list(nodes)]
    return first_crossing(trace.times, cols, threshold)


@dataclass
class EnduranceResult:
    trace: SimulationTrace
    overheat_time: float | None
    hottest_motor: int | None
    completed_horizon: bool
    controller: str = BASELINE
    scales: np.ndarray | None = None
    rms: np.ndarray | None = None  # applied per-motor RMS torque per tick
    motors: tuple = ()

    @property
    def max_motor_temperature(self):
        return float(np.max(self.trace.temperatures[:, list(self.motors)]))


def _demand_and_rms(gait, actuation, n_ticks, h, window, strength):
    rms = np.empty((n_ticks, len(actuation.heat_coeff)))
    limit = actuation.torque_limit * strength
    offsets = (h / window) * np.arange(window)
    for start in range(0, n_ticks, _TICK_CHUNK):
        stop = min(n_ticks, start + _TICK_CHUNK)
        t = h * np.arange(start, stop)
        tau = gait_torques(gait, t[:, None] + offsets[None, :])
        tau = np.clip(tau, -limit, limit)
        rms[start:stop] = np.sqrt(np.mean(tau * tau, axis=1))
    demand = actuation.heat_coeff * rms * rms
    return demand, rms


def run_endurance(network, gait, controller, horizon, h, cfg, actuation=None, T0=None,
                  window=DEFAULT_WINDOW, guard=0.1, strength=1.0, backend=None):
    """Walk the synthetic gait for ``horizon`` seconds under one controller.

    The baseline stops at the first tick any motor reaches T_max (overheat
    protection).  The throttled controller scales torques with
    ``throttle_scale`` every tick and never stops early.
    """
    if controller not in CONTROLLERS:
        raise ValueError(f"unknown controller {controller!r}; choose from {CONTROLLERS}")
    actuation = actuation or ActuationParams()
    k = backend or kernels
    n_ticks = n_steps_for(horizon, h)
    mat = matrices_for(network, h, EXACT)
    motors = np.array(network.motor_indices, dtype=np.intp)
    x0 = initial_state(network, T0).temperatures
    demand, rms = _demand_and_rms(gait, actuation, n_ticks, h, window, strength)
    aux = network.aux_heat
    throttled = controller == THROTTLED
    X, scales, n_done = k.endurance(
        mat.A, mat.B, x0, demand, aux, motors, cfg.T_max, cfg.gamma_T, h, guard,
        throttled, not throttled,
    )
    times = h * np.arange(n_done + 1)
    U = np.tile(aux, (n_done + 1, 1))
    applied_rms = rms[:n_done] * scales[:, None]
    U[:n_done, motors] += demand[:n_done] * (scales * scales)[:, None]
    if n_done > 0:
        U[n_done] = U[n_done - 1]
    rms_rows = np.vstack([applied_rms, applied_rms[-1:] if n_done else np.zeros((1, len(motors)))])
    scale_col = np.append(scales, scales[-1] if n_done else 1.0)
    extra = {"scale": scale_col}
    extra.update({f"tau_rms_{m}": rms_rows[:, m] for m in range(len(motors))})
    trace = SimulationTrace(times, X, U, extra)

    overheat = first_crossing(times, X[:, motors], cfg.T_max)
    if overheat is not None:
        k_hit = int(np.searchsorted(times, overheat, side="left"))
        k_hit = min(max(k_hit, 0), n_done)
        hottest = int(motors[np.argmax(X[k_hit, motors])])
    else:
        hottest = int(motors[np.argmax(np.max(X[:, motors], axis=0))])
    result = EnduranceResult(
        trace=trace,
        overheat_time=overheat,
        hottest_motor=hottest,
        completed_horizon=n_done == n_ticks,
        controller=controller,
        scales=scales,
        rms=applied_rms,
        motors=tuple(int(m) for m in motors),
    )
    return result


def mean_thermal_penalty(result, cfg):
    """Average weighted motor-temperature reward over the run's ticks."""
    tr = result.trace
    if len(tr) < 2:
        return 0.0
    motors = list(result.motors)
    T = tr.temperatures[:, motors]
    h = tr.times[1] - tr.times[0]
    rate = (T[1:] - T[:-1]) / h
    margins = cbf_margin(rate, clip_temperatures(T[1:], cfg), cfg)
    return float(np.mean(thermal_reward_term(margins, cfg)))


# ------------------------------------------------------------------ scenarios


@dataclass(frozen=True)
class Scenario:
    network: object
    gait: GaitParams
    actuation: ActuationParams
    controller: str
    horizon: float
    h: float
    reward: RewardConfig
    randomization: RandomizationRanges | None
    initial_temperature: object = None
    guard: float = 0.1
    raw: dict = field(default=None, repr=False, compare=False)
    base_dir: str = field(default=".", repr=False, compare=False)

    @classmethod
    def from_dict(cls, data, base_dir="."):
        check_schema(data, "scenario")
        known = {
            "schema_version", "network", "gait", "actuation", "controller", "horizon", "h",
            "reward", "randomization", "initial_temperature", "ambient", "guard", "description",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"scenario: unknown fields {sorted(unknown)}")
        try:
            ref = data.get("network", "builtin:a1_placeholder_network")
            if isinstance(ref, dict):
                net = network_from_dict(ref)
            else:
                net = load_network(resolve_path(ref, base_dir if not str(ref).startswith("builtin:") else None))
            if "ambient" in data:
                net = net.with_ambient(float(data["ambient"]))
            rand = data.get("randomization")
            ranges = None
            if rand and rand.get("enabled", False):
                ranges = RandomizationRanges.from_dict(rand)
            controller = data.get("controller", BASELINE)
            if controller not in CONTROLLERS:
                raise ConfigError(f"scenario: field 'controller' must be one of {list(CONTROLLERS)}, got {controller!r}")
            sc = cls(
                network=net,
                gait=GaitParams.from_dict(data.get("gait", {})),
                actuation=ActuationParams.from_dict(data.get("actuation", {})),
                controller=controller,
                horizon=float(data.get("horizon", 1800.0)),
                h=float(data.get("h", 0.02)),
                reward=RewardConfig.from_dict(data.get("reward", {})),
                randomization=ranges,
                initial_temperature=data.get("initial_temperature"),
                guard=float(data.get("guard", 0.1)),
                raw=copy.deepcopy(data),
                base_dir=str(base_dir),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario: {exc}") from None
        if not sc.h > 0 or sc.horizon < 0:
            raise ConfigError("scenario: need h > 0 and horizon >= 0")
        sc.check_gamma()
        return sc

    @classmethod
    def load(cls, path):
        p = resolve_path(path)
        return cls.from_dict(read_json(p), base_dir=p.parent)

    def worst_case_ambient(self):
        top = self.randomization.ambient_temp[1] if self.randomization else WORST_CASE_AMBIENT
        return max(top, self.network.ambient)

    def check_gamma(self):
        """Reject reward configs whose gamma_T exceeds the network's feasible bound."""
        mat = matrices_for(self.network, self.h, EXACT)
        g = max_feasible_gamma(mat, self.network, self.reward, self.worst_case_ambient())
        if self.reward.gamma_T > g:
            raise ConfigError(
                f"scenario: reward.gamma_T={self.reward.gamma_T} exceeds the feasible bound {g:.6g} of this network"
            )
        return g

    def with_overrides(self, overrides):
        """Copy with dotted-key overrides (e.g. ``{"gait.payload_mass": 3}``) applied to the raw config."""
        data = copy.deepcopy(self.raw)
        for key, value in overrides.items():
            node = data
            parts = key.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
                if not isinstance(node, dict):
                    raise ConfigError(f"override {key!r}: {part!r} is not an object")
            node[parts[-1]] = value
        return Scenario.from_dict(data, self.base_dir)

    def run(self, seed=None, controller=None, backend=None):
        """Run the scenario, applying seeded randomization when it is enabled."""
        net, gait, T0, strength = self.network, self.gait, self.initial_temperature, 1.0
        if self.randomization is not None and seed is not None:
            ep = sample_episode(self.randomization, seed)
            net = net.with_ambient(ep.ambient_temp)
            gait = GaitParams(**{**gait.__dict__, "payload_mass": ep.payload_mass})
            T0 = ep.init_motor_temp
            strength = ep.motor_strength_scale
        return run_endurance(
            net, gait, controller or self.controller, self.horizon, self.h, self.reward,
            actuation=self.actuation, T0=T0, guard=self.guard, strength=strength, backend=backend,
        )


SWEEP_COLUMNS = (
    "run", "variation", "seed", "controller", "payload_mass", "ambient", "overheat_time",
    "hottest_motor", "completed_horizon", "max_motor_temp", "mean_thermal_penalty",
)


def summary_row(result, cfg, n_nodes):
    final = result.trace.temperatures[-1]
    row = {
        "controller": result.controller,
        "overheat_time": result.overheat_time,
        "hottest_motor": result.hottest_motor,
        "completed_horizon": result.completed_horizon,
        "max_motor_temp": result.max_motor_temperature,
        "mean_thermal_penalty": mean_thermal_penalty(result, cfg),
    }
    row.update({f"final_T_{i}": float(final[i]) for i in range(n_nodes)})
    return row


def _sweep_one(base, index, overrides, seed):
    row = {"run": index, "variation": json.dumps(overrides, sort_keys=True), "seed": seed}
    try:
        sc = base.with_overrides(overrides)
        result = sc.run(seed=seed)
        row["payload_mass"] = sc.gait.payload_mass
        row["ambient"] = sc.network.ambient
        row.update(summary_row(result, sc.reward, sc.network.n))
        row["error"] = ""
    except Exception as exc:  # one failed run must not abort the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(base, variations, seeds=(None,), jobs=1):
    """One summary row per (variation, seed), in input order; runs may execute concurrently."""
    variations = list(variations)
    if not variations:
        raise ValueError("sweep needs at least one variation")
    seeds = list(seeds) or [None]
    tasks = [(v, s) for v in variations for s in seeds]
    if jobs <= 1:
        return [_sweep_one(base, i, v, s) for i, (v, s) in enumerate(tasks)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda a: _sweep_one(base, a[0], *a[1]), enumerate(tasks)))


def sweep_header(rows):
    n_final = max((sum(k.startswith("final_T_") for k in r) for r in rows), default=0)
    return list(SWEEP_COLUMNS) + [f"final_T_{i}" for i in range(n_final)] + ["error"]


def sweep_csv(rows):
    header = sweep_header(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        out = []
        for col in header:
            v = r.get(col)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(format(v, ".12g"))
            else:
                out.append(str(v))
        w.writerow(out)
    return buf.getvalue()


def load_variations(path):
    data = read_json(path)
    check_schema(data, "variations")
    items = data.get("variations")
    if not isinstance(items, list) or not items or not all(isinstance(v, dict) for v in items):
        raise ConfigError("variations: field 'variations' must be a nonempty list of objects")
    return items

