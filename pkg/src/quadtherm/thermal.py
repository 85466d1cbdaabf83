"""Discrete-time thermal dynamics: discretization, stepping, simulation, steady state."""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .linalg import expm
from .network import HeatInput, ThermalState, build_generator

EXACT = "exact"
EULER = "euler"


class EulerStabilityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SystemMatrices:
    """x(k+1) = A x(k) + B u(k), inputs held constant over each interval of length h."""

    A: np.ndarray
    B: np.ndarray
    h: float
    method: str
    env_index: int
    unstable: bool = False


def euler_stability_bound(gen):
    rate = float(np.max(np.abs(np.diag(gen.conduction))))
    return math.inf if rate == 0 else 2.0 / rate


def discretize(gen, h, method=EXACT):
    if not h > 0:
        raise ValueError(f"sampling interval must be > 0, got {h}")
    n = gen.conduction.shape[0]
    env = gen.env_index
    if method == EXACT:
        # exp([[L, G], [0, 0]] h) = [[A, B], [0, I]]; no inversion of the singular L
        M = np.zeros((2 * n, 2 * n))
        M[:n, :n] = gen.conduction * h
        M[:n, n:] = gen.input_map * h
        E = expm(M)
        A, B = E[:n, :n].copy(), E[:n, n:].copy()
        unstable = False
    elif method == EULER:
        A = np.eye(n) + gen.conduction * h
        B = gen.input_map * h
        unstable = h > euler_stability_bound(gen)
        if unstable:
            warnings.warn(
                f"euler step h={h} exceeds the stability bound {euler_stability_bound(gen):.6g}",
                EulerStabilityWarning,
                stacklevel=2,
            )
    else:
        raise ValueError(f"unknown discretization method {method!r}")
    A[env, :] = 0.0
    A[env, env] = 1.0
    B[env, :] = 0.0
    return SystemMatrices(A, B, float(h), method, env, unstable)


def matrices_for(network, h, method=EXACT):
    return discretize(build_generator(network), h, method)


def step(mat, state, heat):
    T = state.temperatures
    u = np.asarray(heat.watts if isinstance(heat, HeatInput) else heat, dtype=float)
    n = mat.A.shape[0]
    if T.shape != (n,) or u.shape != (n,):
        raise ValueError(
            f"dimension mismatch: matrices are {n}x{n}, state has {T.shape}, input has {u.shape}"
        )
    return ThermalState(kernels.propagate(mat.A, mat.B, T, u[None, :])[1], state.time + mat.h)


def single_node_analytic(C, R, R_d, T_E, T0, current, t):
    """Closed-form temperature of one motor node heated by ``current**2 * R_d``."""
    if not (C > 0 and R > 0):
        raise ValueError("C and R must be positive")
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    decay = np.exp(-np.asarray(t, dtype=float) / (R * C))
    return T_E + current**2 * R_d * R * (1.0 - decay) + (T0 - T_E) * decay


def steady_state(network, heat):
    """Temperatures with zero net balance at every free node (env held at ambient)."""
    gen = build_generator(network)
    env = gen.env_index
    u = np.asarray(heat.watts if isinstance(heat, HeatInput) else heat, dtype=float)
    free = [k for k in range(network.n) if k != env]
    L = gen.conduction[np.ix_(free, free)]
    rhs = -(gen.conduction[free, env] * network.ambient + gen.input_map[free, free] * u[free])
    try:
        x = np.linalg.solve(L, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - connected networks are nonsingular
        raise RuntimeError("reduced conduction matrix is singular") from exc
    T = np.empty(network.n)
    T[free] = x
    T[env] = network.ambient
    return T


@dataclass(frozen=True)
class SimulationTrace:
    """States at t = 0, h, 2h, ...; ``inputs[k]`` is the heat held over [t_k, t_k + h).

    The last row of ``inputs`` repeats the last applied input (the
    schedule's value at t = 0 for a zero-length trace).
    """

    times: np.ndarray
    temperatures: np.ndarray
    inputs: np.ndarray
    extra: dict | None = None

    def __len__(self):
        return len(self.times)

    def state(self, k):
        return ThermalState(self.temperatures[k], float(self.times[k]))

    def header(self):
        n = self.temperatures.shape[1]
        cols = ["t"] + [f"T_{i}" for i in range(n)] + [f"Q_{i}" for i in range(n)]
        if self.extra:
            cols += list(self.extra)
        return cols

    def to_csv(self, fmt="%.12g"):
        """CSV text: t, T_0..T_{n-1}, Q_0..Q_{n-1}, then any extra columns."""
        cols = [self.times[:, None], self.temperatures, self.inputs]
        if self.extra:
            cols += [np.asarray(v, dtype=float).reshape(len(self.times), -1) for v in self.extra.values()]
        data = np.hstack(cols)
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        np.savetxt(buf, data, fmt=fmt, delimiter=",")
        return buf.getvalue()


def n_steps_for(horizon, h):
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if not h > 0:
        raise ValueError("h must be > 0")
    return int(math.floor(horizon / h + 1e-9))


def simulate(network, input_schedule, T0=None, horizon=1.0, h=0.02, method=EXACT):
    """Step the network over ``horizon`` seconds.

    ``input_schedule`` maps a time to a HeatInput (or watts vector), or is a
    constant HeatInput.  It is sampled at the start of each interval.
    """
    from .network import initial_state

    n_steps = n_steps_for(horizon, h)
    mat = matrices_for(network, h, method)
    state = T0 if isinstance(T0, ThermalState) else initial_state(network, T0)
    times = state.time + h * np.arange(n_steps + 1)

    def watts_at(t):
        v = input_schedule(t) if callable(input_schedule) else input_schedule
        return np.asarray(v.watts if isinstance(v, HeatInput) else v, dtype=float)

    U = np.empty((n_steps + 1, network.n))
    for k in range(n_steps + 1):
        U[k] = watts_at(times[k]) if k < n_steps or n_steps == 0 else U[k - 1]
    U[:, network.env_index] = 0.0
    X = kernels.propagate(mat.A, mat.B, state.temperatures, U[:n_steps])
    return SimulationTrace(times, X, U)
