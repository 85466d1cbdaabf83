"""Pure-Python/numpy implementations of the hot loops.

Must stay semantically identical to ``_kernels.pyx``; the test suite runs
both and compares them.
"""

import math

import numpy as np

NAME = "python"


def propagate(A, B, x0, U):
    """Rows ``X[k+1] = A @ X[k] + B @ U[k]`` for every row of ``U``."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    U = np.ascontiguousarray(U, dtype=float)
    n_steps = U.shape[0]
    X = np.empty((n_steps + 1, A.shape[0]))
    X[0] = x0
    x = X[0]
    for k in range(n_steps):
        x = A @ x + B @ U[k]
        X[k + 1] = x
    return X


def endurance(A, B, x0, demand, aux, motors, t_max, gamma, h, guard,
              throttled, stop_on_overheat):
    """Thermal tick loop shared by the baseline and throttled controllers.

    ``demand`` holds the unscaled per-motor Joule heat of every tick.  A
    torque scale ``s`` multiplies that heat by ``s**2``.  Returns
    ``(X, scales, n_done)``: node temperatures for ticks 0..n_done, the scale
    applied at each tick, and the number of ticks actually run.
    """
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    demand = np.ascontiguousarray(demand, dtype=float)
    aux = np.ascontiguousarray(aux, dtype=float)
    motors = np.asarray(motors, dtype=np.intp)
    n_ticks = demand.shape[0]
    X = np.empty((n_ticks + 1, A.shape[0]))
    scales = np.ones(n_ticks)
    X[0] = x0
    x = X[0].copy()
    Bm = np.ascontiguousarray(B[:, motors])
    A_rows = A[motors]
    base = B @ aux
    limit = t_max - guard
    if stop_on_overheat and np.any(x[motors] >= t_max):
        return X[:1], scales[:0], 0
    n_done = n_ticks
    for k in range(n_ticks):
        Bd = Bm @ demand[k]
        s = 1.0
        if throttled:
            free = A_rows @ x + base[motors]
            s2 = 1.0
            for r in range(len(motors)):
                d = Bd[motors[r]]
                if d <= 0.0:
                    continue
                T = x[motors[r]]
                ratio = (gamma * (limit - T) * h - (free[r] - T)) / d
                if ratio < s2:
                    s2 = ratio
            s = 0.0 if s2 <= 0.0 else (math.sqrt(s2) if s2 < 1.0 else 1.0)
        scales[k] = s
        x = A @ x + base + (s * s) * Bd
        X[k + 1] = x
        if stop_on_overheat and np.any(x[motors] >= t_max):
            n_done = k + 1
            break
    return X[: n_done + 1], scales[:n_done], n_done
