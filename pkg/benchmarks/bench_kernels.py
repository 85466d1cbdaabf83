"""Compare the compiled and pure-Python kernels on the hot loops.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--ticks 90000]

Reports the best-of-N wall time per kernel and backend and checks that both
backends produce the same temperatures.
"""

import argparse
import time

import numpy as np

from quadtherm._backend import available
from quadtherm.actuation import ActuationParams
from quadtherm.network import default_network, initial_state
from quadtherm.rewards import RewardConfig
from quadtherm.scenario import GaitParams, _demand_and_rms
from quadtherm.thermal import matrices_for


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--ticks", type=int, default=90_000, help="thermal ticks (90000 = 1800 s at 50 Hz)")
    args = ap.parse_args()

    h = 0.02
    net = default_network(30.0)
    mat = matrices_for(net, h)
    x0 = initial_state(net, 30.0).temperatures
    cfg = RewardConfig()
    demand, _ = _demand_and_rms(GaitParams(payload_mass=3.0), ActuationParams(), args.ticks, h, 4, 1.0)
    motors = np.arange(12, dtype=np.intp)
    U = np.tile(net.aux_heat, (args.ticks, 1))
    U[:, :12] += demand

    cases = {
        "propagate": lambda k: k.propagate(mat.A, mat.B, x0, U),
        "endurance/throttled": lambda k: k.endurance(mat.A, mat.B, x0, demand, net.aux_heat, motors,
                                                     cfg.T_max, cfg.gamma_T, h, 0.1, True, False)[0],
    }
    backends = available()
    print(f"{args.ticks} ticks, 14 nodes, best of {args.repeat}")
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, fn in cases.items():
        row, results = {}, {}
        for name, k in backends.items():
            row[name], results[name] = best_of(lambda: fn(k), args.repeat)
        speed = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{label:<22}" + "".join(f"{row[n]:>11.3f}s" for n in backends) + f"{speed:>9.1f}x")
        ref = results["python"]
        for name, X in results.items():
            diff = float(np.max(np.abs(X - ref)))
            if diff > 1e-9:
                raise SystemExit(f"{label}: backend {name} deviates by {diff:.3e} C")


if __name__ == "__main__":
    main()
