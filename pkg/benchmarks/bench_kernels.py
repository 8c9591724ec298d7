"""Time the numba and numpy flavours of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once (JIT compile or cache load) before timing.
"""
import argparse
import time

import numpy as np

from catpulse import fock, kernels
from catpulse.analysis import cat_state
from catpulse.model import DeviceParams, PulseSpec, TimeGrid, detuning_integral


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    params, pulse = DeviceParams(), PulseSpec()
    grid = TimeGrid.for_pulse(params, pulse, resolution=0.05)
    phase = detuning_integral(params, pulse, grid)

    def nested(backend):
        return lambda: kernels.nested_phase_integral(phase, grid.times, params.omega, grid.dt,
                                                     -1.0, 1.0, backend)

    psi = fock.initial_state(0.5, 32).branches
    dt = fock.PropagatorConfig.auto(params, pulse, 32).dt

    def rk4(backend):
        return lambda: kernels.rk4_propagate(psi, 0.0, dt, 20000, params.omega, params.ej,
                                             params.g, pulse.amplitude_a, pulse.sigma,
                                             pulse.phi, kernels.ROTATING, backend)

    rho = cat_state(1.5, 40).matrix
    x = np.linspace(-5.5, 5.5, 111)
    beta = (x[None, :] + 1j * x[:, None]).ravel()

    def wigner(backend):
        return lambda: kernels.wigner_points(rho, beta, backend)

    return [(f"nested integral, {grid.n} nodes", nested),
            ("RK4, 20000 steps, nmax 32", rk4),
            (f"Wigner, {beta.size} points, nmax 40", wigner)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<36}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}")
    for name, make in cases():
        tn = best_of(make("numba"), args.repeat)
        tp = best_of(make("numpy"), args.repeat)
        print(f"{name:<36}{tn:>12.4f}{tp:>12.4f}{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
