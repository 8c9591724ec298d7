"""Device parameters, the classical flux pulse and the instantaneous detuning.

Everything downstream is a pure function of :class:`DeviceParams`,
:class:`PulseSpec` and a :class:`TimeGrid`. All frequencies and energies are
angular frequencies (E/hbar, rad/s); times are seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ResolutionError
from .units import E_CHARGE, HBAR, MICRO_EV, thermal_frequency

#: Largest allowed ``dt * sigma`` when integrating the detuning.
PULSE_RESOLUTION = 0.1
#: Default ``dt * (2 max|Omega| + omega)`` for the nested phase integrals.
PHASE_RESOLUTION = 0.15
#: Ratio below which a "<<" comparison of the hierarchy audit passes.
HIERARCHY_RATIO = 0.5
#: g / min|E_J cos - omega| below which the perturbative flag is set.
PERTURBATIVE_RATIO = 0.1

T_OP = 7.5e-9


@dataclass(frozen=True)
class DeviceParams:
    """Circuit energy scales, all in rad/s (temperature in K)."""

    omega: float = 90e10
    ej: float = 15.9e10
    ec: float = 250.0 * MICRO_EV
    gap: float = 458.3 * MICRO_EV
    g: float = 2 * math.pi * 50e6
    temperature: float = 0.030
    ng: float = 0.5

    def __post_init__(self):
        for name in ("omega", "ej", "ec", "gap", "temperature"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if not 0.0 <= self.ng <= 1.0:
            raise ValueError("ng must lie in [0, 1]")

    def with_(self, **changes) -> "DeviceParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PulseSpec:
    """Flux drive Phi_x(t) = (A Phi_0 / 2) cos(sigma t + phi) on [0, duration].

    The default ``sigma`` makes the pulse last exactly half a period.
    """

    amplitude_a: float = 0.7
    sigma: float = math.pi / T_OP
    phi: float = 0.0
    duration: float = T_OP

    def __post_init__(self):
        if not 0.0 <= self.amplitude_a < 2.0:
            raise ValueError("amplitude_a must lie in [0, 2)")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def off(cls, duration: float = T_OP) -> "PulseSpec":
        """Zero-flux pulse: the detuning stays at omega - E_J."""
        return cls(amplitude_a=0.0, duration=duration)

    @property
    def is_off(self) -> bool:
        return self.amplitude_a == 0.0

    def with_(self, **changes) -> "PulseSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if self.n < 2:
            raise ValueError("a time grid needs at least two samples")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / (self.n - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n)

    def refined(self, factor: int = 2) -> "TimeGrid":
        """Same interval, every step split into ``factor`` sub-steps."""
        return TimeGrid(self.t0, self.t1, (self.n - 1) * factor + 1)

    @classmethod
    def for_pulse(cls, params: DeviceParams, pulse: PulseSpec, t_end: float | None = None,
                  resolution: float = PHASE_RESOLUTION) -> "TimeGrid":
        """Grid on [0, t_end] with ``dt * (2 max|Omega| + omega) <= resolution``."""
        t_end = pulse.duration if t_end is None else t_end
        rate = 2 * max_abs_detuning(params, pulse) + params.omega
        n = int(math.ceil(t_end * rate / resolution)) + 1
        n = max(n, int(math.ceil(t_end * pulse.sigma / PULSE_RESOLUTION)) + 1, 2)
        return cls(0.0, t_end, n)


def flux_ratio(pulse: PulseSpec, t):
    """Phi_x(t) / Phi_0."""
    return 0.5 * pulse.amplitude_a * np.cos(pulse.sigma * np.asarray(t, dtype=float) + pulse.phi)


def josephson_factor(pulse: PulseSpec, t):
    """cos(pi Phi_x(t) / Phi_0), the flux modulation of the tunnelling energy."""
    return np.cos(np.pi * flux_ratio(pulse, t))


def detuning(params: DeviceParams, pulse: PulseSpec, t):
    """Omega(t) = omega - E_J cos(pi Phi_x / Phi_0)."""
    return params.omega - params.ej * josephson_factor(pulse, t)


def _factor_range(pulse: PulseSpec) -> tuple[float, float]:
    ts = np.linspace(0.0, pulse.duration, 4097)
    vals = josephson_factor(pulse, ts)
    lo, hi = float(vals.min()), float(vals.max())
    # long pulses visit both analytic extremes; sampling alone may miss them
    if pulse.duration >= 2 * math.pi / pulse.sigma:
        lo = min(lo, math.cos(math.pi * pulse.amplitude_a / 2))
        hi = 1.0
    return lo, hi


def max_abs_detuning(params: DeviceParams, pulse: PulseSpec) -> float:
    lo, hi = _factor_range(pulse)
    return max(abs(params.omega - params.ej * lo), abs(params.omega - params.ej * hi))


def min_abs_qubit_offset(params: DeviceParams, pulse: PulseSpec) -> float:
    """min over the pulse of |E_J cos(pi Phi_x/Phi_0) - omega| (rad/s)."""
    ts = np.linspace(0.0, pulse.duration, 4097)
    return float(np.min(np.abs(params.ej * josephson_factor(pulse, ts) - params.omega)))


def perturbative_ratio(params: DeviceParams, pulse: PulseSpec) -> float:
    return params.g / min_abs_qubit_offset(params, pulse)


def is_perturbative(params: DeviceParams, pulse: PulseSpec) -> bool:
    return perturbative_ratio(params, pulse) < PERTURBATIVE_RATIO


def cumulative_trapezoid(y: np.ndarray, dt: float) -> np.ndarray:
    """Running trapezoid integral of uniformly sampled ``y``; starts at 0."""
    out = np.empty_like(y)
    out[0] = 0
    np.cumsum(0.5 * dt * (y[1:] + y[:-1]), out=out[1:])
    return out


def detuning_integral(params: DeviceParams, pulse: PulseSpec, grid: TimeGrid) -> np.ndarray:
    """Cumulative integral of Omega(t) from 0 to every grid node (radians)."""
    if grid.t0 != 0.0:
        raise ValueError("phase integrals are referenced to t = 0; grid must start at 0")
    if not pulse.is_off and grid.dt * pulse.sigma > PULSE_RESOLUTION:
        raise ResolutionError(
            f"dt*sigma = {grid.dt * pulse.sigma:.3g} exceeds {PULSE_RESOLUTION}"
        )
    return cumulative_trapezoid(detuning(params, pulse, grid.times), grid.dt)


def g_from_circuit(cg: float, csigma: float, omega: float, length: float,
                   cap_density: float) -> float:
    """Qubit-resonator coupling (rad/s) from gate capacitance and line geometry.

    g = (e C_g / C_Sigma) sqrt(hbar omega / (L c)) / hbar
    """
    if csigma <= 0 or length <= 0 or cap_density <= 0:
        raise ValueError("csigma, length and cap_density must be positive")
    if cg < 0 or omega <= 0:
        raise ValueError("cg must be >= 0 and omega > 0")
    vrms = math.sqrt(HBAR * omega / (length * cap_density))
    return E_CHARGE * (cg / csigma) * vrms / HBAR


@dataclass(frozen=True)
class HierarchyCheck:
    name: str
    smaller: float
    larger: float
    ratio: float
    status: str  # "pass" | "warn"


def hierarchy_audit(params: DeviceParams, threshold: float = HIERARCHY_RATIO) -> list[HierarchyCheck]:
    """Audit k_B T << 2 E_J << E_C << gap. Never raises; returns pass/warn per link."""
    links = [
        ("kT << 2EJ", thermal_frequency(params.temperature), 2 * params.ej),
        ("2EJ << EC", 2 * params.ej, params.ec),
        ("EC << gap", params.ec, params.gap),
    ]
    out = []
    for name, small, large in links:
        ratio = small / large
        out.append(HierarchyCheck(name, small, large, ratio, "pass" if ratio < threshold else "warn"))
    return out
