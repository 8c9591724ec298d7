"""Second-order conditional-phase model.

For each qubit branch the second-order action on the field is summarised by
the complex per-photon exponent ``theta = 1 + F/G``, where ``F`` and ``G`` are
nested oscillatory time integrals of the detuning phase. A coherent field
``|alpha>`` paired with branch ``|->`` or ``|+>`` is mapped to
``exp(-|alpha|^2 f / 2) |alpha e^theta>`` with ``f = 1 - exp(2 Re theta)``.

Branches are labelled ``"-"`` and ``"+"`` throughout.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, DegeneracyError, DomainError, ResolutionError
from .kernels import nested_phase_integral
from .model import (
    PHASE_RESOLUTION,
    DeviceParams,
    PulseSpec,
    TimeGrid,
    detuning_integral,
    max_abs_detuning,
)

DEFAULT_FLOOR = 1e-24
TRACE_COLUMNS = (
    "t_s",
    "re_theta_minus",
    "im_theta_minus_unwrapped",
    "re_theta_plus",
    "im_theta_plus_unwrapped",
    "f_minus",
    "f_plus",
)


def _branch(branch) -> str:
    if branch in ("-", "minus", -1):
        return "-"
    if branch in ("+", "plus", 1, +1):
        return "+"
    raise ValueError(f"branch must be '-' or '+', got {branch!r}")


@dataclass(frozen=True)
class FGSeries:
    """The four nested integrals sampled on ``times`` (units s^2)."""

    times: np.ndarray
    f_minus: np.ndarray
    f_plus: np.ndarray
    g_minus: np.ndarray
    g_plus: np.ndarray


def _fg_on_grid(params, pulse, grid, backend):
    phase = detuning_integral(params, pulse, grid)
    t = grid.times
    dt = grid.dt
    w = params.omega
    # inner kernel exp(i s (2 phase + w omega t)): s = -1 for "-", w = +1 for F
    return (
        nested_phase_integral(phase, t, w, dt, -1.0, +1.0, backend),
        nested_phase_integral(phase, t, w, dt, +1.0, +1.0, backend),
        nested_phase_integral(phase, t, w, dt, -1.0, -1.0, backend),
        nested_phase_integral(phase, t, w, dt, +1.0, -1.0, backend),
    )


def compute_fg(params: DeviceParams, pulse: PulseSpec, grid: TimeGrid, *,
               richardson: bool = False, backend: str | None = None) -> FGSeries:
    """Evaluate F-, F+, G-, G+ on ``grid`` in O(n).

    With ``richardson=True`` the trapezoid result on a twice-refined grid is
    combined with the coarse one, ``(4 T_{h/2} - T_h) / 3``, cancelling the
    leading h^2 error term; values are still reported on ``grid``.
    """
    if grid.t0 != 0.0:
        raise ValueError("grid must start at t = 0")
    rate = 2 * max_abs_detuning(params, pulse) + params.omega
    if grid.dt * rate > PHASE_RESOLUTION * (1 + 1e-12):
        raise ResolutionError(
            f"dt*(2 max|Omega| + omega) = {grid.dt * rate:.3g} exceeds {PHASE_RESOLUTION}"
        )
    coarse = _fg_on_grid(params, pulse, grid, backend)
    if richardson:
        fine = _fg_on_grid(params, pulse, grid.refined(2), backend)
        coarse = tuple((4.0 * f[::2] - c) / 3.0 for f, c in zip(fine, coarse))
    return FGSeries(grid.times, *coarse)


@dataclass(frozen=True)
class ThetaSeries:
    theta_minus: np.ndarray
    theta_plus: np.ndarray
    t_min_valid: float
    valid: np.ndarray


def theta(fg: FGSeries, floor: float = DEFAULT_FLOOR) -> ThetaSeries:
    """theta = 1 + F/G where |G| exceeds ``floor * t^2 / 2``; NaN elsewhere."""
    if not floor > 0:
        raise ValueError("floor must be positive")
    t = fg.times
    ref = floor * 0.5 * t * t
    valid = (np.abs(fg.g_minus) > ref) & (np.abs(fg.g_plus) > ref) & (t > 0)
    if not valid.any():
        raise DegeneracyError("G is below the degeneracy floor on the whole trace")
    th_m = np.full(t.shape, np.nan + 0j)
    th_p = np.full(t.shape, np.nan + 0j)
    th_m[valid] = 1.0 + fg.f_minus[valid] / fg.g_minus[valid]
    th_p[valid] = 1.0 + fg.f_plus[valid] / fg.g_plus[valid]
    return ThetaSeries(th_m, th_p, float(t[np.argmax(valid)]), valid)


def _unwrap(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    out = np.full(values.shape, np.nan)
    out[valid] = np.unwrap(values[valid])
    return out


@dataclass(frozen=True)
class PhaseTrace:
    """Perturbative output on a time grid.

    ``f_minus`` .. ``g_plus`` are the nested integrals F-, F+, G-, G+;
    ``validity_minus``/``validity_plus`` are f = 1 - exp(2 Re theta).
    ``prefactor_*`` is the discarded -g^2 G factor, kept for diagnostics.
    """

    grid: TimeGrid
    f_minus: np.ndarray
    f_plus: np.ndarray
    g_minus: np.ndarray
    g_plus: np.ndarray
    theta_minus: np.ndarray
    theta_plus: np.ndarray
    validity_minus: np.ndarray
    validity_plus: np.ndarray
    t_min_valid: float
    prefactor_minus: np.ndarray = field(default=None, repr=False)
    prefactor_plus: np.ndarray = field(default=None, repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.theta_minus) & np.isfinite(self.theta_plus)

    def theta(self, branch) -> np.ndarray:
        return self.theta_minus if _branch(branch) == "-" else self.theta_plus

    def im_unwrapped(self, branch) -> np.ndarray:
        return _unwrap(self.theta(branch).imag, self.valid)

    def theta_at(self, t: float, branch) -> complex:
        times = self.times
        if t < self.t_min_valid or t > times[-1] * (1 + 1e-12):
            raise DomainError(
                f"t = {t:.4g} s outside [{self.t_min_valid:.4g}, {times[-1]:.4g}]"
            )
        th = self.theta(branch)
        ok = self.valid
        re = np.interp(t, times[ok], th.real[ok])
        im = np.interp(t, times[ok], self.im_unwrapped(branch)[ok])
        return complex(re, im)

    def write_csv(self, path) -> None:
        cols = [
            self.times,
            self.theta_minus.real,
            self.im_unwrapped("-"),
            self.theta_plus.real,
            self.im_unwrapped("+"),
            self.validity_minus,
            self.validity_plus,
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for row in zip(*cols):
                writer.writerow([format(float(v), ".12e") for v in row])


def validity_from_theta(th: np.ndarray) -> np.ndarray:
    return 1.0 - np.exp(2.0 * th.real)


def phase_trace(params: DeviceParams, pulse: PulseSpec, grid: TimeGrid | None = None, *,
                floor: float = DEFAULT_FLOOR, richardson: bool = False,
                backend: str | None = None) -> PhaseTrace:
    """Full perturbative trace over ``grid`` (default: the pulse at default resolution)."""
    if grid is None:
        grid = TimeGrid.for_pulse(params, pulse)
    fg = compute_fg(params, pulse, grid, richardson=richardson, backend=backend)
    th = theta(fg, floor)
    g2 = params.g ** 2
    return PhaseTrace(
        grid=grid,
        f_minus=fg.f_minus,
        f_plus=fg.f_plus,
        g_minus=fg.g_minus,
        g_plus=fg.g_plus,
        theta_minus=th.theta_minus,
        theta_plus=th.theta_plus,
        validity_minus=validity_from_theta(th.theta_minus),
        validity_plus=validity_from_theta(th.theta_plus),
        t_min_valid=th.t_min_valid,
        prefactor_minus=-g2 * fg.g_minus,
        prefactor_plus=-g2 * fg.g_plus,
    )


@dataclass(frozen=True)
class ValidityProfile:
    minus: np.ndarray
    plus: np.ndarray
    peak_time_minus: float
    peak_value_minus: float
    end_minus: float
    end_plus: float
    max_abs_plus: float


def validity_profile(trace: PhaseTrace) -> ValidityProfile:
    """f(t) for both branches plus the location of the largest |f-|."""
    fm = validity_from_theta(trace.theta_minus)
    fp = validity_from_theta(trace.theta_plus)
    ok = np.isfinite(fm)
    abs_m = np.where(ok, np.abs(fm), -np.inf)
    k = int(np.argmax(abs_m))
    return ValidityProfile(
        minus=fm,
        plus=fp,
        peak_time_minus=float(trace.times[k]),
        peak_value_minus=float(fm[k]),
        end_minus=float(fm[-1]),
        end_plus=float(fp[-1]),
        max_abs_plus=float(np.nanmax(np.abs(fp))),
    )


@dataclass(frozen=True)
class ConditionalFieldModel:
    """Branch-conditioned coherent amplitude ``alpha * e^theta`` and its weight."""

    alpha: complex
    theta: complex
    norm_factor: float

    @property
    def amplitude(self) -> complex:
        return self.alpha * np.exp(self.theta)

    @property
    def validity(self) -> float:
        return 1.0 - math.exp(2.0 * self.theta.real)


def conditional_map(trace: PhaseTrace, alpha: complex, t: float, branch) -> ConditionalFieldModel:
    th = trace.theta_at(t, branch)
    f = 1.0 - math.exp(2.0 * th.real)
    return ConditionalFieldModel(complex(alpha), th, math.exp(-0.5 * abs(alpha) ** 2 * f))


# --------------------------------------------------------------------------
# calibration

FREE_PARAMETERS = ("sigma", "phi", "duration")


@dataclass(frozen=True)
class CalibrationResult:
    pulse: PulseSpec
    free_parameter: str
    value: float
    achieved_phase: float
    target_phase: float
    scan: list = field(default_factory=list)
    brackets: list = field(default_factory=list)


def end_phase(params: DeviceParams, pulse: PulseSpec, *, resolution: float = PHASE_RESOLUTION,
              backend: str | None = None) -> float:
    """Unwrapped Im theta- at the end of the pulse."""
    grid = TimeGrid.for_pulse(params, pulse, resolution=resolution)
    trace = phase_trace(params, pulse, grid, backend=backend)
    return float(trace.im_unwrapped("-")[-1])


def _default_range(template: PulseSpec, free_parameter: str):
    if free_parameter == "phi":
        return np.linspace(0.0, 2 * math.pi, 65)
    if free_parameter == "sigma":
        return template.sigma * np.geomspace(0.25, 4.0, 65)
    return template.duration * np.linspace(0.5, 1.5, 65)


def calibrate_pulse(params: DeviceParams, pulse_template: PulseSpec, free_parameter: str,
                    target_phase: float, tol: float = 0.05, *, scan_values=None,
                    resolution: float = PHASE_RESOLUTION, max_iter: int = 80,
                    workers: int = 1, backend: str | None = None) -> CalibrationResult:
    """Tune one pulse parameter so that Im theta-(t_end) hits ``target_phase``.

    A coarse scan locates sign changes of ``phase - target``; the bracket
    closest to the template value is refined by bisection.
    """
    if free_parameter not in FREE_PARAMETERS:
        raise ValueError(f"free_parameter must be one of {FREE_PARAMETERS}")

    def evaluate(value):
        pulse = pulse_template.with_(**{free_parameter: float(value)})
        return end_phase(params, pulse, resolution=resolution, backend=backend)

    start = evaluate(getattr(pulse_template, free_parameter))
    if abs(start - target_phase) <= tol:
        return CalibrationResult(pulse_template, free_parameter,
                                 getattr(pulse_template, free_parameter), start, target_phase)

    values = np.asarray(_default_range(pulse_template, free_parameter) if scan_values is None
                        else scan_values, dtype=float)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            phases = list(pool.map(evaluate, values))
    else:
        phases = [evaluate(v) for v in values]
    scan = list(zip(values.tolist(), phases))

    diff = np.asarray(phases) - target_phase
    close = np.flatnonzero(np.abs(diff) <= tol)
    brackets = [i for i in range(len(values) - 1)
                if np.isfinite(diff[i]) and np.isfinite(diff[i + 1]) and diff[i] * diff[i + 1] <= 0]
    if not brackets and close.size == 0:
        lo, hi = float(np.nanmin(phases)), float(np.nanmax(phases))
        raise CalibrationError(
            f"target {target_phase:.4f} rad not bracketed by {free_parameter} scan "
            f"(achieved range [{lo:.4g}, {hi:.4g}] rad)", scan)

    ref = getattr(pulse_template, free_parameter)
    if close.size:
        k = int(close[np.argmin(np.abs(values[close] - ref))])
        pulse = pulse_template.with_(**{free_parameter: float(values[k])})
        return CalibrationResult(pulse, free_parameter, float(values[k]), phases[k],
                                 target_phase, scan)

    i = min(brackets, key=lambda j: abs(0.5 * (values[j] + values[j + 1]) - ref))
    lo, hi = float(values[i]), float(values[i + 1])
    d_lo = diff[i]
    history = [(lo, hi)]
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        phase = evaluate(mid)
        d_mid = phase - target_phase
        if abs(d_mid) <= tol:
            pulse = pulse_template.with_(**{free_parameter: mid})
            return CalibrationResult(pulse, free_parameter, mid, phase, target_phase, scan, history)
        if d_mid * d_lo > 0:
            lo, d_lo = mid, d_mid
        else:
            hi = mid
        history.append((lo, hi))
        if hi - lo <= 1e-13 * max(abs(lo), abs(hi), 1.0):
            break
    raise CalibrationError(
        f"bisection on {free_parameter} stalled near {0.5 * (lo + hi):.6g} without reaching tol "
        "(phase is discontinuous across the bracket)", scan)
