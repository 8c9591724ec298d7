"""Exact joint qubit-field dynamics on a truncated Fock space.

The qubit is represented in the flux-eigenbasis ``{|->, |+>}`` (index 0, 1) with
``|-> = (|0> + |1>)/sqrt2`` and ``|+> = (|0> - |1>)/sqrt2`` in terms of the
charge states, so the prepared charge state is ``|0> = (|-> + |+>)/sqrt2``.
In that basis the lab Hamiltonian reads

    H/hbar = omega a^dag a + E_J cos(pi Phi_x/Phi_0) sz + g sx (a + a^dag)

and the frame ``R_f(t) = exp[i omega t (sz + a^dag a)]`` gives the rotating
Hamiltonian

    H'/hbar = (E_J cos(pi Phi_x/Phi_0) - omega) sz
              + g (s+ e^{2 i omega t} + s- e^{-2 i omega t})(a^dag e^{i omega t} + a e^{-i omega t})

with counter-rotating terms kept. Both are integrated by fixed-step RK4.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import EmptyBranchError, NormDriftError, StepSizeError, TruncationError
from .model import DeviceParams, PulseSpec, max_abs_detuning

FRAMES = ("lab", "rotating")
DEFAULT_NMAX = 32
#: hard ceiling on dt * |H| for the RK4 step
MAX_STEP_PHASE = 0.05
#: default dt * |H|; keeps RK4 norm drift below 1e-9 over a full pulse
DEFAULT_STEP_PHASE = 0.005
NORM_TOL = 1e-9
LEAK_TOL = 1e-6


def truncation_floor(alpha: complex) -> int:
    """Smallest admissible cutoff for a coherent amplitude: ceil(|a|^2 + 6|a| + 10)."""
    r = abs(alpha)
    return int(math.ceil(r * r + 6 * r + 10 - 1e-12))


def coherent_state(alpha: complex, nmax: int) -> np.ndarray:
    """Fock amplitudes of |alpha>, n = 0..nmax, renormalised after truncation."""
    if nmax < truncation_floor(alpha):
        raise TruncationError(
            f"nmax={nmax} too small for |alpha|={abs(alpha):.3g}; need >= {truncation_floor(alpha)}"
        )
    v = np.empty(nmax + 1, dtype=np.complex128)
    v[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, nmax + 1):
        v[n] = v[n - 1] * alpha / math.sqrt(n)
    norm = np.linalg.norm(v)
    if norm < 1 - 1e-10:  # pragma: no cover - excluded by the truncation rule
        raise TruncationError("truncated coherent state lost more than 1e-10 of its norm")
    return v / norm


def _check_frame(frame: str) -> int:
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    return kernels.LAB if frame == "lab" else kernels.ROTATING


@dataclass(frozen=True)
class JointState:
    """Amplitudes ordered (qubit branch, photon number); length 2 (nmax + 1)."""

    nmax: int
    amplitudes: np.ndarray
    time: float = 0.0
    frame: str = "rotating"

    def __post_init__(self):
        _check_frame(self.frame)
        if self.amplitudes.shape != (2 * (self.nmax + 1),):
            raise ValueError("amplitudes must be a flat vector of length 2 (nmax + 1)")

    @classmethod
    def from_branches(cls, branches, time=0.0, frame="rotating") -> "JointState":
        branches = np.asarray(branches, dtype=np.complex128)
        return cls(branches.shape[1] - 1, branches.reshape(-1).copy(), float(time), frame)

    @property
    def branches(self) -> np.ndarray:
        return self.amplitudes.reshape(2, self.nmax + 1)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def write_csv(self, path) -> None:
        b = self.branches
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "re_amp_minus", "im_amp_minus", "re_amp_plus", "im_amp_plus"])
            for n in range(self.nmax + 1):
                w.writerow([n] + [format(float(x), ".15e") for x in
                                  (b[0, n].real, b[0, n].imag, b[1, n].real, b[1, n].imag)])


def initial_state(alpha: complex, nmax: int = DEFAULT_NMAX, frame: str = "rotating") -> JointState:
    """|0>_charge (x) |alpha> = (|-> + |+>)/sqrt2 (x) |alpha> at t = 0."""
    field = coherent_state(alpha, nmax)
    return JointState.from_branches(np.vstack([field, field]) / math.sqrt(2), 0.0, frame)


def to_charge_basis(state: JointState) -> np.ndarray:
    """Branch amplitudes re-expressed on the charge states |0>, |1>."""
    m, p = state.branches
    return np.vstack([(m + p) / math.sqrt(2), (m - p) / math.sqrt(2)])


def to_frame(state: JointState, frame: str, omega: float) -> JointState:
    """Map between lab and rotating frames with R_f(t) = exp[i omega t (sz + n)]."""
    _check_frame(frame)
    if frame == state.frame:
        return state
    n = np.arange(state.nmax + 1)
    sz = np.array([1.0, -1.0])[:, None]
    sign = 1.0 if frame == "rotating" else -1.0
    rot = np.exp(sign * 1j * omega * state.time * (sz + n[None, :]))
    return JointState.from_branches(rot * state.branches, state.time, frame)


def hamiltonian_norm_bound(params: DeviceParams, pulse: PulseSpec, nmax: int, frame: str) -> float:
    """Upper bound on |H|/hbar over the pulse (rad/s)."""
    coupling = 2 * params.g * math.sqrt(nmax + 1)
    if frame == "rotating":
        return max_abs_detuning(params, pulse) + coupling
    return params.omega * nmax + params.ej + coupling


def hamiltonian_apply(params: DeviceParams, pulse: PulseSpec, t: float, frame: str, state,
                      backend: str | None = None) -> np.ndarray:
    """H(t) state / hbar; ``state`` is a JointState or a (2, nmax+1) array."""
    code = _check_frame(frame)
    if isinstance(state, JointState):
        if state.frame != frame:
            raise ValueError(f"state is in the {state.frame} frame, not {frame}")
        psi = state.branches
    else:
        psi = np.asarray(state, dtype=np.complex128)
    return kernels.hamiltonian_apply(psi, t, params.omega, params.ej, params.g,
                                     pulse.amplitude_a, pulse.sigma, pulse.phi, code, backend)


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    frame: str = "rotating"
    method: str = "rk4"

    def __post_init__(self):
        _check_frame(self.frame)
        if self.method != "rk4":
            raise ValueError("only the fixed-step 'rk4' method is implemented")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @classmethod
    def auto(cls, params: DeviceParams, pulse: PulseSpec, nmax: int, frame: str = "rotating",
             step_phase: float = DEFAULT_STEP_PHASE) -> "PropagatorConfig":
        return cls(step_phase / hamiltonian_norm_bound(params, pulse, nmax, frame), frame)


def propagate(state: JointState, params: DeviceParams, pulse: PulseSpec, t_end: float,
              cfg: PropagatorConfig, *, backend: str | None = None,
              norm_tol: float = NORM_TOL, leak_tol: float = LEAK_TOL) -> JointState:
    """Integrate the Schroedinger equation from ``state.time`` to ``t_end``.

    The step is shortened uniformly so an integer number of steps lands on
    ``t_end``. Raises on step-size violation, norm drift above ``norm_tol``
    (relative) and Fock-edge population above ``leak_tol``.
    """
    if cfg.frame != state.frame:
        raise ValueError(f"config frame {cfg.frame} does not match state frame {state.frame}")
    bound = hamiltonian_norm_bound(params, pulse, state.nmax, cfg.frame)
    if cfg.dt * bound > MAX_STEP_PHASE:
        raise StepSizeError(f"dt*|H| = {cfg.dt * bound:.3g} exceeds {MAX_STEP_PHASE}")
    span = t_end - state.time
    if span < 0:
        raise ValueError("t_end precedes the state time")
    if span == 0:
        return JointState(state.nmax, state.amplitudes.copy(), state.time, state.frame)
    nsteps = max(1, int(math.ceil(span / cfg.dt - 1e-9)))
    dt = span / nsteps
    psi = kernels.rk4_propagate(state.branches, state.time, dt, nsteps, params.omega, params.ej,
                                params.g, pulse.amplitude_a, pulse.sigma, pulse.phi,
                                _check_frame(cfg.frame), backend)
    out = JointState.from_branches(psi, t_end, cfg.frame)
    n0 = state.norm
    if n0 > 0:
        drift = abs(out.norm / n0 - 1.0)
        if drift > norm_tol:
            raise NormDriftError(f"norm drift {drift:.3g} exceeds {norm_tol:.1g}")
        edge = float(np.sum(np.abs(psi[:, -2:]) ** 2)) / n0 ** 2
        if edge > leak_tol:
            raise TruncationError(f"population {edge:.3g} in the top two Fock levels")
    return out


# --------------------------------------------------------------------------
# branch diagnostics


def _branch_index(branch) -> int:
    if branch in ("-", "minus", -1):
        return 0
    if branch in ("+", "plus", 1):
        return 1
    raise ValueError(f"branch must be '-' or '+', got {branch!r}")


def branch_field(state: JointState, branch) -> tuple[np.ndarray, float]:
    """Normalised field vector of one qubit branch and that branch's probability."""
    v = state.branches[_branch_index(branch)]
    p = float(np.vdot(v, v).real)
    if p <= 1e-6:
        raise EmptyBranchError(f"branch {branch} has probability {p:.3g}")
    return v / math.sqrt(p), p


def mean_annihilation(field: np.ndarray) -> complex:
    n = np.arange(1, field.size)
    return complex(np.sum(np.sqrt(n) * np.conj(field[:-1]) * field[1:]))


def coherent_overlap_sq(field: np.ndarray, beta: complex) -> float:
    """|<beta|field>|^2 with the reference evaluated untruncated on field's support."""
    ref = np.empty(field.size, dtype=np.complex128)
    ref[0] = math.exp(-0.5 * abs(beta) ** 2)
    for n in range(1, field.size):
        ref[n] = ref[n - 1] * beta / math.sqrt(n)
    return float(abs(np.vdot(ref, field)) ** 2)


def best_rotation_fidelity(field: np.ndarray, alpha: complex) -> tuple[float, float]:
    """max over chi of |<alpha e^{i chi}|field>|^2 and the maximising chi."""
    r = abs(alpha)
    if r == 0:
        return float(abs(field[0]) ** 2), 0.0
    n = np.arange(field.size)
    base = np.empty(field.size)
    base[0] = math.exp(-0.5 * r * r)
    for k in range(1, field.size):
        base[k] = base[k - 1] * r / math.sqrt(k)
    u = base * field

    def neg(chi):
        return -abs(np.sum(u * np.exp(-1j * n * chi))) ** 2

    chis = np.linspace(-math.pi, math.pi, 721)
    vals = [neg(c) for c in chis]
    c0 = chis[int(np.argmin(vals))]
    step = chis[1] - chis[0]
    res = minimize_scalar(neg, bounds=(c0 - step, c0 + step), method="bounded",
                          options={"xatol": 1e-12})
    chi = float(res.x)
    return float(-res.fun), chi


@dataclass(frozen=True)
class BranchPhase:
    phase: float
    probability: float
    fidelity: float
    chi: float
    mean_a: complex


def conditional_phase_exact(final: JointState, branch, alpha: complex,
                            reference_phase: float | None = None) -> BranchPhase:
    """Phase of <a> in one branch relative to arg(alpha), plus branch weight and
    the best fidelity to a rotated copy of |alpha>.

    The phase is wrapped to (-pi, pi], or unwrapped onto the 2 pi sheet closest to
    ``reference_phase`` when given.
    """
    field, p = branch_field(final, branch)
    a = mean_annihilation(field)
    if abs(a) < 1e-14 or alpha == 0:
        phase = 0.0
    else:
        phase = math.remainder(cmath.phase(a) - cmath.phase(complex(alpha)), 2 * math.pi)
    if reference_phase is not None:
        phase += 2 * math.pi * round((reference_phase - phase) / (2 * math.pi))
    fid, chi = best_rotation_fidelity(field, complex(alpha))
    return BranchPhase(phase, p, fid, chi, a)
