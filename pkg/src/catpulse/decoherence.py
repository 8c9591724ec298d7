"""Closed-form Ohmic spin-boson results for the post-pulse qubit and field.

After the pulse the qubit relaxes and dephases under an Ohmic bath of
strength ``beta``. Detection probabilities, the joint qubit-field state
restricted to the logical-cat sector and the preselected field state follow
from the analytic solution; nothing here integrates a master equation.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import FieldDensity, coherent_vector
from .fock import truncation_floor
from .errors import TruncationError
from .model import DeviceParams
from .units import thermal_frequency

FORMS = ("full", "simplified")


@dataclass(frozen=True)
class BathParams:
    """Ohmic bath and qubit splitting.

    ``scale`` divides the qubit splitting for figure reproduction (slower
    oscillations). The divided splitting enters the oscillation frequency and
    the rate prefactors; the thermal factor Lambda keeps the physical
    splitting unless ``scale_lambda`` is set.
    """

    beta: float = 0.001
    temperature: float = 0.030
    delta_e: float = 2 * 15.9e10
    scale: float = 1.0
    scale_lambda: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.delta_e > 0:
            raise ValueError("delta_e must be positive")
        if not self.scale >= 1:
            raise ValueError("scale must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")

    @classmethod
    def from_device(cls, params: DeviceParams, beta: float = 0.001, scale: float = 1.0,
                    scale_lambda: bool = False) -> "BathParams":
        return cls(beta, params.temperature, delta_e(params), scale, scale_lambda)

    @property
    def splitting(self) -> float:
        """Qubit splitting used for oscillations and rates (rad/s)."""
        return self.delta_e / self.scale

    def with_(self, **changes) -> "BathParams":
        return replace(self, **changes)


def delta_e(params: DeviceParams) -> float:
    """Zero-flux qubit splitting sqrt((2 E_J)^2 + 16 E_C^2 (1 - 2 n_g)^2)."""
    bz = 4 * params.ec * (1 - 2 * params.ng)
    return math.hypot(2 * params.ej, bz)


@dataclass(frozen=True)
class Timescales:
    lam: float
    tau_r: float
    tau_phi: float


def timescales(bath: BathParams) -> Timescales:
    """Lambda = dE / 2kT, tau_r = 1/(pi beta dE coth Lambda), tau_phi = 1/(1/(2 tau_r) + 2 pi beta kT)."""
    kt = thermal_frequency(bath.temperature)
    lam_split = bath.splitting if bath.scale_lambda else bath.delta_e
    lam = lam_split / (2 * kt)
    coth = 1.0 / math.tanh(lam)
    tau_r = 1.0 / (math.pi * bath.beta * bath.splitting * coth)
    tau_phi = 1.0 / (0.5 / tau_r + 2 * math.pi * bath.beta * kt)
    return Timescales(lam, tau_r, tau_phi)


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return t


def probabilities(bath: BathParams, t, form: str = "full", pt_halved: bool = False):
    """(P0, P1, P_T) at times ``t``.

    ``form="full"`` keeps the thermal tanh(Lambda) and relaxation terms;
    ``"simplified"`` drops them so that P0 + P1 = 1. ``pt_halved`` multiplies
    the transition amplitude by 1/2, the smallest change that keeps the joint
    state positive.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    t = _times(t)
    ts = timescales(bath)
    osc = np.cos(bath.splitting * t) * np.exp(-t / ts.tau_phi)
    if form == "simplified":
        p0 = 0.5 * (1 + osc)
        p1 = 0.5 * (1 - osc)
    else:
        th = math.tanh(ts.lam)
        base = th + (1 - th) * np.exp(-t / ts.tau_r)
        p0 = 0.5 * (base + osc)
        p1 = 0.5 * (base - osc)
    pt = -1j * np.sin(bath.splitting * t) * np.exp(-t / ts.tau_phi)
    if pt_halved:
        pt = 0.5 * pt
    return p0, p1, pt


def coherence_profile(bath: BathParams, t) -> np.ndarray:
    """2 P0(t) - 1 (simplified form) = cos(dE t) exp(-t / tau_phi)."""
    p0, _, _ = probabilities(bath, t, form="simplified")
    return 2 * p0 - 1


def coherence_coefficient(bath: BathParams, t: float) -> float:
    return float(math.cos(bath.splitting * t) * math.exp(-t / timescales(bath).tau_phi))


def sequential_probs(bath: BathParams, t):
    """(P_00, P_01): detect |0>, wait ``t`` after a second pulse, detect |0> or |1>."""
    p0, p1, _ = probabilities(bath, t, form="simplified")
    return p0, p1


@dataclass(frozen=True)
class JointDensity:
    """Joint state on {|0>|0_L>, |1>|1_L>} with normalised logical cats.

    ``sector`` is the 2x2 density matrix in that (orthonormal) basis, already
    divided by ``raw_trace``.
    """

    sector: np.ndarray
    raw_trace: float
    alpha: complex
    t: float

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.sector)[0])

    def to_fock(self, nmax: int) -> np.ndarray:
        """Embed into qubit (charge basis) x Fock space; index = q * (nmax+1) + n."""
        l0, l1 = logical_states(self.alpha, nmax)
        basis = [np.concatenate([l0, np.zeros_like(l0)]), np.concatenate([np.zeros_like(l1), l1])]
        v = np.column_stack(basis)
        return v @ self.sector @ v.conj().T


def logical_states(alpha: complex, nmax: int):
    """Normalised |0_L> ~ |a> + |-a| and |1_L> ~ |-a> - |a>."""
    if nmax < truncation_floor(alpha):
        raise TruncationError(f"nmax={nmax} too small for |alpha|={abs(alpha):.3g}")
    a = coherent_vector(alpha, nmax)
    b = coherent_vector(-alpha, nmax)
    s = math.exp(-2 * abs(alpha) ** 2)
    even = (a + b) / math.sqrt(2 * (1 + s))
    if abs(alpha) == 0:
        return even, np.zeros_like(even)
    odd = (b - a) / math.sqrt(2 * (1 - s))
    return even, odd


def joint_state(bath: BathParams, alpha: complex, t: float, *, form: str = "full",
                pt_halved: bool = False) -> JointDensity:
    p0, p1, pt = (complex(x) for x in probabilities(bath, float(t), form, pt_halved))
    raw = np.array([[p0, np.conj(pt)], [pt, p1]], dtype=np.complex128)
    tr = float((p0 + p1).real)
    return JointDensity(raw / tr, tr, complex(alpha), float(t))


def positivity_scan(bath: BathParams, alpha: complex, times, *, form: str = "full",
                    pt_halved: bool = False) -> np.ndarray:
    """Minimum eigenvalue of the joint state at each time."""
    return np.array([joint_state(bath, alpha, t, form=form, pt_halved=pt_halved).min_eigenvalue
                     for t in np.asarray(times, dtype=float)])


def preselected_field(bath: BathParams, alpha: complex, t: float, nmax: int) -> FieldDensity:
    """rho_f = (|a><a| + |-a><-a| + c (|a><-a| + h.c.)) / N with
    c = cos(dE t) exp(-t/tau_phi) and N = 2 (1 + c exp(-2|a|^2)).
    """
    if nmax < truncation_floor(alpha):
        raise TruncationError(f"nmax={nmax} too small for |alpha|={abs(alpha):.3g}")
    c = coherence_coefficient(bath, t)
    s = math.exp(-2 * abs(alpha) ** 2)
    norm = 2 * (1 + c * s)
    coeffs = np.array([[1.0, c], [c, 1.0]]) / norm
    return FieldDensity.from_coherent_mixture(alpha, coeffs, nmax)


@dataclass(frozen=True)
class DetectionRecord:
    seed: int
    interval: float
    outcomes: np.ndarray = field(repr=False)

    @property
    def empirical_p0(self) -> float:
        return float(np.mean(self.outcomes == 0))

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for i, o in enumerate(self.outcomes.tolist()):
                fh.write(json.dumps({"cycle_index": i, "outcome": o}) + "\n")


def sample_sequence(bath: BathParams, seed: int, n_cycles: int, interval: float) -> DetectionRecord:
    """Independent pulse-wait-detect cycles; outcome 0 with probability P0(interval)."""
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    p0 = float(probabilities(bath, interval)[0])
    rng = np.random.default_rng(seed)
    outcomes = (rng.random(n_cycles) >= p0).astype(np.int8)
    return DetectionRecord(int(seed), float(interval), outcomes)


def binomial_z(record: DetectionRecord, p0: float) -> float:
    n = record.outcomes.size
    sd = math.sqrt(max(p0 * (1 - p0), 1e-300) / n)
    return (record.empirical_p0 - p0) / sd


DECOHERENCE_COLUMNS = ("t_s", "p0", "p1", "re_pt", "im_pt", "coherence")


def write_decoherence_csv(path, bath: BathParams, t, form: str = "full",
                          pt_halved: bool = False) -> None:
    t = _times(t)
    ts = timescales(bath)
    p0, p1, pt = probabilities(bath, t, form, pt_halved)
    coh = coherence_profile(bath, t)
    with open(path, "w", newline="") as fh:
        fh.write(f"# tau_r={ts.tau_r:.12e} tau_phi={ts.tau_phi:.12e} Lambda={ts.lam:.12e} "
                 f"delta_e={bath.splitting:.12e} scale={bath.scale:g}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DECOHERENCE_COLUMNS)
        for row in zip(t, p0, p1, pt.real, pt.imag, coh):
            w.writerow([format(float(v), ".12e") for v in row])
