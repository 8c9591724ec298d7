"""Field-state diagnostics: density matrices, Wigner functions, parity, cat fidelity.

Wigner convention: ``W(beta) = (2/pi) Tr[rho D(beta) P D(beta)^dag]`` with the
photon-parity operator ``P = (-1)^{a^dag a}`` and phase-space coordinates
``beta = x + i p``. It integrates to one over the plane and is bounded by
``|W| <= 2/pi``; the vacuum peaks at exactly ``2/pi``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
#: minimum Wigner grid density, points per phase-space unit
MIN_POINTS_PER_UNIT = 8
#: required margin of the Wigner grid beyond |alpha|
GRID_MARGIN = 4.0


def coherent_vector(alpha: complex, nmax: int) -> np.ndarray:
    """Exact Fock amplitudes exp(-|a|^2/2) a^n / sqrt(n!) for n = 0..nmax (not renormalised)."""
    v = np.empty(nmax + 1, dtype=np.complex128)
    v[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, nmax + 1):
        v[n] = v[n - 1] * alpha / math.sqrt(n)
    return v


def cat_vector(alpha: complex, nmax: int, parity_sel: str = "even") -> np.ndarray:
    """Normalised (|a> + |-a>) for "even" or (|a> - |-a>) for "odd".

    Built from the parity-filtered coherent amplitudes so that the odd cat is
    well defined down to tiny ``alpha``.
    """
    if parity_sel not in ("even", "odd"):
        raise ValueError("parity_sel must be 'even' or 'odd'")
    v = coherent_vector(alpha, nmax)
    keep = 0 if parity_sel == "even" else 1
    v[np.arange(nmax + 1) % 2 != keep] = 0
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("odd cat is undefined at alpha = 0")
    return v / norm


@dataclass(frozen=True)
class FieldDensity:
    """Fock-basis density matrix of the resonator field.

    ``coherent_coeffs`` and ``alpha`` are kept when the state was assembled as
    a combination of ``|alpha>`` and ``|-alpha>``.
    """

    nmax: int
    matrix: np.ndarray = field(repr=False)
    alpha: complex | None = None
    coherent_coeffs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.nmax + 1, self.nmax + 1):
            raise ValueError("matrix shape does not match nmax")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} is not 1")
        if min_eigenvalue(m) < -PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue")

    @classmethod
    def from_vector(cls, psi: np.ndarray) -> "FieldDensity":
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(psi.size - 1, np.outer(psi, psi.conj()))

    @classmethod
    def from_coherent_mixture(cls, alpha: complex, coeffs, nmax: int) -> "FieldDensity":
        """sum_ij coeffs[i, j] |s_i alpha><s_j alpha| with s = (+1, -1)."""
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        v = np.column_stack([coherent_vector(alpha, nmax), coherent_vector(-alpha, nmax)])
        m = v @ coeffs @ v.conj().T
        m = 0.5 * (m + m.conj().T)
        return cls(nmax, m, complex(alpha), coeffs)


def cat_state(alpha: complex, nmax: int, parity_sel: str = "even") -> FieldDensity:
    return FieldDensity.from_vector(cat_vector(alpha, nmax, parity_sel))


def coherent_density(alpha: complex, nmax: int) -> FieldDensity:
    return FieldDensity.from_vector(coherent_vector(alpha, nmax))


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, FieldDensity) else np.asarray(rho)


def parity(rho) -> float:
    """Tr[rho (-1)^{a^dag a}]."""
    d = np.real(np.diag(_matrix(rho)))
    signs = np.where(np.arange(d.size) % 2 == 0, 1.0, -1.0)
    return float(signs @ d)


def purity(rho) -> float:
    m = _matrix(rho)
    return float(np.real(np.vdot(m, m)))


def min_eigenvalue(rho) -> float:
    return float(np.linalg.eigvalsh(_matrix(rho))[0])


def cat_fidelity(rho, alpha: complex, parity_sel: str = "even") -> float:
    m = _matrix(rho)
    c = cat_vector(alpha, m.shape[0] - 1, parity_sel)
    return float(np.real(np.vdot(c, m @ c)))


def coherent_frame_coefficients(rho, alpha: complex) -> np.ndarray:
    """Recover the 2x2 coefficient matrix of rho in the non-orthogonal {|a>, |-a>} frame."""
    m = _matrix(rho)
    v = np.column_stack([coherent_vector(alpha, m.shape[0] - 1),
                         coherent_vector(-alpha, m.shape[0] - 1)])
    vp = np.linalg.pinv(v)
    return vp @ m @ vp.conj().T


@dataclass(frozen=True)
class WignerGrid:
    x_range: tuple[float, float]
    p_range: tuple[float, float]
    resolution: float
    values: np.ndarray = field(repr=False)  # shape (len(p), len(x))

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.values.shape[1])

    @property
    def p(self) -> np.ndarray:
        return np.linspace(*self.p_range, self.values.shape[0])

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.x, axis=1), self.p))

    def at_origin(self) -> float:
        """Value at the grid node nearest to beta = 0."""
        i = int(np.argmin(np.abs(self.p)))
        j = int(np.argmin(np.abs(self.x)))
        return float(self.values[i, j])

    def write_csv(self, path) -> None:
        xx, pp = np.meshgrid(self.x, self.p)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("x", "p", "w"))
            for x, p, v in zip(xx.ravel(), pp.ravel(), self.values.ravel()):
                w.writerow((format(x, ".12e"), format(p, ".12e"), format(v, ".12e")))


def _axis(lo: float, hi: float, resolution: float) -> np.ndarray:
    n = int(math.ceil((hi - lo) * resolution - 1e-9)) + 1
    return np.linspace(lo, hi, max(n, 2))


def wigner(rho, x_range=(-5.0, 5.0), p_range=(-5.0, 5.0), resolution: float = 10.0, *,
           alpha: complex | None = None, backend=None) -> WignerGrid:
    """Wigner function on a rectangular grid with ``resolution`` points per unit.

    When ``alpha`` is given the grid must reach ``|alpha| + 4`` in every direction.
    """
    if resolution < MIN_POINTS_PER_UNIT:
        raise ValueError(f"resolution {resolution} below {MIN_POINTS_PER_UNIT} points per unit")
    if not (x_range[1] > x_range[0] and p_range[1] > p_range[0]):
        raise ValueError("ranges must be increasing")
    if alpha is not None:
        reach = abs(alpha) + GRID_MARGIN
        if min(-x_range[0], x_range[1], -p_range[0], p_range[1]) < reach - 1e-12:
            raise ValueError(f"grid must cover +-{reach:.3g} in both quadratures")
    x = _axis(*x_range, resolution)
    p = _axis(*p_range, resolution)
    xx, pp = np.meshgrid(x, p)
    vals = kernels.wigner_points(_matrix(rho), (xx + 1j * pp).ravel(), backend=backend)
    return WignerGrid(tuple(map(float, x_range)), tuple(map(float, p_range)), float(resolution),
                      vals.reshape(xx.shape))


def diagnostics(rho, alpha: complex, grid: WignerGrid | None = None) -> dict:
    out = {
        "parity": parity(rho),
        "fidelity_even": cat_fidelity(rho, alpha, "even"),
        "fidelity_odd": cat_fidelity(rho, alpha, "odd") if alpha != 0 else 0.0,
        "purity": purity(rho),
        "min_eigenvalue": min_eigenvalue(rho),
        "trace": float(np.trace(_matrix(rho)).real),
    }
    if grid is not None:
        out["wigner_integral"] = grid.integral()
        out["wigner_origin"] = grid.at_origin()
        out["wigner_min"] = float(grid.values.min())
    return out


def write_diagnostics(path, diag: dict) -> None:
    with open(path, "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
