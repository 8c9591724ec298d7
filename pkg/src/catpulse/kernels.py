"""Hot numerical kernels, each in a numba and a pure-numpy flavour.

The public entry points (:func:`nested_phase_integral`, :func:`rk4_propagate`,
:func:`wigner_points`) dispatch on ``backend`` ("numba" | "numpy" | None for the
environment default, see :mod:`catpulse._accel`). Both flavours implement the
same arithmetic and are cross-checked in the test-suite.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit, resolve_backend

LAB = 0
ROTATING = 1


# --------------------------------------------------------------------------
# nested oscillatory integral
#
#   out(t) = int_0^t dt1 e^{-i x(t1)} int_0^t1 dt2 e^{+i x(t2)},
#   x(t)   = s * (2 * phase(t) + w * omega * t)
#
# evaluated with composite trapezoid and running prefix sums (O(n)).


@njit
def _nested_numba(phase, times, omega, dt, s, w):
    n = phase.shape[0]
    out = np.empty(n, dtype=np.complex128)
    out[0] = 0.0
    x = s * (2.0 * phase[0] + w * omega * times[0])
    k_prev = complex(math.cos(x), math.sin(x))
    inner = 0.0 + 0.0j
    prod_prev = 0.0 + 0.0j
    acc = 0.0 + 0.0j
    h = 0.5 * dt
    for j in range(1, n):
        x = s * (2.0 * phase[j] + w * omega * times[j])
        k = complex(math.cos(x), math.sin(x))
        inner += h * (k_prev + k)
        prod = k.conjugate() * inner
        acc += h * (prod_prev + prod)
        out[j] = acc
        k_prev = k
        prod_prev = prod
    return out


def _cumtrapz(y, dt):
    out = np.empty_like(y)
    out[0] = 0
    np.cumsum(0.5 * dt * (y[1:] + y[:-1]), out=out[1:])
    return out


def _nested_numpy(phase, times, omega, dt, s, w):
    x = s * (2.0 * phase + w * omega * times)
    k = np.cos(x) + 1j * np.sin(x)
    inner = _cumtrapz(k, dt)
    return _cumtrapz(np.conj(k) * inner, dt)


def nested_phase_integral(phase, times, omega, dt, s, w, backend=None):
    """Nested cumulative integral with inner kernel exp(i s (2 phase + w omega t))."""
    phase = np.ascontiguousarray(phase, dtype=np.float64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _nested_numba(phase, times, float(omega), float(dt), float(s), float(w))
    return _nested_numpy(phase, times, float(omega), float(dt), float(s), float(w))


# --------------------------------------------------------------------------
# Hamiltonian action on the (qubit, photon) amplitude array psi[2, nmax+1].
# Qubit index 0 is |->, index 1 is |+>; sigma_z = diag(+1, -1) in that order.


@njit
def _apply_numba(psi, out, t, omega, ej, g, amp, sigma, phi, frame):
    nf = psi.shape[1]
    c = math.cos(math.pi * 0.5 * amp * math.cos(sigma * t + phi))
    if frame == ROTATING:
        d = ej * c - omega
        e1 = complex(math.cos(omega * t), math.sin(omega * t))
        e2 = e1 * e1
        up = g * e2           # sigma_+ e^{2 i omega t}
        dn = g * e2.conjugate()
        for n in range(nf):
            # (a^dag e^{i w t} + a e^{-i w t}) applied to the other branch
            f1 = 0.0j
            f0 = 0.0j
            if n > 0:
                sq = math.sqrt(n)
                f1 += sq * e1 * psi[1, n - 1]
                f0 += sq * e1 * psi[0, n - 1]
            if n + 1 < nf:
                sq = math.sqrt(n + 1)
                f1 += sq * e1.conjugate() * psi[1, n + 1]
                f0 += sq * e1.conjugate() * psi[0, n + 1]
            out[0, n] = d * psi[0, n] + up * f1
            out[1, n] = -d * psi[1, n] + dn * f0
    else:
        e = ej * c
        for n in range(nf):
            f1 = 0.0j
            f0 = 0.0j
            if n > 0:
                sq = math.sqrt(n)
                f1 += sq * psi[1, n - 1]
                f0 += sq * psi[0, n - 1]
            if n + 1 < nf:
                sq = math.sqrt(n + 1)
                f1 += sq * psi[1, n + 1]
                f0 += sq * psi[0, n + 1]
            out[0, n] = (omega * n + e) * psi[0, n] + g * f1
            out[1, n] = (omega * n - e) * psi[1, n] + g * f0


def _ladder(v, sq):
    """Return (a^dag v, a v) for one qubit branch."""
    up = np.zeros_like(v)
    up[1:] = sq[1:] * v[:-1]
    down = np.zeros_like(v)
    down[:-1] = sq[1:] * v[1:]
    return up, down


def _apply_numpy(psi, t, omega, ej, g, amp, sigma, phi, frame):
    nf = psi.shape[1]
    sq = np.sqrt(np.arange(nf, dtype=np.float64))
    c = math.cos(math.pi * 0.5 * amp * math.cos(sigma * t + phi))
    out = np.empty_like(psi)
    if frame == ROTATING:
        d = ej * c - omega
        e1 = complex(math.cos(omega * t), math.sin(omega * t))
        e2 = e1 * e1
        u1, d1 = _ladder(psi[1], sq)
        u0, d0 = _ladder(psi[0], sq)
        out[0] = d * psi[0] + g * e2 * (e1 * u1 + e1.conjugate() * d1)
        out[1] = -d * psi[1] + g * e2.conjugate() * (e1 * u0 + e1.conjugate() * d0)
    else:
        e = ej * c
        n = np.arange(nf, dtype=np.float64)
        u1, d1 = _ladder(psi[1], sq)
        u0, d0 = _ladder(psi[0], sq)
        out[0] = (omega * n + e) * psi[0] + g * (u1 + d1)
        out[1] = (omega * n - e) * psi[1] + g * (u0 + d0)
    return out


def hamiltonian_apply(psi, t, omega, ej, g, amp, sigma, phi, frame, backend=None):
    """H psi / hbar for a psi of shape (2, nmax+1)."""
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        out = np.empty_like(psi)
        _apply_numba(psi, out, float(t), float(omega), float(ej), float(g), float(amp),
                     float(sigma), float(phi), int(frame))
        return out
    return _apply_numpy(psi, float(t), float(omega), float(ej), float(g), float(amp),
                        float(sigma), float(phi), int(frame))


@njit
def _rk4_numba(psi, t0, dt, nsteps, omega, ej, g, amp, sigma, phi, frame):
    y = psi.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    mi = -1j
    h2 = 0.5 * dt
    for step in range(nsteps):
        t = t0 + step * dt
        _apply_numba(y, k1, t, omega, ej, g, amp, sigma, phi, frame)
        for q in range(2):
            for n in range(y.shape[1]):
                k1[q, n] *= mi
                tmp[q, n] = y[q, n] + h2 * k1[q, n]
        _apply_numba(tmp, k2, t + h2, omega, ej, g, amp, sigma, phi, frame)
        for q in range(2):
            for n in range(y.shape[1]):
                k2[q, n] *= mi
                tmp[q, n] = y[q, n] + h2 * k2[q, n]
        _apply_numba(tmp, k3, t + h2, omega, ej, g, amp, sigma, phi, frame)
        for q in range(2):
            for n in range(y.shape[1]):
                k3[q, n] *= mi
                tmp[q, n] = y[q, n] + dt * k3[q, n]
        _apply_numba(tmp, k4, t + dt, omega, ej, g, amp, sigma, phi, frame)
        for q in range(2):
            for n in range(y.shape[1]):
                y[q, n] += dt / 6.0 * (k1[q, n] + 2.0 * k2[q, n] + 2.0 * k3[q, n] + mi * k4[q, n])
    return y


def _rk4_numpy(psi, t0, dt, nsteps, omega, ej, g, amp, sigma, phi, frame):
    y = psi.copy()
    args = (omega, ej, g, amp, sigma, phi, frame)
    for step in range(nsteps):
        t = t0 + step * dt
        k1 = -1j * _apply_numpy(y, t, *args)
        k2 = -1j * _apply_numpy(y + 0.5 * dt * k1, t + 0.5 * dt, *args)
        k3 = -1j * _apply_numpy(y + 0.5 * dt * k2, t + 0.5 * dt, *args)
        k4 = -1j * _apply_numpy(y + dt * k3, t + dt, *args)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def rk4_propagate(psi, t0, dt, nsteps, omega, ej, g, amp, sigma, phi, frame, backend=None):
    """Classical fixed-step RK4 for i d(psi)/dt = H(t) psi."""
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    args = (float(t0), float(dt), int(nsteps), float(omega), float(ej), float(g), float(amp),
            float(sigma), float(phi), int(frame))
    if resolve_backend(backend) == "numba":
        return _rk4_numba(psi, *args)
    return _rk4_numpy(psi, *args)


# --------------------------------------------------------------------------
# Wigner function by the displaced-parity Fock sum:
#   W(beta) = (2/pi) sum_{n,m} rho_nm (-1)^n <m|D(2 beta)|n>
# with the columns of D built by <m|D|n+1> = (sqrt(m) <m-1|D|n> - gamma* <m|D|n>) / sqrt(n+1).


@njit
def _wigner_numba(rho, beta):
    nf = rho.shape[0]
    npts = beta.shape[0]
    out = np.empty(npts, dtype=np.float64)
    col = np.empty(nf, dtype=np.complex128)
    new = np.empty(nf, dtype=np.complex128)
    for p in range(npts):
        gam = 2.0 * beta[p]
        gc = gam.conjugate()
        col[0] = math.exp(-0.5 * (gam.real ** 2 + gam.imag ** 2))
        for m in range(1, nf):
            col[m] = col[m - 1] * gam / math.sqrt(m)
        acc = 0.0j
        sign = 1.0
        for n in range(nf):
            s = 0.0j
            for m in range(nf):
                s += rho[n, m] * col[m]
            acc += sign * s
            sign = -sign
            if n + 1 < nf:
                inv = 1.0 / math.sqrt(n + 1)
                new[0] = -gc * col[0] * inv
                for m in range(1, nf):
                    new[m] = (math.sqrt(m) * col[m - 1] - gc * col[m]) * inv
                for m in range(nf):
                    col[m] = new[m]
        out[p] = 2.0 / math.pi * acc.real
    return out


def _wigner_numpy(rho, beta):
    nf = rho.shape[0]
    gam = 2.0 * beta
    gc = np.conj(gam)
    sq = np.sqrt(np.arange(nf, dtype=np.float64))
    col = np.empty((nf, beta.size), dtype=np.complex128)
    col[0] = np.exp(-0.5 * np.abs(gam) ** 2)
    for m in range(1, nf):
        col[m] = col[m - 1] * gam / sq[m]
    acc = np.zeros(beta.size, dtype=np.complex128)
    for n in range(nf):
        acc += (-1) ** n * (rho[n, :] @ col)
        if n + 1 < nf:
            new = np.empty_like(col)
            new[0] = -gc * col[0]
            new[1:] = sq[1:, None] * col[:-1] - gc * col[1:]
            col = new / math.sqrt(n + 1)
    return 2.0 / math.pi * acc.real


def wigner_points(rho, beta, backend=None):
    """Wigner function of Fock-basis ``rho`` at complex phase-space points ``beta``."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    beta = np.ascontiguousarray(np.ravel(beta), dtype=np.complex128)
    if resolve_backend(backend) == "numba":
        return _wigner_numba(rho, beta)
    return _wigner_numpy(rho, beta)
