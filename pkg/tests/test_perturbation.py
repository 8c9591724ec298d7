import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from catpulse.errors import CalibrationError, DegeneracyError, DomainError, ResolutionError
from catpulse.model import DeviceParams, PulseSpec, TimeGrid
from catpulse.perturbation import (
    TRACE_COLUMNS,
    FGSeries,
    calibrate_pulse,
    compute_fg,
    conditional_map,
    phase_trace,
    theta,
    validity_profile,
)

# Frozen from the symbolic nested integral with constant detuning, evaluated
# at 40 digits: default device, flux off.  (real, imag) in s^2.
FROZEN = {
    ("f_minus", 1e-9): (3.8403860300687194e-26, 4.197054536372919e-22),
    ("f_minus", 1e-8): (1.7126494088249358e-26, 4.1980770262420661e-21),
    ("g_minus", 1e-9): (4.9977337012725788e-24, 1.7203418697316529e-21),
    ("g_minus", 1e-8): (3.5376481442971684e-24, 1.7179236947668206e-20),
}


def symbolic_kernel():
    """out(t) = int_0^t e^{-i r t1} int_0^t1 e^{i r t2} dt2 dt1, integrated by sympy."""
    t, t1, t2 = sp.symbols("t t1 t2", positive=True)
    r = sp.symbols("r", real=True, nonzero=True)
    inner = sp.integrate(sp.exp(sp.I * r * t2), (t2, 0, t1))
    outer = sp.integrate(sp.expand(sp.exp(-sp.I * r * t1) * inner), (t1, 0, t))
    return sp.lambdify((r, t), outer, "numpy")


@pytest.fixture(scope="module")
def oracle():
    k = symbolic_kernel()
    p = DeviceParams()
    c = p.omega - p.ej
    # inner exponent s (2 c + w omega) t with (s, w) = (-1, 1), (1, 1), (-1, -1), (1, -1)
    rates = {"f_minus": -(2 * c + p.omega), "f_plus": 2 * c + p.omega,
             "g_minus": -(2 * c - p.omega), "g_plus": 2 * c - p.omega}
    return lambda name, t: k(rates[name], t)


@pytest.fixture(scope="module")
def off_fg():
    p = DeviceParams()
    pulse = PulseSpec.off(10e-9)
    grid = TimeGrid.for_pulse(p, pulse, resolution=0.05)
    return compute_fg(p, pulse, grid, richardson=True)


def test_symbolic_oracle_matches_frozen(oracle):
    for (name, t), (re, im) in FROZEN.items():
        v = complex(oracle(name, t))
        assert abs(v - complex(re, im)) < 1e-9 * abs(complex(re, im))


@pytest.mark.parametrize("name", ["f_minus", "f_plus", "g_minus", "g_plus"])
def test_constant_detuning_matches_symbolic(off_fg, oracle, name):
    t = off_fg.times[1:]
    exact = oracle(name, t)
    rel = np.abs(getattr(off_fg, name)[1:] - exact) / np.abs(exact)
    assert rel.max() < 1e-6


def test_trapezoid_is_second_order():
    p = DeviceParams()
    pulse = PulseSpec.off(2e-9)
    k = symbolic_kernel()
    exact = k(-(2 * (p.omega - p.ej) + p.omega), 2e-9)
    errs = []
    for res in (0.1, 0.05):
        fg = compute_fg(p, pulse, TimeGrid.for_pulse(p, pulse, resolution=res))
        errs.append(abs(fg.f_minus[-1] - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_theta_off_is_conjugate_pair(off_fg):
    th = theta(off_fg)
    ok = th.valid
    np.testing.assert_array_equal(th.theta_plus[ok], np.conj(th.theta_minus[ok]))
    assert th.t_min_valid == off_fg.times[1]


@given(amp=st.floats(0.0, 1.9), phi=st.floats(0.0, 2 * math.pi),
       sigma_factor=st.floats(0.2, 5.0))
def test_conjugacy_any_pulse(amp, phi, sigma_factor):
    params = DeviceParams()
    pulse = PulseSpec(amplitude_a=amp, phi=phi, sigma=PulseSpec().sigma * sigma_factor,
                      duration=3e-9)
    tr = phase_trace(params, pulse)
    ok = tr.valid
    assert np.max(np.abs(tr.theta_plus[ok] - np.conj(tr.theta_minus[ok]))) <= 1e-10


def test_theta_degeneracy_floor():
    t = np.linspace(0, 1e-9, 5)
    z = np.zeros(5, dtype=complex)
    with pytest.raises(DegeneracyError):
        theta(FGSeries(t, z, z, z, z))
    with pytest.raises(ValueError):
        theta(FGSeries(t, z, z, z, z), floor=0.0)


def test_resolution_guard(params, pulse):
    with pytest.raises(ResolutionError):
        compute_fg(params, pulse, TimeGrid(0.0, pulse.duration, 100))


def test_backends_agree_on_trace(params, pulse):
    a = phase_trace(params, pulse, backend="numba")
    b = phase_trace(params, pulse, backend="numpy")
    ok = a.valid
    np.testing.assert_allclose(a.theta_minus[ok], b.theta_minus[ok], rtol=1e-9)


def test_trace_csv_header(tmp_path, params, pulse):
    tr = phase_trace(params, pulse)
    path = tmp_path / "trace.csv"
    tr.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert lines[0] == ("t_s,re_theta_minus,im_theta_minus_unwrapped,re_theta_plus,"
                        "im_theta_plus_unwrapped,f_minus,f_plus")
    assert len(lines) == tr.grid.n + 1


def test_theta_at_domain(params, pulse):
    tr = phase_trace(params, pulse)
    with pytest.raises(DomainError):
        tr.theta_at(0.0, "-")
    with pytest.raises(DomainError):
        tr.theta_at(2 * pulse.duration, "-")
    assert tr.theta_at(pulse.duration, "+") == pytest.approx(
        complex(tr.theta_plus[-1].real, tr.im_unwrapped("+")[-1]))
    with pytest.raises(ValueError):
        tr.theta("x")


def test_theta_tends_to_two_at_short_times(params, pulse):
    # F and G both start as t^2 / 2
    short = pulse.with_(duration=1e-12)
    gaps = [abs(phase_trace(params, short, TimeGrid.for_pulse(params, short, resolution=r))
                .theta_minus[1] - 2.0) for r in (0.1, 0.01)]
    assert gaps[1] < 0.2 * gaps[0]  # first-node error is linear in dt
    assert gaps[1] < 5e-3


def test_validity_profile_consistent(params, pulse):
    tr = phase_trace(params, pulse)
    prof = validity_profile(tr)
    assert prof.end_minus == pytest.approx(1 - math.exp(2 * tr.theta_minus[-1].real))
    assert prof.end_plus == pytest.approx(prof.end_minus)
    assert 0 < prof.peak_time_minus <= pulse.duration


def test_conditional_map(params, pulse):
    tr = phase_trace(params, pulse)
    m = conditional_map(tr, 0.5, pulse.duration, "-")
    assert abs(m.amplitude) == pytest.approx(0.5 * math.exp(m.theta.real))
    assert m.norm_factor == pytest.approx(math.exp(-0.125 * m.validity))


def test_calibration_unreachable_target_reports_scan(params, pulse):
    with pytest.raises(CalibrationError) as info:
        calibrate_pulse(params, pulse, "phi", -3 * math.pi, scan_values=np.linspace(0, 6, 5))
    assert len(info.value.scan) == 5


def test_calibration_hits_reachable_target(params, pulse):
    # a target inside the range produced by phi
    values = np.linspace(0.0, 2 * math.pi, 9)
    from catpulse.perturbation import end_phase
    phases = [end_phase(params, pulse.with_(phi=float(v))) for v in values]
    target = 0.5 * (phases[1] + phases[2])
    res = calibrate_pulse(params, pulse, "phi", target, tol=1e-8, scan_values=values)
    assert abs(res.achieved_phase - target) <= 1e-8
    assert values[1] <= res.value <= values[2] or values[2] <= res.value <= values[1]


def test_calibration_rejects_unknown_parameter(params, pulse):
    with pytest.raises(ValueError):
        calibrate_pulse(params, pulse, "amplitude_a", 0.0)
