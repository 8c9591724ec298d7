import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catpulse import analysis
from catpulse import decoherence as D
from catpulse.errors import TruncationError
from catpulse.model import DeviceParams


@pytest.fixture
def bath():
    return D.BathParams.from_device(DeviceParams())


@pytest.fixture
def scaled():
    return D.BathParams.from_device(DeviceParams(), scale=1000.0)


def test_delta_e_examples():
    assert D.delta_e(DeviceParams()) == 2 * 15.9e10
    assert D.delta_e(DeviceParams(ng=0.2, ec=1e-300)) == pytest.approx(2 * 15.9e10)
    p = DeviceParams(ng=0.0, ej=1e-300)
    assert D.delta_e(p) == pytest.approx(4 * p.ec)


def test_bath_validation():
    for kw in (dict(beta=0), dict(delta_e=-1.0), dict(scale=0.5), dict(temperature=0)):
        with pytest.raises(ValueError):
            D.BathParams(**kw)


def test_timescales_physical(bath):
    ts = D.timescales(bath)
    assert ts.lam == pytest.approx(40.48, rel=1e-3)
    assert ts.tau_r == pytest.approx(1.0e-9, rel=2e-3)
    assert ts.tau_phi == pytest.approx(1.9e-9, rel=1e-2)


def test_timescales_scaled(scaled):
    ts = D.timescales(scaled)
    assert ts.tau_r == pytest.approx(1.0e-6, rel=2e-3)
    assert ts.tau_phi == pytest.approx(39.72e-9, rel=1e-3)
    # Lambda keeps the physical splitting by default
    assert ts.lam == pytest.approx(D.timescales(scaled.with_(scale=1.0)).lam)


def test_timescales_fully_scaled(scaled):
    ts = D.timescales(scaled.with_(scale_lambda=True))
    assert ts.lam == pytest.approx(0.04048, rel=1e-3)
    assert ts.tau_r < D.timescales(scaled).tau_r


def test_large_lambda_limit():
    b = D.BathParams(temperature=1e-4)
    assert D.timescales(b).tau_r == pytest.approx(1 / (math.pi * b.beta * b.delta_e), rel=1e-12)


def test_probabilities_t0(bath):
    for form in D.FORMS:
        p0, p1, pt = D.probabilities(bath, 0.0, form)
        assert (p0, p1, pt) == (1.0, 0.0, 0.0)


def test_probabilities_half_period(bath):
    t = math.pi / bath.splitting
    p0, _, _ = D.probabilities(bath, t, "simplified")
    assert p0 == pytest.approx(0.5 * (1 - math.exp(-t / D.timescales(bath).tau_phi)), abs=1e-15)


def test_probabilities_reject_negative_time(bath):
    with pytest.raises(ValueError):
        D.probabilities(bath, -1e-9)
    with pytest.raises(ValueError):
        D.probabilities(bath, 0.0, form="approx")


@given(st.floats(0, 1e-7))
def test_simplified_sums_to_one(t):
    b = D.BathParams.from_device(DeviceParams(), scale=1000.0)
    p0, p1, _ = D.probabilities(b, t, "simplified")
    assert p0 + p1 == 1.0 or abs(p0 + p1 - 1.0) <= 2e-16
    assert 0 <= p0 <= 1 and 0 <= p1 <= 1
    assert sum(D.sequential_probs(b, t)) == pytest.approx(1.0, abs=1e-15)


@given(st.floats(0, 1e-7))
def test_full_form_bounded(t):
    b = D.BathParams.from_device(DeviceParams(), scale=1000.0)
    p0, p1, _ = D.probabilities(b, t)
    assert -1e-15 <= p0 <= 1 + 1e-15 and -1e-15 <= p1 <= 1 + 1e-15


def test_three_tau_phi_near_half(scaled):
    t = 3 * D.timescales(scaled).tau_phi
    for form in D.FORMS:
        p0, p1, _ = D.probabilities(scaled, t, form)
        assert abs(p0 - 0.5) <= math.exp(-3) and abs(p1 - 0.5) <= math.exp(-3)


def test_coherence_profile(scaled):
    ts = D.timescales(scaled)
    t = np.linspace(0, 5 * ts.tau_phi, 20001)
    c = D.coherence_profile(scaled, t)
    assert c[0] == 1.0
    np.testing.assert_allclose(c, np.cos(scaled.splitting * t) * np.exp(-t / ts.tau_phi),
                               atol=1e-15)
    zero = (math.pi / 2) / scaled.splitting
    assert abs(D.coherence_profile(scaled, zero)) < 1e-15


def test_envelope_log_fit(scaled):
    ts = D.timescales(scaled)
    period = 2 * math.pi / scaled.splitting
    tk = np.arange(0, 5 * ts.tau_phi, period / 2)  # extrema of the cosine
    env = np.abs(D.coherence_profile(scaled, tk))
    slope = np.polyfit(tk, np.log(env), 1)[0]
    assert slope == pytest.approx(-1 / ts.tau_phi, rel=1e-2)


def test_joint_state_t0_is_pure(bath):
    j = D.joint_state(bath, 1.0, 0.0)
    np.testing.assert_allclose(j.sector, [[1, 0], [0, 0]], atol=1e-15)
    assert np.trace(j.sector).real == pytest.approx(1.0)
    emb = j.to_fock(20)
    assert np.trace(emb).real == pytest.approx(1.0, abs=1e-12)
    assert np.real(np.trace(emb @ emb)) == pytest.approx(1.0, abs=1e-12)


def test_joint_state_long_time(bath):
    j = D.joint_state(bath, 1.0, 100 * D.timescales(bath).tau_phi, form="simplified")
    np.testing.assert_allclose(j.sector, 0.5 * np.eye(2), atol=1e-15)


def test_joint_state_positivity_audit(scaled):
    t = np.linspace(0, 5 * D.timescales(scaled).tau_phi, 1001)
    nominal = D.positivity_scan(scaled, 1.0, t)
    halved = D.positivity_scan(scaled, 1.0, t, pt_halved=True)
    assert nominal.min() < -0.1
    assert halved.min() >= -1e-12


def test_logical_states_orthonormal():
    l0, l1 = D.logical_states(1.0, 20)
    assert np.vdot(l0, l0).real == pytest.approx(1.0, abs=1e-12)
    assert np.vdot(l1, l1).real == pytest.approx(1.0, abs=1e-12)
    assert abs(np.vdot(l0, l1)) < 1e-15


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_preselected_field_contract(scaled, alpha):
    ts = D.timescales(scaled)
    s = math.exp(-2 * alpha ** 2)
    for t in np.linspace(0, 3 * ts.tau_phi, 7):
        rho = D.preselected_field(scaled, alpha, t, 30)
        c = D.coherence_coefficient(scaled, t)
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert analysis.min_eigenvalue(rho) >= -1e-10
        cf = analysis.coherent_frame_coefficients(rho, alpha)
        assert (cf[0, 1] / cf[0, 0]).real == pytest.approx(c, abs=1e-12)
        assert rho.coherent_coeffs[0, 1] / rho.coherent_coeffs[0, 0] == c
        # parity of the mixture: (s + c) / (1 + c s)
        assert analysis.parity(rho) == pytest.approx((s + c) / (1 + c * s), abs=1e-12)


def test_preselected_field_t0_is_even_cat(scaled):
    rho = D.preselected_field(scaled, 1.2, 0.0, 30)
    assert analysis.purity(rho) == pytest.approx(1.0, abs=1e-10)
    assert analysis.cat_fidelity(rho, 1.2, "even") == pytest.approx(1.0, abs=1e-10)


def test_preselected_field_vacuum(scaled):
    rho = D.preselected_field(scaled, 0.0, 0.0, 12)
    assert rho.coherent_coeffs[0, 0] == pytest.approx(0.25)  # N = 4
    assert rho.matrix[0, 0].real == pytest.approx(1.0)


def test_preselected_field_dephased_mixture(scaled):
    t = (math.pi / 2) / scaled.splitting
    rho = D.preselected_field(scaled, 1.0, t, 20)
    assert rho.coherent_coeffs[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert rho.coherent_coeffs[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_preselected_field_truncation(scaled):
    with pytest.raises(TruncationError):
        D.preselected_field(scaled, 1.5, 0.0, 10)


def test_purity_decreases_to_first_node(scaled):
    quarter = (math.pi / 2) / scaled.splitting
    pur = [analysis.purity(D.preselected_field(scaled, 1.0, t, 20))
           for t in np.linspace(0, quarter, 25)]
    assert np.all(np.diff(pur) <= 1e-14)


def test_sample_sequence(scaled):
    ts = D.timescales(scaled)
    zero = D.sample_sequence(scaled, 7, 1000, 0.0)
    assert np.all(zero.outcomes == 0)
    a = D.sample_sequence(scaled, 11, 100_000, 3 * ts.tau_phi)
    b = D.sample_sequence(scaled, 11, 100_000, 3 * ts.tau_phi)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    p0 = float(D.probabilities(scaled, 3 * ts.tau_phi)[0])
    assert abs(D.binomial_z(a, p0)) < 3
    with pytest.raises(ValueError):
        D.sample_sequence(scaled, 1, 0, 0.0)


def test_detection_record_jsonl(tmp_path, scaled):
    rec = D.sample_sequence(scaled, 3, 4, 1e-9)
    path = tmp_path / "rec.jsonl"
    rec.write_jsonl(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith('{"cycle_index": 0, "outcome": ')


def test_decoherence_csv(tmp_path, scaled):
    path = tmp_path / "d.csv"
    D.write_decoherence_csv(path, scaled, np.linspace(0, 1e-7, 11))
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# tau_r=")
    assert lines[1] == "t_s,p0,p1,re_pt,im_pt,coherence"
    first = [float(x) for x in lines[2].split(",")]
    assert first[:3] == [0.0, 1.0, 0.0]
