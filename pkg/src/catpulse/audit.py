"""Consistency audit of the default parameter set and the closed-form results.

Every check runs to completion and reports a finding; nothing here raises on a
bad result. The report is plain text plus a JSON twin with the raw numbers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import decoherence as deco
from .errors import NumericalContractError
from .model import hierarchy_audit, is_perturbative, perturbative_ratio
from .perturbation import end_phase, phase_trace, validity_profile

#: alternative pulse frequency (rad/s), checked against the 7.5 ns operation time
REFERENCE_SIGMA = 8 * math.pi * 1e6
TARGET_PHASE = -3 * math.pi


@dataclass
class Section:
    key: str
    title: str
    lines: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, text: str) -> None:
        self.lines.append(text)


def conjugacy_section(cfg) -> Section:
    sec = Section("conjugacy", "Branch conjugacy of theta and the conditional-phase target")
    trace = phase_trace(cfg.device, cfg.pulse)
    ok = trace.valid
    dev = float(np.max(np.abs(trace.theta_plus[ok] - np.conj(trace.theta_minus[ok]))))
    im_m = float(trace.im_unwrapped("-")[-1])
    im_p = float(trace.im_unwrapped("+")[-1])
    sec.data.update(max_deviation=dev, im_theta_minus_end=im_m, im_theta_plus_end=im_p,
                    re_theta_end=float(trace.theta_minus[-1].real))
    sec.add(f"max |theta+ - conj(theta-)| over the pulse: {dev:.3e}")
    sec.add(f"Im theta- at t_end = {im_m:+.6e} rad, Im theta+ = {im_p:+.6e} rad")
    sec.add("theta+ is the complex conjugate of theta-, so the two branches rotate the field "
            "by opposite angles of equal size; branch phases that are not negatives of each other cannot "
            "come from this model.")

    reach = []
    for factor in cfg.section("audit")["calibration_sigma_factors"]:
        pulse = cfg.pulse.with_(sigma=cfg.pulse.sigma * factor)
        try:
            reach.append((factor, end_phase(cfg.device, pulse)))
        except NumericalContractError as exc:
            sec.add(f"sigma x {factor:g}: skipped ({exc})")
    for phi in np.linspace(0, 2 * math.pi, 9)[:-1]:
        pulse = cfg.pulse.with_(phi=float(phi))
        try:
            reach.append((f"phi={phi:.3f}", end_phase(cfg.device, pulse)))
        except NumericalContractError as exc:
            sec.add(f"phi = {phi:.3f}: skipped ({exc})")
    phases = [p for _, p in reach if math.isfinite(p)]
    lo, hi = (min(phases), max(phases)) if phases else (math.nan, math.nan)
    sec.data.update(reach=[[str(k), v] for k, v in reach], reach_min=lo, reach_max=hi,
                    target_reachable=bool(lo <= TARGET_PHASE <= hi))
    sec.add(f"Im theta-(t_end) over the sigma/phi sweep spans [{lo:+.4g}, {hi:+.4g}] rad; "
            f"target {TARGET_PHASE:+.4f} rad is "
            f"{'inside' if lo <= TARGET_PHASE <= hi else 'outside'} that range.")
    return sec


def validity_section(cfg) -> Section:
    sec = Section("validity", "Size of the real part of theta (validity function f)")
    prof = validity_profile(phase_trace(cfg.device, cfg.pulse))
    sec.data.update(end_minus=prof.end_minus, end_plus=prof.end_plus,
                    max_abs_plus=prof.max_abs_plus, peak_time_minus=prof.peak_time_minus,
                    peak_value_minus=prof.peak_value_minus)
    sec.add(f"f-(t_end) = {prof.end_minus:+.4e}, f+(t_end) = {prof.end_plus:+.4e}, "
            f"max|f+| = {prof.max_abs_plus:.4e}")
    sec.add(f"largest |f-| at t = {prof.peak_time_minus * 1e9:.3f} ns (value {prof.peak_value_minus:+.4e})")
    if abs(prof.end_minus) > 1e-2:
        sec.add("f is not small at the end of the pulse: Re theta stays near 1 + Re(F/G), "
                "so the coherent-state map changes the field amplitude, not only its phase.")
    return sec


def positivity_section(cfg) -> Section:
    sec = Section("positivity", "Positivity of the joint qubit-field state")
    bath = cfg.bath
    tau_phi = deco.timescales(bath).tau_phi
    n = cfg.section("audit")["positivity_points"]
    t = np.linspace(0.0, 5 * tau_phi, n)
    form = cfg.section("decoherence")["form"]
    for halved, label in ((False, "nominal"), (True, "halved")):
        ev = deco.positivity_scan(bath, cfg.alpha, t, form=form, pt_halved=halved)
        k = int(np.argmin(ev))
        sec.data[label] = {"min_eigenvalue": float(ev[k]), "t_at_min": float(t[k]),
                           "negative_fraction": float(np.mean(ev < -1e-12))}
        sec.add(f"{label:>7} P_T: min eigenvalue {ev[k]:+.4e} at t = {t[k]:.4e} s; "
                f"negative on {100 * np.mean(ev < -1e-12):.1f}% of the grid")
    sec.add(f"grid: {n} points on [0, 5 tau_phi], tau_phi = {tau_phi:.4e} s, form = {form}")
    sec.add("With the nominal amplitude |P_T| exceeds sqrt(P0 P1) at short times; "
            "half of it keeps the state positive.")
    return sec


def timescale_section(cfg) -> Section:
    sec = Section("timescales", "Magnitude of the relaxation time")
    real = cfg.bath.with_(scale=1.0)
    scaled = cfg.bath.with_(scale=1000.0)
    for label, bath in (("physical", real), ("scaled x1e-3", scaled)):
        ts = deco.timescales(bath)
        sec.data[label] = {"lambda": ts.lam, "tau_r": ts.tau_r, "tau_phi": ts.tau_phi,
                           "period": 2 * math.pi / bath.splitting}
        sec.add(f"{label:>13}: Lambda = {ts.lam:.4g}, tau_r = {ts.tau_r:.4e} s, "
                f"tau_phi = {ts.tau_phi:.4e} s, period = {2 * math.pi / bath.splitting:.4e} s")
    sec.add("The relaxation-time formula yields nanoseconds at the physical splitting; a "
            "microsecond relaxation time only follows after dividing the splitting by 1000.")
    return sec


def hierarchy_section(cfg) -> Section:
    sec = Section("hierarchy", "Energy hierarchy and perturbative regime")
    for check in hierarchy_audit(cfg.device):
        sec.data[check.name] = {"ratio": check.ratio, "status": check.status}
        sec.add(f"{check.name:<10} ratio {check.ratio:.4f}  {check.status}")
    ratio = perturbative_ratio(cfg.device, cfg.pulse)
    sec.data["perturbative_ratio"] = ratio
    sec.data["perturbative"] = is_perturbative(cfg.device, cfg.pulse)
    sec.add(f"g / min|E_J cos - omega| = {ratio:.4e} "
            f"({'perturbative' if sec.data['perturbative'] else 'NOT perturbative'})")
    return sec


def pulse_section(cfg) -> Section:
    sec = Section("pulse_timing", "Pulse frequency versus operation time")
    half = math.pi / REFERENCE_SIGMA
    own = math.pi / cfg.pulse.sigma
    sec.data.update(reference_sigma=REFERENCE_SIGMA, reference_half_period=half,
                    configured_sigma=cfg.pulse.sigma, configured_half_period=own,
                    duration=cfg.pulse.duration)
    sec.add(f"sigma = 8 pi x 1e6 rad/s has half-period {half * 1e9:.1f} ns, not 7.5 ns")
    sec.add(f"configured sigma = {cfg.pulse.sigma:.6e} rad/s, half-period {own * 1e9:.3f} ns, "
            f"duration {cfg.pulse.duration * 1e9:.3f} ns")
    return sec


SECTIONS = (conjugacy_section, validity_section, positivity_section, timescale_section,
            hierarchy_section, pulse_section)


def run_audit(cfg) -> list[Section]:
    out = []
    for fn in SECTIONS:
        try:
            out.append(fn(cfg))
        except Exception as exc:  # an audit reports, it never aborts
            sec = Section(fn.__name__.removesuffix("_section"), fn.__name__)
            sec.add(f"check failed to run: {type(exc).__name__}: {exc}")
            sec.data["error"] = str(exc)
            out.append(sec)
    return out


def render(sections: list[Section]) -> str:
    chunks = []
    for sec in sections:
        chunks.append(f"== {sec.title} [{sec.key}]")
        chunks.extend(f"  {line}" for line in sec.lines)
        chunks.append("")
    return "\n".join(chunks)


def write_report(sections: list[Section], text_path, json_path) -> None:
    with open(text_path, "w") as fh:
        fh.write(render(sections))
    with open(json_path, "w") as fh:
        json.dump({s.key: s.data for s in sections}, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
