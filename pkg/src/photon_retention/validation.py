"""Release gate: invariant and oracle checks, each reported as one pass/fail line.

``run_checks(fault=True)`` flips the sign of the AC-Stark term inside the
compiled kernel only; the closed-form oracles are untouched, so at least the
Stark-phase check must fail.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, theory
from .fourlevel import compare_elimination
from .model import (
    HBAR,
    BlochState,
    DerivedRates,
    FieldTriple,
    MediumParams,
    PulseSpec,
    Role,
    bloch_rhs,
    derive_rates,
    two_photon_terms,
)
from .solver import RunConfig, SimulationGrid, convergence_check, integrate_slice, propagate


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34s} {self.detail}  [{self.seconds:.1f} s]"


class Session:
    """Caches propagate() results for one validation pass."""

    def __init__(self, stark_sign: float = 1.0):
        self.stark_sign = stark_sign
        self._cache: dict = {}

    def run(self, tau: float = 0.0, rho_bb: float = 0.2, **overrides):
        key = (tau, rho_bb, tuple(sorted(overrides.items())))
        if key not in self._cache:
            cfg = RunConfig(delay_tau=tau, initial_state=BlochState(rho_BB=rho_bb))
            if overrides:
                cfg = cfg.replace(**overrides)
            self._cache[key] = propagate(cfg, stark_sign=self.stark_sign)
        return self._cache[key]

    def records(self):
        return list(self._cache.values())


def _grid(nt: int, dt: float, length: float = 1.5e-4) -> SimulationGrid:
    return SimulationGrid(nz=1, nt=nt, dz=length, dt=dt, t_start=0.0)


def _bare(**kw) -> tuple[MediumParams, DerivedRates]:
    """Parameters for reduced-model oracles; bypasses validation on purpose."""
    p = MediumParams(**kw)
    return p, derive_rates(p, check=False)


# --- model -----------------------------------------------------------------


def check_rates(s: Session):
    r = derive_rates(MediumParams())
    ok = r.Gamma_AX == 0.5 * 1e7 + 1e9 and math.isclose(r.eta_BX, 3 * 4e22 * 329.3e-9**2 * 1e7 / (8 * math.pi))
    return ok, f"Gamma_AX={r.Gamma_AX:.6g} 1/s eta_BX={r.eta_BX:.4g} rad/(s m)"


def check_ground_stationary(s: Session):
    p = MediumParams()
    d = bloch_rhs(BlochState(), FieldTriple(), 0j, 0.0, derive_rates(p), p)
    ok = d == BlochState(0.0, 0.0, 0j, 0j, 0j)
    return ok, "ground state has zero derivative"


def check_source_linearity(s: Session):
    p = MediumParams()
    r = derive_rates(p)
    base = bloch_rhs(BlochState(), FieldTriple(omega1=1e13), 0j, 0.0, r, p).rho_AX
    worst = 0.0
    for k in (2.0, 3.0, 0.5):
        d = bloch_rhs(BlochState(), FieldTriple(omega1=k * 1e13), 0j, 0.0, r, p).rho_AX
        worst = max(worst, abs(d - k * base) / abs(k * base))
    return worst < 1e-14, f"max relative deviation {worst:.1e}"


def check_two_photon_forms(s: Session):
    p = MediumParams()
    tp, st = two_photon_terms(3e10, 0.7e10, p)
    tp2, st2 = two_photon_terms(6e10, 0.7e10, p)
    tp3, st3 = two_photon_terms(6e10, 1.4e10, p)
    ok = math.isclose(abs(tp2), 2 * abs(tp), rel_tol=1e-14) and math.isclose(abs(tp3), 4 * abs(tp), rel_tol=1e-14)
    ok &= math.isclose(st3, 4 * st, rel_tol=1e-14)
    return ok, f"|tp|={abs(tp):.4g} rad/s, bilinear/quadratic scaling exact"


def check_conjugation_symmetry(s: Session):
    """Conjugate initial state with H -> -H* (couplings -> -conj, delta -> -delta) gives the conjugate trajectory."""
    p = MediumParams()
    q = dataclasses.replace(p, delta=-p.delta)
    r = derive_rates(p)
    nt, dt = 4000, 0.1e-15
    t = dt * np.arange(nt)
    env = np.exp(-2 * np.log(2) * ((t - 200e-15) / 50e-15) ** 2)
    w1 = (2e14 + 5e13j) * env
    ws = (1e12 - 3e12j) * env
    w2 = (6e13 + 1e13j) * env
    y0 = BlochState(0.1, 0.2, 0.05 + 0.02j, 0.01 - 0.03j, -0.02 + 0.01j)
    a = integrate_slice(w1, ws, w2, y0, r, p, _grid(nt, dt), s.stark_sign)
    b = integrate_slice(-w1.conj(), -ws.conj(), -w2.conj(), y0.conjugate(), r, q, _grid(nt, dt), s.stark_sign)
    ok = np.array_equal(a.conj(), b)
    diff = np.max(np.abs(a.conj() - b))
    return ok, f"max |difference| {diff:.1e} (bit-exact required)"


def check_stark_phase(s: Session):
    """With only the read field on, rho_BA rotates at exactly the Stark rate |Omega_BI|^2 / delta."""
    p, r = _bare()
    e2 = 3e10
    _tp, stark = two_photon_terms(0.0, e2, p)
    nt, dt = 2001, 0.1e-15
    w_read = np.full(nt, p.dipole_BI * e2 / HBAR, dtype=complex)
    y0 = BlochState(0.3, 0.3, 0j, 0.1 + 0j, 0j)
    hist = integrate_slice(np.zeros(nt), np.zeros(nt), w_read, y0, r, p, _grid(nt, dt), s.stark_sign)
    T = dt * (nt - 1)
    expected = 0.1 * np.exp((-r.Gamma_BA + 1j * stark) * T)
    err = abs(hist[-1, 3] - expected) / abs(expected)
    return err < 1e-6, f"rho_BA(T) relative error {err:.1e} vs exp((-Gamma_BA + i*stark) T), stark phase {stark * T:.2f} rad"


# --- solver -----------------------------------------------------------------


def check_linear_decay(s: Session):
    p, r = _bare()
    nt, dt = 10001, 0.1e-15
    c0 = 0.3 + 0.1j
    hist = integrate_slice(np.zeros(nt), np.zeros(nt), np.zeros(nt), BlochState(rho_AX=c0), r, p, _grid(nt, dt))
    t = dt * np.arange(nt)
    err = np.max(np.abs(hist[:, 2] - c0 * np.exp(-r.Gamma_AX * t)) / np.abs(c0 * np.exp(-r.Gamma_AX * t)))
    return err < 1e-8, f"max relative error {err:.1e} over 1 ps"


def check_rabi(s: Session):
    """Two-level reduction: rho_AA = sin^2(W T / 2) with W = 2 * dipole * E / hbar."""
    p, r = _bare(dipole_BI=0.0, dipole_BX=0.0, gamma_A=0.0, gamma_B=0.0, gamma_col=0.0)
    w = 1e13
    nt, dt = 10001, 0.1e-15
    hist = integrate_slice(np.full(nt, w + 0j), np.zeros(nt), np.zeros(nt), BlochState(), r, p, _grid(nt, dt))
    t = dt * np.arange(nt)
    err = np.max(np.abs(hist[:, 0].real - np.sin(2 * w * t / 2) ** 2))
    return err < 1e-6, f"max |rho_AA - sin^2(W t/2)| = {err:.1e}"


def check_frozen_medium(s: Session):
    cfg = RunConfig(pulses=[PulseSpec(Role.PUMP, 0.0), PulseSpec(Role.READ, 0.0)])
    rec = propagate(cfg, frozen_state=BlochState(rho_BX=0.01))
    rates = derive_rates(cfg.params)
    expected = rates.eta_BX * 0.01 * cfg.params.length
    err = np.max(np.abs(np.abs(rec.omega_s_out) - expected)) / expected
    return err < 1e-10, f"|Omega_s(L)| relative error {err:.1e}"


def check_zero_fields(s: Session):
    cfg = RunConfig(
        pulses=[PulseSpec(Role.PUMP, 0.0), PulseSpec(Role.READ, 0.0)],
        initial_state=BlochState(rho_AA=0.1, rho_BB=0.3),
        tail_window=300e-15,
    )
    rec = propagate(cfg, stark_sign=s.stark_sign)
    t = rec.times - rec.times[0]
    hist = rec.rho_at()
    ok = not np.any(rec.omega1_out) and not np.any(rec.omega_s_out)
    err = np.max(np.abs(hist[:, 1].real - 0.3 * np.exp(-cfg.params.gamma_B * t))) / 0.3
    return ok and err < 1e-10, f"fields identically zero, rho_BB decay error {err:.1e}"


def check_trace_bound(s: Session):
    worst = 0.0
    for rec in s.records():
        for hist in rec.rho_history.values():
            xx = 1.0 - hist[:, 0].real - hist[:, 1].real
            for pop in (xx, hist[:, 0].real, hist[:, 1].real):
                worst = max(worst, float(np.max(pop - 1.0)), float(np.max(-pop)))
    return worst <= 1e-9, f"largest excursion outside [0, 1]: {worst:.1e} over {len(s.records())} runs"


def check_determinism(s: Session):
    cfg = RunConfig(tail_window=400e-15)
    a = propagate(cfg, stark_sign=s.stark_sign)
    b = propagate(cfg, stark_sign=s.stark_sign)
    ok = np.array_equal(a.omega_s_out, b.omega_s_out) and np.array_equal(a.omega1_out, b.omega1_out)
    return ok, "repeated run bit-identical" if ok else "runs differ"


def check_causality(s: Session):
    rec = s.run(0.0, 0.2)
    pump = rec.config.pulse(Role.PUMP)
    early = rec.times <= pump.center_time - 3 * pump.duration_fwhm + 1e-21
    ratio = float(np.max(np.abs(rec.omega_s_out[early])) / np.max(np.abs(rec.omega1_out)))
    return ratio < 1e-30, f"max |Omega_s| / peak pump before -3 durations: {ratio:.1e}"


def check_convergence(s: Session):
    rep = convergence_check(RunConfig(), 2)
    return rep.passed, f"relative change of signal integral under x2 refinement {rep.relative_change:.2e}"


def _weak(s: Session, scale: float):
    pulses = [PulseSpec(Role.PUMP, 3e10 * scale), PulseSpec(Role.READ, 0.7e10)]
    return s.run(0.0, 0.2, pulses=tuple(pulses))


def check_weak_linearity(s: Session):
    a, b = _weak(s, 1e-3), _weak(s, 1e-2)
    after = a.times > 150e-15
    ma = np.max(np.abs(a.rho_at()[after, 2]))
    mb = np.max(np.abs(b.rho_at()[after, 2]))
    ea = np.sum(np.abs(a.omega1_out[after]) ** 2)
    eb = np.sum(np.abs(b.omega1_out[after]) ** 2)
    lin = abs(mb / ma / 10 - 1)
    quad = abs(eb / ea / 100 - 1)
    return lin < 0.01 and quad < 0.02, f"coherence ratio error {lin:.2e} (<1%), tail energy ratio error {quad:.2e} (<2%)"


def check_retention_tail_rate(s: Session):
    rec = s.run(0.0, 0.2)
    pump = rec.config.pulse(Role.PUMP)
    m = rec.times > pump.center_time + 5 * pump.duration_fwhm
    t, y = rec.times[m], np.abs(rec.omega1_out[m])
    _amp, rate, _res = analysis.exp_fit(np.column_stack([t, y]))
    g = derive_rates(rec.config.params).Gamma_AX
    err = abs(rate / g - 1)
    return err < 0.2, f"tail log-slope rate {rate:.3g} 1/s vs Gamma_AX {g:.3g} 1/s"


# --- theory ---------------------------------------------------------------


def check_perturbative_coherence(s: Session):
    rec = _weak(s, 1e-3)
    p = rec.config.params
    inp = theory.PerturbativeInputs(
        peak_rabi_pump=p.dipole_AX * 3e10 * 1e-3 / HBAR,
        duration_fwhm=50e-15,
        rho_XX0=0.8,
        rho_AA0=0.0,
        rho_BB0=0.2,
        Gamma_AX=derive_rates(p).Gamma_AX,
    )
    m = (rec.times >= 0.2e-12) & (rec.times <= 1e-12)
    solver = np.abs(rec.rho_at(0.0)[m, 2])
    formula = np.abs(theory.perturbative_coherence(inp, rec.times[m]))
    err = float(np.max(np.abs(solver / formula - 1)))
    return err < 0.1, f"entrance-plane |rho_AX| vs first-order formula, max relative error {err:.2e}"


def check_theory_forms(s: Session):
    inp = theory.PerturbativeInputs(1e14, 50e-15, 1.0, 0.0, 0.4, 1e9, 5e13)
    t = np.linspace(0, 2e-12, 5)
    ratio = theory.retained_intensity(inp, t) / theory.retained_intensity(inp, 0.0)
    ok = np.allclose(ratio, np.exp(-2e9 * t), rtol=1e-13, atol=0)
    r16 = theory.tpa_rate_estimate(inp, 0.0) / theory.tpa_rate_estimate(dataclasses.replace(inp, rho_BB0=0.1), 0.0)
    ok &= math.isclose(r16, 16.0, rel_tol=1e-12)
    return ok, f"intensity decays at 2 Gamma exactly; TPA ratio 0.4 vs 0.1 = {r16:.12g}"


# --- four-level oracle --------------------------------------------------


def check_elimination_weak(s: Session):
    c = compare_elimination(initial=BlochState(rho_BB=0.4), e1_peak=3e9, e2_peak=0.7e9, pin_ix=True)
    return c.envelope_error < 0.05, f"explicit level I (I-X coherence held at 0), weak fields: error {c.envelope_error:.2e}"


def check_elimination_reference(s: Session):
    c = compare_elimination(initial=BlochState(rho_BB=0.2))
    return c.envelope_error < 0.05, f"explicit level I at reference fields: |rho_BA| error {c.envelope_error:.2e} (limit 5e-2)"


# --- analysis -----------------------------------------------------------


def check_parseval(s: Session):
    rec = s.run(0.0, 0.2)
    spec = analysis.power_spectrum(rec.omega_s_out, rec.grid.dt)
    df = spec.freq_offset[1] - spec.freq_offset[0]
    err = abs(spec.power.sum() * df / analysis.integrated_signal(rec) - 1)
    return err < 1e-9, f"spectral energy vs time-domain energy relative error {err:.1e}"


def check_time_bandwidth(s: Session):
    dt = 0.1e-15
    t = dt * (np.arange(20000) - 10000)
    x = np.exp(-2 * np.log(2) * (t / 50e-15) ** 2)
    spec = analysis.power_spectrum(x, dt)
    tbp = spec.fwhm * 50e-15
    err = abs(tbp / (2 * np.log(2) / np.pi) - 1)
    return err < 0.02, f"Gaussian time-bandwidth product {tbp:.4f} (2 ln2/pi = 0.4413)"


def check_fit_equivariance(s: Session):
    t = np.linspace(0, 2e-12, 10)
    y = 5 * np.exp(-t / 0.7e-12)
    a1, r1, _ = analysis.exp_fit(np.column_stack([t, y]))
    a2, r2, _ = analysis.exp_fit(np.column_stack([t, 7.5 * y]))
    ok = abs(r1 * 0.7e-12 - 1) < 1e-9 and abs(r2 / r1 - 1) < 1e-12 and abs(a2 / a1 / 7.5 - 1) < 1e-12
    return ok, f"rate recovered to {abs(r1 * 0.7e-12 - 1):.1e}, scale-equivariant"


def check_phase_invariance(s: Session):
    rec = s.run(0.0, 0.2)
    rot = dataclasses.replace(rec, omega_s_out=rec.omega_s_out * np.exp(0.7j))
    a, b = analysis.integrated_signal(rec), analysis.integrated_signal(rot)
    err = abs(a / b - 1)
    return err < 1e-12, f"global phase changes signal integral by {err:.1e}"


# --- reference-parameter targets ----------------------------------------------


def check_tail_ratio(s: Session):
    ratios = [analysis.tail_peak_ratio(s.run(0.0, bb), 250e-15) for bb in (0.0, 0.1, 0.2, 0.4)]
    ref = ratios[2]
    spread = max(ratios) / min(ratios)
    ok = 1e-9 <= ref <= 1e-6 and spread <= 3
    return ok, f"tail/peak {ref:.2e} (band [1e-9, 1e-6]); spread over rho_BB(0) x{spread:.2f} (<=3)"


def check_delayed_suppression(s: Session):
    ratio = analysis.integrated_signal(s.run(1e-12, 0.0)) / analysis.integrated_signal(s.run(0.0, 0.0))
    return ratio <= 1e-8, f"signal(tau=1 ps)/signal(tau=0) at rho_BB(0)=0: {ratio:.2e} (<=1e-8)"


def check_population_enhancement(s: Session):
    recs = [s.run(1e-12, bb) for bb in (0.0, 0.1, 0.2, 0.4)]
    sig = [analysis.integrated_signal(r) for r in recs]
    ba = [float(np.max(np.abs(r.rho_at()[:, 3]))) for r in recs]
    ok = all(np.diff(sig) > 0) and all(np.diff(ba) > 0)
    return ok, "signal " + " < ".join(f"{v:.2e}" for v in sig) + "; max|rho_BA| " + " < ".join(f"{v:.2e}" for v in ba)


def check_spectral_narrowing(s: Session):
    a = analysis.power_spectrum(s.run(0.0, 0.2).omega_s_out, 0.1e-15)
    b = analysis.power_spectrum(s.run(1e-12, 0.2).omega_s_out, 0.1e-15)
    ok = b.fwhm < a.fwhm / 3 and abs(a.asymmetry) > 0.1 and abs(b.asymmetry) < 0.05
    return ok, (
        f"FWHM {a.fwhm / 1e12:.3f} -> {b.fwhm / 1e12:.3f} THz (need < 1/3); "
        f"asymmetry {a.asymmetry:+.3f} (>0.1) / {b.asymmetry:+.3f} (<0.05)"
    )


def check_decay_law(s: Session):
    taus = np.arange(500, 2001, 100) * 1e-15
    vals = [analysis.integrated_signal(s.run(float(t), 0.4)) for t in taus]
    _a, rate, _r = analysis.exp_fit(np.column_stack([taus, vals]))
    target = 2 * derive_rates(MediumParams()).Gamma_AX
    return abs(rate / target - 1) < 0.2, f"fitted rate {rate:.3g} 1/s vs 2 Gamma_AX = {target:.3g} 1/s"


CHECKS: list[tuple[str, Callable]] = [
    ("model.rates", check_rates),
    ("model.ground_stationary", check_ground_stationary),
    ("model.source_linearity", check_source_linearity),
    ("model.two_photon_forms", check_two_photon_forms),
    ("model.conjugation_symmetry", check_conjugation_symmetry),
    ("model.stark_phase", check_stark_phase),
    ("solver.linear_decay", check_linear_decay),
    ("solver.rabi_two_level", check_rabi),
    ("solver.frozen_medium", check_frozen_medium),
    ("solver.zero_fields", check_zero_fields),
    ("solver.determinism", check_determinism),
    ("solver.causality", check_causality),
    ("solver.weak_linearity", check_weak_linearity),
    ("solver.convergence_x2", check_convergence),
    ("solver.retention_tail_rate", check_retention_tail_rate),
    ("theory.closed_forms", check_theory_forms),
    ("theory.weak_field_coherence", check_perturbative_coherence),
    ("oracle.elimination_weak", check_elimination_weak),
    ("oracle.elimination_reference", check_elimination_reference),
    ("analysis.parseval", check_parseval),
    ("analysis.time_bandwidth", check_time_bandwidth),
    ("analysis.exp_fit", check_fit_equivariance),
    ("analysis.phase_invariance", check_phase_invariance),
    ("target.tail_ratio", check_tail_ratio),
    ("target.delayed_suppression", check_delayed_suppression),
    ("target.population_enhancement", check_population_enhancement),
    ("target.spectral_narrowing", check_spectral_narrowing),
    ("target.decay_law", check_decay_law),
    ("solver.trace_bound", check_trace_bound),  # last: covers every cached run
]


def run_checks(fault: bool = False, select: str | None = None, echo=None) -> list[CheckResult]:
    session = Session(stark_sign=-1.0 if fault else 1.0)
    results = []
    for name, fn in CHECKS:
        if select and select not in name:
            continue
        start = time.perf_counter()
        try:
            ok, detail = fn(session)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"error: {type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - start)
        results.append(res)
        if echo:
            echo(res.line())
    return results
