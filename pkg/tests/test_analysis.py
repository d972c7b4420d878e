import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photon_retention import analysis
from photon_retention.analysis import AnalysisError
from photon_retention.model import BlochState, PulseSpec, Role
from photon_retention.solver import RunConfig, propagate


def test_constant_series_single_dc_peak():
    spec = analysis.power_spectrum(np.ones(64, dtype=complex), 1e-15)
    assert spec.peak_offset == 0
    assert np.argmax(spec.power) == np.argmin(np.abs(spec.freq_offset))


def test_short_series_rejected():
    with pytest.raises(AnalysisError):
        analysis.power_spectrum(np.ones(15), 1e-15)


def test_padding_length():
    spec = analysis.power_spectrum(np.ones(100), 1e-15)
    assert spec.power.size == 8 * 128
    assert np.all(spec.power >= 0) and spec.freq_offset.size == spec.power.size


@pytest.mark.parametrize("duration", [20e-15, 50e-15, 120e-15])
def test_time_bandwidth_product(duration):
    dt = 0.1e-15
    t = dt * (np.arange(40000) - 20000)
    x = np.exp(-2 * np.log(2) * (t / duration) ** 2)
    spec = analysis.power_spectrum(x, dt)
    assert spec.fwhm * duration == pytest.approx(2 * np.log(2) / np.pi, rel=0.02)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False), min_size=16, max_size=300))
def test_parseval(values):
    x = np.array(values)
    energy = np.sum(np.abs(x) ** 2) * 1e-15
    spec = analysis.power_spectrum(x, 1e-15)
    df = spec.freq_offset[1] - spec.freq_offset[0]
    assert spec.power.sum() * df == pytest.approx(energy, rel=1e-9, abs=1e-300)


def test_asymmetry_sign_follows_skew():
    dt = 1e-15
    t = dt * np.arange(4096)
    one_sided = np.exp(-t / 200e-15) * np.exp(2j * np.pi * 1e12 * t)
    sym = analysis.power_spectrum(np.exp(-(((t - 2e-12) / 200e-15) ** 2)), dt)
    assert abs(sym.asymmetry) < 1e-6
    assert analysis.power_spectrum(one_sided, dt).peak_offset == pytest.approx(1e12, rel=0.01)


def test_exp_fit_exact():
    tau0 = 0.7e-12
    t = np.linspace(0, 2e-12, 10)
    amp, rate, res = analysis.exp_fit(np.column_stack([t, 5 * np.exp(-t / tau0)]))
    assert rate * tau0 == pytest.approx(1, rel=1e-9)
    assert amp == pytest.approx(5, rel=1e-9) and res < 1e-9


def test_exp_fit_noisy():
    rng = np.random.default_rng(20240611)
    rate0 = 3e9
    t = np.linspace(0, 2 / rate0, 20)
    y = np.exp(-rate0 * t) * (1 + rng.uniform(-0.05, 0.05, t.size))
    _amp, rate, _res = analysis.exp_fit(np.column_stack([t, y]))
    assert rate == pytest.approx(rate0, rel=0.1)


@given(st.floats(1e-3, 1e3))
def test_exp_fit_scale_equivariant(k):
    t = np.linspace(0, 1, 8)
    y = np.exp(-2 * t) + 0.1 * np.cos(7 * t)
    a1, r1, _ = analysis.exp_fit(np.column_stack([t, y]))
    a2, r2, _ = analysis.exp_fit(np.column_stack([t, k * y]))
    assert r2 == pytest.approx(r1, rel=1e-12, abs=1e-12)
    assert a2 == pytest.approx(k * a1, rel=1e-12)


@pytest.mark.parametrize(
    "rows",
    [[[0, 1]], [[0, 1], [1, 0], [2, 1]], [[1, 1], [1, 2], [1, 3]]],
)
def test_exp_fit_rejects(rows):
    with pytest.raises(AnalysisError):
        analysis.exp_fit(rows)


def _short():
    return RunConfig(initial_state=BlochState(rho_BB=0.2), tail_window=400e-15)


def test_integrated_signal_properties():
    rec = propagate(_short())
    s = analysis.integrated_signal(rec)
    assert s > 0
    rot = dataclasses.replace(rec, omega_s_out=rec.omega_s_out * np.exp(1.3j))
    assert analysis.integrated_signal(rot) == pytest.approx(s, rel=1e-14)
    dbl = dataclasses.replace(rec, omega_s_out=2 * rec.omega_s_out)
    assert analysis.integrated_signal(dbl) == pytest.approx(4 * s, rel=1e-14)


def test_tail_ratio_errors():
    zero = propagate(RunConfig(pulses=(PulseSpec(Role.PUMP, 0.0),), tail_window=400e-15))
    with pytest.raises(AnalysisError):
        analysis.tail_peak_ratio(zero, 250e-15)
    rec = propagate(_short())
    with pytest.raises(AnalysisError):
        analysis.tail_peak_ratio(rec, 10e-12)
    with pytest.raises(AnalysisError):
        analysis.tail_peak_ratio(rec, -1e-15)


def test_delay_scan_single_matches_direct():
    base = _short()
    res = analysis.delay_scan(base, [0.0])
    assert res.observable[0] == analysis.integrated_signal(propagate(base))


def test_scan_rejects_bad_inputs():
    with pytest.raises(AnalysisError):
        analysis.delay_scan(_short(), [2e-13, 1e-13])
    with pytest.raises(AnalysisError):
        analysis.population_scan(_short(), [1.5])


def test_population_scan_empty():
    res = analysis.population_scan(_short(), [])
    assert res.swept.size == 0 and res.observable.size == 0


def test_scan_parallel_matches_serial():
    base = _short()
    taus = [0.0, 100e-15, 200e-15]
    a = analysis.delay_scan(base, taus, jobs=1)
    b = analysis.delay_scan(base, taus, jobs=3)
    assert np.array_equal(a.observable, b.observable)
    assert np.array_equal(a.extra["max_abs_rho_BA"], b.extra["max_abs_rho_BA"])


@pytest.mark.slow
def test_delay_scan_ordering_in_rho_bb():
    # larger rho_BB(0) loses less signal between tau = 0 and tau = 1 ps
    drops = {}
    for bb in (0.1, 0.4):
        res = analysis.delay_scan(RunConfig(initial_state=BlochState(rho_BB=bb)), [0.0, 1e-12])
        drops[bb] = res.observable[1] / res.observable[0]
    assert drops[0.4] > drops[0.1]


@pytest.mark.slow
def test_delay_scan_monotone_beyond_three_durations():
    res = analysis.delay_scan(RunConfig(initial_state=BlochState(rho_BB=0.4)), [150e-15, 400e-15, 700e-15, 1000e-15])
    assert np.all(np.diff(res.observable) <= 0)


@pytest.mark.slow
def test_rank_order_matches_tpa_estimate(run_ref):
    from photon_retention.theory import PerturbativeInputs, tpa_rate_estimate

    vals = [analysis.integrated_signal(run_ref(1e-12, bb)) for bb in (0.1, 0.2, 0.4)]
    est = [tpa_rate_estimate(PerturbativeInputs(2.845e14, 50e-15, 1 - bb, 0, bb, 1.005e9, 6.64e13), 1e-12) for bb in (0.1, 0.2, 0.4)]
    assert list(np.argsort(vals)) == list(np.argsort(est))
