import math

import numpy as np
import pytest

from photon_retention.model import HBAR, MediumParams, derive_rates
from photon_retention.theory import (
    GAUSS_AREA_FACTOR,
    PerturbativeInputs,
    perturbative_coherence,
    retained_intensity,
    tpa_rate_estimate,
)

INP = PerturbativeInputs(2.845e14, 50e-15, 1.0, 0.0, 0.4, 1.005e9, 6.64e13)


def test_area_factor_matches_quadrature():
    x = np.linspace(-10, 10, 200001)
    assert GAUSS_AREA_FACTOR == pytest.approx(np.trapezoid(np.exp(-2 * np.log(2) * x**2), x), rel=1e-10)


def test_coherence_vanishes_for_equal_populations():
    inp = PerturbativeInputs(1e14, 50e-15, 0.5, 0.5)
    assert perturbative_coherence(inp, 0.3e-12) == 0


def test_coherence_e_fold_at_inverse_gamma():
    t = 1 / INP.Gamma_AX
    assert abs(perturbative_coherence(INP, t)) / abs(perturbative_coherence(INP, 0.0)) == pytest.approx(math.exp(-1))


def test_coherence_purely_imaginary():
    c = perturbative_coherence(INP, np.linspace(0, 1e-12, 7))
    assert np.all(c.real == 0) and np.all(c.imag > 0)


def test_retained_intensity_log_slope_exact():
    t = np.linspace(0, 3e-12, 11)
    ratio = retained_intensity(INP, t) / retained_intensity(INP, 0.0)
    np.testing.assert_allclose(ratio, np.exp(-2 * INP.Gamma_AX * t), rtol=1e-13)


def test_retained_intensity_zero_without_inversion_difference():
    assert retained_intensity(PerturbativeInputs(1e14, 50e-15, 0.5, 0.5), 0.0) == 0


def test_tpa_ratio_and_zero():
    lo = PerturbativeInputs(2.845e14, 50e-15, 1.0, 0.0, 0.1, 1.005e9, 6.64e13)
    assert tpa_rate_estimate(INP, 0.0) / tpa_rate_estimate(lo, 0.0) == pytest.approx(16.0, rel=1e-12)
    assert tpa_rate_estimate(PerturbativeInputs(1e14, 50e-15, 1.0, 0.2, 0.2, 1e9, 1e13), 0.0) == 0


def test_tpa_sign_invariance():
    # rho_XX0 - rho_AA0 = +0.5 vs -0.5 with rho_AA0 and rho_BB0 fixed
    a = PerturbativeInputs(1e14, 50e-15, 1.0, 0.5, 0.2, 1e9, 1e13)
    b = PerturbativeInputs(1e14, 50e-15, 0.0, 0.5, 0.2, 1e9, 1e13)
    assert tpa_rate_estimate(a, 1e-12) == pytest.approx(tpa_rate_estimate(b, 1e-12), rel=1e-14)


def test_population_validation():
    with pytest.raises(ValueError):
        PerturbativeInputs(1e14, 50e-15, rho_BB0=1.5)


@pytest.mark.slow
def test_weak_field_coherence_matches_solver():
    from photon_retention.model import BlochState, PulseSpec, Role
    from photon_retention.solver import RunConfig, propagate

    cfg = RunConfig(
        pulses=(PulseSpec(Role.PUMP, 3e7), PulseSpec(Role.READ, 0.7e10)),
        initial_state=BlochState(rho_BB=0.2),
    )
    rec = propagate(cfg)
    p = MediumParams()
    inp = PerturbativeInputs(p.dipole_AX * 3e7 / HBAR, 50e-15, 0.8, 0.0, 0.2, derive_rates(p).Gamma_AX)
    m = (rec.times >= 0.2e-12) & (rec.times <= 1e-12)
    # entrance plane: the undistorted pump is what the first-order formula assumes
    ratio = np.abs(rec.rho_at(0.0)[m, 2]) / np.abs(perturbative_coherence(inp, rec.times[m]))
    assert np.max(np.abs(ratio - 1)) < 0.1
