"""Weak-excitation closed forms for the stored coherence, its re-emission and the readout rate.

These are first-order estimates used as independent checks on the full
solver. The coherence amplitude is fixed by integrating the source term of
the A-X coherence equation over the Gaussian pump to first order, giving
``rho_AX = i * area * (rho_XX0 - rho_AA0) * exp(-Gamma_AX t)`` with
``area = integral of the pump Rabi envelope``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# integral of exp(-2 ln2 x^2) dx over the real line
GAUSS_AREA_FACTOR = math.sqrt(math.pi / (2.0 * math.log(2.0)))


@dataclass(frozen=True)
class PerturbativeInputs:
    peak_rabi_pump: float
    duration_fwhm: float
    rho_XX0: float = 1.0
    rho_AA0: float = 0.0
    rho_BB0: float = 0.0
    Gamma_AX: float = 1.005e9
    peak_rabi_read: float = 0.0

    def __post_init__(self):
        for name in ("rho_XX0", "rho_AA0", "rho_BB0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def pulse_area(self) -> float:
        """Time integral of the pump Rabi envelope (rad)."""
        return self.peak_rabi_pump * self.duration_fwhm * GAUSS_AREA_FACTOR


def perturbative_coherence(inp: PerturbativeInputs, t):
    """A-X coherence at time ``t`` after the pump (t >= 0)."""
    t = np.asarray(t, dtype=float)
    out = np.asarray(1j * inp.pulse_area * (inp.rho_XX0 - inp.rho_AA0) * np.exp(-inp.Gamma_AX * t))
    return out if out.ndim else complex(out)


def retained_intensity(inp: PerturbativeInputs, t):
    """Re-emitted intensity (arbitrary units), proportional to |rho_AX(t)|^2."""
    return np.abs(perturbative_coherence(inp, t)) ** 2


def tpa_rate_estimate(inp: PerturbativeInputs, tau):
    """Two-photon readout rate (arbitrary units) for a read pulse delayed by ``tau``."""
    tau = np.asarray(tau, dtype=float)
    amp = (inp.peak_rabi_pump * inp.peak_rabi_read * inp.duration_fwhm**2) ** 2
    pops = (inp.rho_XX0 - inp.rho_AA0) ** 2 * (inp.rho_BB0 - inp.rho_AA0) ** 2
    out = np.asarray(amp * pops * np.exp(-2.0 * inp.Gamma_AX * tau))
    return out if out.ndim else float(out)
