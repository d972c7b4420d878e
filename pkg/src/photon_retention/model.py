"""Physical types, derived constants and the effective three-level density-matrix equations.

Levels are X (ground), A and B. A far-detuned level I between A and B is
adiabatically eliminated; it enters only through the two-photon coupling and
the AC-Stark term returned by :func:`two_photon_terms`.

Field amplitudes are carried as complex Rabi envelopes ``dipole * E / hbar``
in rad/s. The ground-state population is never integrated: it is always
``1 - rho_AA - rho_BB``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

HBAR = 1.054571817e-34  # J s
C_LIGHT = 2.99792458e8  # m/s

FOUR_LN2 = 4.0 * math.log(2.0)


class ParameterError(ValueError):
    """Raised for physically invalid parameter sets."""


@dataclass(frozen=True)
class MediumParams:
    """Material constants of the ionic medium, SI units throughout."""

    dipole_AX: float = 1e-30
    dipole_IA: float = 1e-30
    dipole_BI: float = 1e-30
    dipole_BX: float = 1e-30
    gamma_A: float = 1e7
    gamma_B: float = 1e7
    gamma_col: float = 1e9
    delta: float = 1e15
    density: float = 4e22
    lambda_AX: float = 800e-9
    lambda_BX: float = 329.3e-9
    length: float = 0.15e-3

    def validate(self) -> None:
        for name in ("gamma_A", "gamma_B", "gamma_col", "density", "lambda_AX", "lambda_BX", "length"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be strictly positive, got {value!r}")
        # zero dipoles are allowed: they switch transitions off in reduced test models
        for name in ("dipole_AX", "dipole_IA", "dipole_BI", "dipole_BX"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if not math.isfinite(self.delta) or self.delta == 0:
            raise ParameterError("delta must be finite and nonzero")
        rates = derive_rates(self, check=False)
        limit = 100.0 * max(rates.Gamma_AX, rates.Gamma_BA, rates.Gamma_BX)
        if abs(self.delta) <= limit:
            raise ParameterError(
                f"|delta| = {abs(self.delta):.3e} rad/s must exceed 100x the largest "
                f"dephasing rate ({limit:.3e} rad/s) for adiabatic elimination"
            )


@dataclass(frozen=True)
class DerivedRates:
    Gamma_AX: float
    Gamma_BA: float
    Gamma_BX: float
    eta_AX: float
    eta_BX: float


class Role(str, enum.Enum):
    PUMP = "pump"  # E1, 800 nm
    READ = "read"  # E2, 1580 nm
    SEED = "seed"  # Es, 329.3 nm


@dataclass(frozen=True)
class PulseSpec:
    """One Gaussian laser envelope; ``duration_fwhm`` is the intensity FWHM."""

    role: Role
    peak_amplitude: float
    duration_fwhm: float = 50e-15
    center_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if not self.duration_fwhm > 0:
            raise ParameterError(f"duration_fwhm must be > 0, got {self.duration_fwhm!r}")
        if not self.peak_amplitude >= 0:
            raise ParameterError(f"peak_amplitude must be >= 0, got {self.peak_amplitude!r}")


@dataclass(frozen=True)
class BlochState:
    rho_AA: float = 0.0
    rho_BB: float = 0.0
    rho_AX: complex = 0j
    rho_BA: complex = 0j
    rho_BX: complex = 0j

    @property
    def rho_XX(self) -> float:
        return 1.0 - self.rho_AA - self.rho_BB

    def as_array(self) -> np.ndarray:
        """Pack as ``[rho_AA, rho_BB, rho_AX, rho_BA, rho_BX]`` (complex128)."""
        return np.array(
            [self.rho_AA, self.rho_BB, self.rho_AX, self.rho_BA, self.rho_BX], dtype=np.complex128
        )

    @classmethod
    def from_array(cls, y) -> "BlochState":
        return cls(float(y[0].real), float(y[1].real), complex(y[2]), complex(y[3]), complex(y[4]))

    def conjugate(self) -> "BlochState":
        return BlochState(
            self.rho_AA,
            self.rho_BB,
            self.rho_AX.conjugate(),
            self.rho_BA.conjugate(),
            self.rho_BX.conjugate(),
        )


@dataclass(frozen=True)
class FieldTriple:
    """Rabi envelopes of the pump (A-X), read (B-I) and signal (B-X) channels at one instant."""

    omega1: complex = 0j
    omega2: complex = 0j
    omega_s: complex = 0j

    def __post_init__(self):
        for name in ("omega1", "omega2", "omega_s"):
            if not np.isfinite(complex(getattr(self, name))):
                raise ParameterError(f"{name} is not finite")


def derive_rates(params: MediumParams, check: bool = True) -> DerivedRates:
    if check:
        for name in ("gamma_A", "gamma_B", "density", "lambda_AX", "lambda_BX"):
            if not getattr(params, name) > 0:
                raise ParameterError(f"{name} must be strictly positive")
        if params.gamma_col < 0:
            raise ParameterError("gamma_col must be non-negative")
    gA, gB, gc = params.gamma_A, params.gamma_B, params.gamma_col
    eta = lambda lam, g: 3.0 * params.density * lam**2 * g / (8.0 * math.pi)  # noqa: E731
    return DerivedRates(
        Gamma_AX=0.5 * gA + gc,
        Gamma_BA=0.5 * (gA + gB) + gc,
        Gamma_BX=0.5 * gB + gc,
        eta_AX=eta(params.lambda_AX, gA),
        eta_BX=eta(params.lambda_BX, gB),
    )


def envelope_at(pulse: PulseSpec, t):
    """Field envelope (V/m) at time(s) ``t``; zero carrier phase."""
    x = (np.asarray(t, dtype=float) - pulse.center_time) / pulse.duration_fwhm
    out = pulse.peak_amplitude * np.exp(-0.5 * FOUR_LN2 * x * x) + 0j
    return out if out.ndim else complex(out)


def rabi(dipole: float, e):
    return dipole * e / HBAR


def two_photon_terms(e1: complex, e2: complex, params: MediumParams) -> tuple[complex, float]:
    """Effective A-B coupling and differential AC-Stark shift, both rad/s."""
    if params.delta == 0:
        raise ParameterError("delta must be nonzero")
    w_ia = params.dipole_IA * e1 / HBAR
    w_bi = params.dipole_BI * e2 / HBAR
    tp = w_bi * w_ia / params.delta
    stark = (abs(w_bi) ** 2 - abs(w_ia) ** 2) / params.delta
    return complex(tp), float(stark)


def intermediate_coherences(
    state: BlochState, e1: complex, e2: complex, params: MediumParams
) -> tuple[complex, complex]:
    """Steady-state rho_IA and rho_BI with rho_II = 0. Diagnostic only."""
    if params.delta == 0:
        raise ParameterError("delta must be nonzero")
    hd = HBAR * params.delta
    w_ia = params.dipole_IA * e1
    w_bi = params.dipole_BI * e2
    rho_ia = (w_ia * state.rho_AA + np.conj(w_bi) * state.rho_BA) / hd
    rho_bi = (w_bi * state.rho_BB + np.conj(w_ia) * state.rho_BA) / hd
    return complex(rho_ia), complex(rho_bi)


def bloch_rhs(
    state: BlochState,
    fields: FieldTriple,
    tp_coupling: complex,
    stark: float,
    rates: DerivedRates,
    params: MediumParams,
) -> BlochState:
    """Time derivative of every stored element; returned as a BlochState of rates."""
    d = rhs_array(
        state.as_array(),
        complex(fields.omega1),
        complex(fields.omega_s),
        complex(tp_coupling),
        float(stark),
        rates.Gamma_AX,
        rates.Gamma_BA,
        rates.Gamma_BX,
        params.gamma_A,
        params.gamma_B,
    )
    return BlochState.from_array(d)


def rhs_array(y, w1, ws, tp, stark, G_ax, G_ba, G_bx, g_a, g_b):
    """Array form of the effective equations; mirrors the compiled kernel term by term."""
    aa, bb = y[0].real, y[1].real
    ax, ba, bx = y[2], y[3], y[4]
    xx = 1.0 - aa - bb
    ab, xa, xb = np.conj(ba), np.conj(ax), np.conj(bx)
    d_ax = -G_ax * ax + 1j * w1 * (xx - aa) - 1j * ws * ab
    d_ba = (
        (-G_ba + 1j * stark) * ba
        + 1j * tp * (aa - bb)
        - 1j * np.conj(w1) * bx
        + 1j * ws * xa
    )
    d_bx = -G_bx * bx + 1j * ws * (xx - bb) - 1j * w1 * ba
    d_bb = -g_b * bb + 2.0 * (1j * tp * ab + 1j * ws * xb).real
    d_aa = -g_a * aa + 2.0 * (-1j * tp * ab + 1j * w1 * xa).real
    return np.array([d_aa, d_bb, d_ax, d_ba, d_bx], dtype=np.complex128)


def reference_pulses(tau: float = 0.0, duration: float = 50e-15) -> list[PulseSpec]:
    """Pump at t = 0 and read pulse at ``tau``, with the reference amplitudes."""
    return [
        PulseSpec(Role.PUMP, 3e10, duration, 0.0),
        PulseSpec(Role.READ, 0.7e10, duration, tau),
    ]
