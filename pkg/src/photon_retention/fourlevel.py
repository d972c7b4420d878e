"""Brute-force reference with the intermediate level I kept explicitly.

Used only as an oracle for the adiabatically eliminated model: same field
envelopes, same RK4 march, full 4x4 density matrix in the interaction
picture. The time step must resolve the detuning (``|delta| * dt << 1``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import HBAR, BlochState, MediumParams, derive_rates, intermediate_coherences
from .solver import DivergenceError, integrate_slice

X, A, I, B = 0, 1, 2, 3


def density_matrix(state: BlochState) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=np.complex128)
    rho[X, X] = state.rho_XX
    rho[A, A] = state.rho_AA
    rho[B, B] = state.rho_BB
    rho[A, X] = state.rho_AX
    rho[B, A] = state.rho_BA
    rho[B, X] = state.rho_BX
    for i, j in ((A, X), (B, A), (B, X)):
        rho[j, i] = np.conj(rho[i, j])
    return rho


def four_level_trajectory(
    e1, e2, es, initial: BlochState, params: MediumParams, dt: float, pin_ix: bool = False
) -> np.ndarray:
    """Integrate the full four-level system; returns ``(nt, 4, 4)`` density matrices.

    ``e1``, ``e2``, ``es`` are field envelopes in V/m sampled every ``dt``.
    ``pin_ix`` holds the I-X coherence at zero, which is the approximation
    the eliminated equations make on top of the steady-state replacement.
    """
    rates = derive_rates(params)
    e1, e2, es = (np.asarray(a, dtype=np.complex128) for a in (e1, e2, es))
    drive = np.column_stack(
        [params.dipole_AX * e1, params.dipole_IA * e1, params.dipole_BI * e2, params.dipole_BX * es]
    ) / HBAR
    # level I coherences dephase collisionally only
    p = np.array(
        [
            params.delta,
            params.gamma_A,
            params.gamma_B,
            rates.Gamma_AX,
            rates.Gamma_BA,
            rates.Gamma_BX,
            params.gamma_col,
            1.0 if pin_ix else 0.0,
        ]
    )
    hist = np.empty((drive.shape[0], 16), dtype=np.complex128)
    bad = _kernels.rk4_march(_kernels.rhs_four_level, density_matrix(initial).ravel(), drive, p, dt, hist)
    if bad >= 0:
        raise DivergenceError(f"four-level integration diverged at time index {bad}", time_index=int(bad))
    return hist.reshape(-1, 4, 4)


@dataclass
class EliminationComparison:
    times: np.ndarray
    rho_ba_full: np.ndarray
    rho_ba_eliminated: np.ndarray
    rho_ia_full: np.ndarray
    rho_ia_steady: np.ndarray
    window: np.ndarray  # mask of samples after pulse overlap
    overlap: np.ndarray  # mask of samples near the pulse peaks

    @property
    def envelope_error(self) -> float:
        """Max deviation of |rho_BA| after overlap, relative to the eliminated model's max there."""
        full = np.abs(self.rho_ba_full[self.window])
        elim = np.abs(self.rho_ba_eliminated[self.window])
        return float(np.max(np.abs(full - elim)) / np.max(elim))

    @property
    def steady_state_error(self) -> float:
        full = self.rho_ia_full[self.overlap]
        steady = self.rho_ia_steady[self.overlap]
        return float(np.max(np.abs(full - steady)) / np.max(np.abs(steady)))


def compare_elimination(
    params: MediumParams | None = None,
    initial: BlochState | None = None,
    e1_peak: float = 3e10,
    e2_peak: float = 0.7e10,
    duration: float = 50e-15,
    tau: float = 0.0,
    dt: float = 0.01e-15,
    window: tuple = (150e-15, 500e-15),
    pin_ix: bool = False,
) -> EliminationComparison:
    """Single-slice comparison of the eliminated and explicit models at one z."""
    from .solver import SimulationGrid

    params = params or MediumParams()
    initial = initial or BlochState(rho_BB=0.2)
    t = np.arange(-3 * duration, window[1] + tau + dt / 2, dt)
    g = lambda c: np.exp(-2 * np.log(2) * ((t - c) / duration) ** 2)  # noqa: E731
    e1 = e1_peak * g(0.0) + 0j
    e2 = e2_peak * g(tau) + 0j
    es = np.zeros_like(e1)

    full = four_level_trajectory(e1, e2, es, initial, params, dt, pin_ix)
    grid = SimulationGrid(nz=1, nt=t.size, dz=params.length, dt=dt, t_start=t[0])
    rates = derive_rates(params)
    elim = integrate_slice(
        params.dipole_AX * e1 / HBAR, es, params.dipole_BI * e2 / HBAR, initial, rates, params, grid
    )
    steady = np.array(
        [
            intermediate_coherences(BlochState.from_array(elim[n]), e1[n], e2[n], params)[0]
            for n in range(t.size)
        ]
    )
    after = (t >= window[0] + tau) & (t <= window[1] + tau)
    near_peak = np.abs(t) <= 0.5 * duration
    return EliminationComparison(
        times=t,
        rho_ba_full=full[:, B, A],
        rho_ba_eliminated=elim[:, 3],
        rho_ia_full=full[:, I, A],
        rho_ia_steady=steady,
        window=after,
        overlap=near_peak,
    )
