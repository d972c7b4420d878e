"""Maxwell-Bloch propagation on a (z, retarded time) grid.

In the retarded frame the field equations reduce to ``dOmega/dz = i eta rho``
at fixed local time, so each z-slice is an independent Bloch integration
driven by the fields arriving at that slice. The z march uses one
predictor-corrector pass per step. The read field is not depleted.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import (
    BlochState,
    DerivedRates,
    MediumParams,
    ParameterError,
    PulseSpec,
    Role,
    derive_rates,
    envelope_at,
    reference_pulses,
)

DEFAULT_DT = 0.1e-15
DEFAULT_NZ = 200
DEFAULT_TAIL = 2e-12
STABILITY_LIMIT = 0.1


class SolverError(RuntimeError):
    """Numerical failure inside the solver."""


class DivergenceError(SolverError):
    def __init__(self, message, time_index=None, z_index=None):
        super().__init__(message)
        self.time_index = time_index
        self.z_index = z_index


class StabilityError(SolverError):
    """dt is too coarse for the strongest Rabi frequency."""


@dataclass(frozen=True)
class SimulationGrid:
    nz: int
    nt: int
    dz: float
    dt: float
    t_start: float

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.nt)

    def refined(self, factor: int) -> "SimulationGrid":
        return SimulationGrid(
            nz=self.nz * factor,
            nt=(self.nt - 1) * factor + 1,
            dz=self.dz / factor,
            dt=self.dt / factor,
            t_start=self.t_start,
        )


def make_grid(
    length: float,
    pulses: list[PulseSpec],
    tail_window: float = DEFAULT_TAIL,
    dt: float = DEFAULT_DT,
    nz: int = DEFAULT_NZ,
) -> SimulationGrid:
    """Grid spanning 3 durations before the earliest pulse to ``tail_window`` after the latest."""
    if not pulses:
        raise ParameterError("at least one pulse is needed to place the time window")
    if nz < 1 or not dt > 0:
        raise ParameterError("grid needs nz >= 1 and dt > 0")
    start = min(p.center_time - 3.0 * p.duration_fwhm for p in pulses)
    stop = max(p.center_time for p in pulses) + tail_window
    nt = int(math.ceil((stop - start) / dt - 1e-9)) + 1
    return SimulationGrid(nz=nz, nt=nt, dz=length / nz, dt=dt, t_start=start)


@dataclass(frozen=True)
class RunConfig:
    """One propagation run.

    The read pulse is always centred at ``pump.center_time + delay_tau``;
    its own ``center_time`` is ignored. A seed pulse keeps its centre.
    """

    params: MediumParams = field(default_factory=MediumParams)
    pulses: tuple = field(default_factory=lambda: tuple(reference_pulses()))
    delay_tau: float = 0.0
    initial_state: BlochState = field(default_factory=BlochState)
    grid: SimulationGrid | None = None
    tail_window: float = DEFAULT_TAIL
    probes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        object.__setattr__(self, "probes", tuple(float(z) for z in self.probes))
        s = self.initial_state
        if not (0 <= s.rho_AA <= 1 and 0 <= s.rho_BB <= 1 and s.rho_AA + s.rho_BB <= 1 + 1e-15):
            raise ParameterError("initial populations must lie in [0, 1] with sum <= 1")
        roles = [p.role for p in self.pulses]
        for role in Role:
            if roles.count(role) > 1:
                raise ParameterError(f"more than one {role.value} pulse")
        if Role.PUMP not in roles:
            raise ParameterError("a pump pulse is required")
        if self.grid is None:
            object.__setattr__(
                self, "grid", make_grid(self.params.length, self.resolved_pulses(), self.tail_window)
            )
        g = self.grid
        if abs(g.nz * g.dz - self.params.length) > 1e-12 * self.params.length:
            raise ParameterError("grid nz*dz must equal the medium length")
        for z in self.probes:
            if not 0 <= z <= self.params.length * (1 + 1e-12):
                raise ParameterError(f"probe plane z={z} outside the medium")

    def pulse(self, role: Role) -> PulseSpec | None:
        for p in self.resolved_pulses():
            if p.role == role:
                return p
        return None

    def resolved_pulses(self) -> list[PulseSpec]:
        pump = next(p for p in self.pulses if p.role == Role.PUMP)
        out = []
        for p in self.pulses:
            if p.role == Role.READ:
                p = dataclasses.replace(p, center_time=pump.center_time + self.delay_tau)
            out.append(p)
        return out

    def replace(self, **changes) -> "RunConfig":
        """Copy with changes; unless a grid is given the time window is rebuilt, keeping dt and nz."""
        if "grid" in changes:
            return dataclasses.replace(self, **changes)
        new = dataclasses.replace(self, grid=self.grid, **changes)
        g = make_grid(new.params.length, new.resolved_pulses(), new.tail_window, self.grid.dt, self.grid.nz)
        return dataclasses.replace(new, grid=g)


@dataclass
class SimulationRecord:
    times: np.ndarray
    omega1_out: np.ndarray
    omega_s_out: np.ndarray
    rho_history: dict  # z (m) -> (nt, 5) complex array [AA, BB, AX, BA, BX]
    config: RunConfig
    grid: SimulationGrid

    def rho_at(self, z: float | None = None) -> np.ndarray:
        if z is None:
            z = self.config.params.length
        key = min(self.rho_history, key=lambda k: abs(k - z))
        return self.rho_history[key]

    def final_state(self, z: float | None = None) -> BlochState:
        return BlochState.from_array(self.rho_at(z)[-1])


def _param_vector(rates: DerivedRates, params: MediumParams, stark_sign: float = 1.0) -> np.ndarray:
    ratio = params.dipole_IA / params.dipole_AX if params.dipole_AX != 0 else 0.0
    return np.array(
        [
            rates.Gamma_AX,
            rates.Gamma_BA,
            rates.Gamma_BX,
            params.gamma_A,
            params.gamma_B,
            ratio,
            params.delta,
            stark_sign,
        ],
        dtype=np.float64,
    )


def integrate_slice(
    omega1,
    omega_s,
    omega_read,
    initial: BlochState,
    rates: DerivedRates,
    params: MediumParams,
    grid: SimulationGrid,
    stark_sign: float = 1.0,
) -> np.ndarray:
    """RK4 trajectory at one z for field samples on the grid's time axis.

    ``omega_read`` is the B-I Rabi envelope of the read pulse. Returns an
    ``(nt, 5)`` complex array of ``[rho_AA, rho_BB, rho_AX, rho_BA, rho_BX]``.
    """
    drive = np.empty((grid.nt, 3), dtype=np.complex128)
    drive[:, 0] = omega1
    drive[:, 1] = omega_s
    drive[:, 2] = omega_read
    return _march(drive, initial.as_array(), _param_vector(rates, params, stark_sign), grid.dt)


def _march(drive, y0, pvec, dt, z_index=None):
    hist = np.empty((drive.shape[0], 5), dtype=np.complex128)
    bad = _kernels.rk4_march(_kernels.rhs_three_level, y0, drive, pvec, dt, hist)
    if bad >= 0:
        where = f" at z index {z_index}" if z_index is not None else ""
        raise DivergenceError(
            f"non-finite Bloch state at time index {bad}{where}", time_index=int(bad), z_index=z_index
        )
    return hist


def input_fields(config: RunConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rabi envelopes (pump A-X, signal B-X, read B-I) entering the medium at z = 0."""
    p = config.params
    t = config.grid.times
    out = []
    for role, dipole in ((Role.PUMP, p.dipole_AX), (Role.SEED, p.dipole_BX), (Role.READ, p.dipole_BI)):
        pulse = config.pulse(role)
        if pulse is None:
            out.append(np.zeros(t.shape, dtype=np.complex128))
        else:
            out.append(dipole * envelope_at(pulse, t) / 1.054571817e-34)
    return tuple(out)


def check_stability(config: RunConfig) -> float:
    w1, ws, w2 = input_fields(config)
    peak = max(np.abs(w1).max(), np.abs(ws).max(), np.abs(w2).max())
    product = config.grid.dt * peak
    if product >= STABILITY_LIMIT:
        raise StabilityError(
            f"dt * max Rabi frequency = {product:.3g} violates the stability bound < {STABILITY_LIMIT}"
        )
    return product


def propagate(config: RunConfig, *, stark_sign: float = 1.0, frozen_state: BlochState | None = None) -> SimulationRecord:
    """March the fields from z = 0 to z = L and return the record at the exit plane.

    ``frozen_state`` is a test hook: the Bloch integration is replaced by a
    state pinned to the given value at every time and z. ``stark_sign`` flips
    the AC-Stark term for mutation testing.
    """
    check_stability(config)
    params, grid = config.params, config.grid
    rates = derive_rates(params)
    pvec = _param_vector(rates, params, stark_sign)
    w1, ws, w2 = input_fields(config)
    y0 = config.initial_state.as_array()
    dz = grid.dz

    probes = sorted({0.0, params.length, *config.probes})
    probe_index = {int(round(z / dz)): z for z in probes}
    history: dict = {}

    drive = np.empty((grid.nt, 3), dtype=np.complex128)
    drive[:, 2] = w2

    def slice_at(a1, a_s, k):
        if frozen_state is not None:
            hist = np.empty((grid.nt, 5), dtype=np.complex128)
            _kernels.pinned_history(frozen_state.as_array(), grid.nt, hist)
            return hist
        drive[:, 0] = a1
        drive[:, 1] = a_s
        return _march(drive, y0, pvec, grid.dt, z_index=k)

    gain_ax = 1j * rates.eta_AX * dz
    gain_bx = 1j * rates.eta_BX * dz
    rho = slice_at(w1, ws, 0)
    for k in range(grid.nz):
        if k in probe_index:
            history[probe_index[k]] = rho
        w1_pred = w1 + gain_ax * rho[:, 2]
        ws_pred = ws + gain_bx * rho[:, 4]
        rho_pred = slice_at(w1_pred, ws_pred, k + 1)
        w1 = w1 + 0.5 * gain_ax * (rho[:, 2] + rho_pred[:, 2])
        ws = ws + 0.5 * gain_bx * (rho[:, 4] + rho_pred[:, 4])
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(ws))):
            raise DivergenceError(f"non-finite field at z index {k + 1}", z_index=k + 1)
        rho = slice_at(w1, ws, k + 1)
    history[probe_index.get(grid.nz, params.length)] = rho

    return SimulationRecord(
        times=grid.times,
        omega1_out=w1,
        omega_s_out=ws,
        rho_history=history,
        config=config,
        grid=grid,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    base_integral: float
    refined_integral: float
    relative_change: float
    refinement_factor: int
    tolerance: float = 1e-2

    @property
    def passed(self) -> bool:
        return self.relative_change < self.tolerance


def convergence_check(config: RunConfig, refinement_factor: int = 2) -> ConvergenceReport:
    """Rerun with dt/f and dz/f; compare the integrated signal intensity at z = L."""
    if refinement_factor < 2:
        raise ParameterError("refinement_factor must be >= 2")
    check_stability(config)
    base = propagate(config)
    fine = propagate(dataclasses.replace(config, grid=config.grid.refined(refinement_factor)))
    a = float(np.sum(np.abs(base.omega_s_out) ** 2) * base.grid.dt)
    b = float(np.sum(np.abs(fine.omega_s_out) ** 2) * fine.grid.dt)
    scale = max(abs(a), abs(b))
    change = 0.0 if scale == 0 else abs(b - a) / scale
    return ConvergenceReport(a, b, change, refinement_factor)
