"""Observables computed from simulation records: spectra, signal integrals, scans and fits."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import BlochState
from .solver import RunConfig, SimulationRecord, SolverError, propagate

log = logging.getLogger(__name__)

PAD_FACTOR = 8


class AnalysisError(ValueError):
    pass


@dataclass
class Spectrum:
    """Power spectrum of a complex envelope.

    ``power`` is normalised so that ``power.sum() * df == sum(|x|^2) * dt``
    (Parseval with the zero-padded transform).
    """

    freq_offset: np.ndarray
    power: np.ndarray
    fwhm: float
    peak_offset: float
    asymmetry: float

    @property
    def normalized_power(self) -> np.ndarray:
        top = self.power.max()
        return self.power / top if top > 0 else self.power


@dataclass
class ScanResult:
    swept: np.ndarray
    observable: np.ndarray
    fit: tuple | None = None  # (amplitude, rate 1/s, residual)
    extra: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.swept.tolist(), self.observable.tolist()))


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def half_max_width(x: np.ndarray, y: np.ndarray, peak: int | None = None) -> float:
    """Full width at half maximum around ``peak`` (default: global max), linear interpolation."""
    if peak is None:
        peak = int(np.argmax(y))
    half = 0.5 * y[peak]
    i = peak
    while i > 0 and y[i - 1] > half:
        i -= 1
    if i == 0:
        left = x[0]
    else:
        # crossing between i-1 (below) and i (above)
        left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
    j = peak
    while j < len(y) - 1 and y[j + 1] > half:
        j += 1
    if j == len(y) - 1:
        right = x[-1]
    else:
        right = x[j] + (y[j] - half) * (x[j + 1] - x[j]) / (y[j] - y[j + 1])
    return float(right - left)


def power_spectrum(series, dt: float) -> Spectrum:
    """Zero-padded (8x next power of two), rectangular-window power spectrum.

    Offsets are in Hz relative to the carrier, ascending. Asymmetry is
    ``(P_right - P_left) / P_total`` about the peak bin.
    """
    x = np.asarray(series, dtype=np.complex128)
    if x.ndim != 1 or x.size < 16:
        raise AnalysisError("power_spectrum needs a 1-D series of at least 16 samples")
    n = PAD_FACTOR * _next_pow2(x.size)
    spec = np.fft.fftshift(np.fft.fft(x, n)) * dt
    freq = np.fft.fftshift(np.fft.fftfreq(n, dt))
    power = np.abs(spec) ** 2
    peak = int(np.argmax(power))
    total = power.sum()
    if total > 0:
        asym = (power[peak + 1 :].sum() - power[:peak].sum()) / total
        fwhm = half_max_width(freq, power, peak)
    else:
        asym, fwhm = 0.0, 0.0
    return Spectrum(freq, power, fwhm, float(freq[peak]), float(asym))


def integrated_signal(record: SimulationRecord) -> float:
    return float(np.sum(np.abs(record.omega_s_out) ** 2) * record.grid.dt)


def tail_peak_ratio(record: SimulationRecord, tail_start: float | None = None) -> float:
    """Largest pump-channel intensity after ``tail_start`` relative to the global maximum."""
    pump = record.config.pulse("pump")
    if tail_start is None:
        # 5 amplitude FWHM = 5 * sqrt(2) intensity FWHM
        tail_start = pump.center_time + 5.0 * np.sqrt(2.0) * pump.duration_fwhm
    if tail_start <= pump.center_time:
        raise AnalysisError("tail_start must lie after the pump centre")
    intensity = np.abs(record.omega1_out) ** 2
    mask = record.times >= tail_start
    if not mask.any():
        raise AnalysisError("tail window is empty")
    peak = intensity.max()
    if peak == 0:
        raise AnalysisError("pump channel is identically zero; ratio undefined")
    return float(intensity[mask].max() / peak)


def exp_fit(rows) -> tuple[float, float, float]:
    """Fit ``y = amplitude * exp(-rate * t)`` by least squares on ``ln y``.

    Returns ``(amplitude, rate, residual)`` with the residual the RMS
    misfit in log space.
    """
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise AnalysisError("exp_fit needs at least 3 rows")
    t, y = data[:, 0], data[:, 1]
    if np.any(y <= 0):
        raise AnalysisError("exp_fit needs strictly positive observables")
    if np.ptp(t) == 0:
        raise AnalysisError("exp_fit needs at least two distinct abscissae")
    t0 = t.mean()
    ly = np.log(y)
    slope, intercept = np.polyfit(t - t0, ly, 1)
    resid = ly - (intercept + slope * (t - t0))
    amplitude = float(np.exp(intercept - slope * t0))
    return amplitude, float(-slope), float(np.sqrt(np.mean(resid**2)))


def _run_one(config: RunConfig):
    rec = propagate(config)
    return integrated_signal(rec), float(np.abs(rec.rho_at()[:, 3]).max())


def _map(configs, jobs: int, tags):
    if jobs < 1:
        raise AnalysisError("jobs must be >= 1")
    results = []
    try:
        if jobs == 1 or len(configs) <= 1:
            for cfg, tag in zip(configs, tags):
                try:
                    results.append(_run_one(cfg))
                except SolverError as exc:
                    raise SolverError(f"{tag}: {exc}") from exc
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_one, cfg) for cfg in configs]
                for fut, tag in zip(futures, tags):
                    try:
                        results.append(fut.result())
                    except SolverError as exc:
                        raise SolverError(f"{tag}: {exc}") from exc
    finally:
        log.debug("completed %d of %d runs", len(results), len(configs))
    return results


def delay_scan(base: RunConfig, taus, fit_range=None, jobs: int = 1) -> ScanResult:
    """Integrated signal versus read delay; optional exponential fit over ``fit_range``."""
    taus = np.asarray(taus, dtype=float)
    if taus.size > 1 and np.any(np.diff(taus) <= 0):
        raise AnalysisError("taus must be strictly increasing")
    configs = [base.replace(delay_tau=float(t)) for t in taus]
    res = _map(configs, jobs, [f"tau={t * 1e15:g} fs" for t in taus])
    values = np.array([r[0] for r in res])
    fit = None
    if fit_range is not None:
        lo, hi = fit_range
        sel = (taus >= lo - 1e-21) & (taus <= hi + 1e-21)
        fit = exp_fit(np.column_stack([taus[sel], values[sel]]))
    return ScanResult(taus, values, fit, {"max_abs_rho_BA": np.array([r[1] for r in res])})


def population_scan(base: RunConfig, rho_bb_list, jobs: int = 1) -> ScanResult:
    """Integrated signal and peak |rho_BA| versus the initial B population."""
    values = np.asarray(list(rho_bb_list), dtype=float)
    if np.any((values < 0) | (values > 1)):
        raise AnalysisError("rho_BB(0) values must lie in [0, 1]")
    configs = []
    for v in values:
        s = base.initial_state
        configs.append(
            base.replace(initial_state=BlochState(s.rho_AA, float(v), s.rho_AX, s.rho_BA, s.rho_BX))
        )
    res = _map(configs, jobs, [f"rho_BB(0)={v:g}" for v in values])
    return ScanResult(
        values,
        np.array([r[0] for r in res]),
        None,
        {"max_abs_rho_BA": np.array([r[1] for r in res])},
    )
