"""CSV and manifest writers/readers.

Every CSV starts with one ``#`` line naming the columns (with units).
Floats are written with ``repr`` so they parse back bit-exactly.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import Spectrum
from .solver import SimulationRecord

ELEMENTS = ("rho_AA", "rho_BB", "rho_AX", "rho_BA", "rho_BX")


def fmt(x) -> str:
    return repr(float(x))


def write_csv(path, header: list[str], columns, comments: list[str] = ()) -> Path:
    path = Path(path)
    cols = [np.asarray(c, dtype=float) for c in columns]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("# " + ",".join(header) + "\n")
        for row in zip(*(c.tolist() for c in cols)):
            fh.write(",".join(map(repr, row)) + "\n")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray, list[str]]:
    """Return (column names, data array, leading comment lines)."""
    header, comments, rows = None, [], []
    with Path(path).open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if rows:
                    raise ValueError(f"{path}:{n}: comment after data")
                comments.append(line[1:].strip())
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{n}: malformed numeric row") from None
    if not comments:
        raise ValueError(f"{path}: missing '#' header line")
    header = [h.strip() for h in comments.pop().split(",")]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != len(header):
        raise ValueError(f"{path}: expected {len(header)} columns per row")
    return header, data, comments


def write_series(path, times, series) -> Path:
    s = np.asarray(series)
    return write_csv(
        path,
        ["t_fs", "re_rad_per_s", "im_rad_per_s", "abs2_rad2_per_s2"],
        [times * 1e15, s.real, s.imag, np.abs(s) ** 2],
    )


def write_record(record: SimulationRecord, out_dir, manifest: dict) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = record.times
    paths = [
        write_series(out / "omega1_out.csv", t, record.omega1_out),
        write_series(out / "omega_s_out.csv", t, record.omega_s_out),
    ]
    header, cols = ["t_fs"], [t * 1e15]
    for z in sorted(record.rho_history):
        h = record.rho_history[z]
        tag = f"{z * 1e3:g}mm"
        for k, name in enumerate(ELEMENTS):
            header += [f"{name}@{tag}_re", f"{name}@{tag}_im", f"{name}@{tag}_abs2"]
            cols += [h[:, k].real, h[:, k].imag, np.abs(h[:, k]) ** 2]
    paths.append(write_csv(out / "rho_probes.csv", header, cols))
    paths.append(write_manifest(out / "manifest.txt", manifest))
    return paths


def run_manifest(loaded, wall_time: float, extra: dict | None = None) -> dict:
    run = loaded.run
    m = {"artifact_version": __version__, "config_source": loaded.source, "config_sha256": loaded.digest}
    for section, values in loaded.values.items():
        for key, v in values.items():
            m[f"{section}.{key}_si"] = fmt(v)
    g = run.grid
    m.update(
        {
            "grid.nz": str(g.nz),
            "grid.nt": str(g.nt),
            "grid.dz_m": fmt(g.dz),
            "grid.dt_s": fmt(g.dt),
            "grid.t_start_s": fmt(g.t_start),
            "run.probes_m": ",".join(fmt(z) for z in run.probes),
        }
    )
    m.update(extra or {})
    m["wall_time_s"] = f"{wall_time:.3f}"
    return m


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.write_text("".join(f"{k} = {v}\n" for k, v in manifest.items()), encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line and not line.lstrip().startswith("#"):
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_spectrum(path, spectrum: Spectrum, comments=()) -> Path:
    info = [
        f"fwhm_THz = {fmt(spectrum.fwhm / 1e12)}",
        f"peak_offset_THz = {fmt(spectrum.peak_offset / 1e12)}",
        f"asymmetry = {fmt(spectrum.asymmetry)}",
        *comments,
    ]
    return write_csv(
        path,
        ["offset_THz", "power_arb", "normalized_power"],
        [spectrum.freq_offset / 1e12, spectrum.power, spectrum.normalized_power],
        info,
    )


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
