"""INI configuration files: loading, validation, unit conversion and dumping.

Files use laboratory units; everything past :func:`load_config` is SI.
Missing keys take the reference values below.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import BlochState, MediumParams, ParameterError, PulseSpec, Role
from .solver import DEFAULT_DT, DEFAULT_NZ, DEFAULT_TAIL, RunConfig, make_grid

FS = 1e-15
NM = 1e-9
MM = 1e-3
PER_NS = 1e9
PER_CM3 = 1e6

# section -> key -> (SI scale, unit label, default in file units)
SCHEMA: dict[str, dict[str, tuple[float, str, float]]] = {
    "medium": {
        "dipole_AX": (1.0, "C m", 1e-30),
        "dipole_IA": (1.0, "C m", 1e-30),
        "dipole_BI": (1.0, "C m", 1e-30),
        "dipole_BX": (1.0, "C m", 1e-30),
        "gamma_A": (PER_NS, "1/ns", 0.01),
        "gamma_B": (PER_NS, "1/ns", 0.01),
        "gamma_col": (PER_NS, "1/ns", 1.0),
        "delta": (PER_NS, "rad/ns", 1e6),
        "density": (PER_CM3, "cm^-3", 4e16),
        "lambda_AX": (NM, "nm", 800.0),
        "lambda_BX": (NM, "nm", 329.3),
        "length": (MM, "mm", 0.15),
    },
    "pulses": {
        "pump_amplitude": (1.0, "V/m", 3e10),
        "pump_duration": (FS, "fs", 50.0),
        "pump_center": (FS, "fs", 0.0),
        "read_amplitude": (1.0, "V/m", 0.7e10),
        "read_duration": (FS, "fs", 50.0),
        "seed_amplitude": (1.0, "V/m", 0.0),
        "seed_duration": (FS, "fs", 50.0),
        "seed_center": (FS, "fs", 500.0),
    },
    "grid": {
        "dt": (FS, "fs", DEFAULT_DT / FS),
        "nz": (1.0, "", float(DEFAULT_NZ)),
        "tail_window": (FS, "fs", DEFAULT_TAIL / FS),
    },
    "run": {
        "tau": (FS, "fs", 0.0),
        "rho_AA0": (1.0, "", 0.0),
        "rho_BB0": (1.0, "", 0.2),
    },
}
# keys holding text rather than a single number
TEXT_KEYS = {
    "run": {"probes": "mm, comma separated"},
    "sweep": {"taus": "fs, start:stop:step", "fit": "fs, from:to", "rho_bb": "comma separated", "jobs": ""},
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


@dataclass
class LoadedConfig:
    run: RunConfig
    values: dict  # section -> key -> SI value (text keys kept raw)
    sweep: dict = field(default_factory=dict)
    digest: str = ""
    source: str = ""


def to_si(value: float, scale: float) -> float:
    """Scale into SI; sub-unit scales divide by their exact integer inverse (800 nm -> 8e-07, not 8.000000000000001e-07)."""
    if scale < 1.0:
        return value / round(1.0 / scale)
    return value * scale


def from_si(value: float, scale: float) -> float:
    if scale < 1.0:
        return value * round(1.0 / scale)
    return value / scale


def _key_lines(text: str) -> dict:
    lines, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"^([^=:#;]+?)\s*[=:]", s)
        if m and section:
            lines[(section, m.group(1).strip())] = n
    return lines


def parse_range(text: str, what: str = "range") -> np.ndarray:
    """``start:stop:step`` (inclusive of stop when on-grid) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{what} must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"{what} needs step > 0 and stop >= start, got {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    values = np.array([float(v) for v in text.split(",") if v.strip()])
    if values.size == 0:
        raise ConfigError(f"{what} is empty")
    return values


def parse_pair(text: str, what: str = "fit") -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what} must be from:to, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if hi <= lo:
        raise ConfigError(f"{what} needs to > from, got {text!r}")
    return lo, hi


def load_config_text(text: str, source: str = "<string>") -> LoadedConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}", getattr(exc, "lineno", None)) from exc
    lines = _key_lines(text)

    known = set(SCHEMA) | set(TEXT_KEYS)
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        for key in parser[section]:
            if key not in SCHEMA.get(section, {}) and key not in TEXT_KEYS.get(section, {}):
                raise ConfigError(f"unknown key '{key}' in [{section}]", lines.get((section, key)), key)

    values: dict = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (scale, _unit, default) in keys.items():
            raw = parser.get(section, key, fallback=None)
            if raw is None:
                number = default
            else:
                try:
                    number = float(raw)
                except ValueError:
                    raise ConfigError(
                        f"'{key}' must be a number, got {raw!r}", lines.get((section, key)), key
                    ) from None
            if not math.isfinite(number):
                raise ConfigError(f"'{key}' must be finite", lines.get((section, key)), key)
            values[section][key] = to_si(number, scale)
    text_values = {s: {k: parser.get(s, k) for k in keys if parser.has_option(s, k)} for s, keys in TEXT_KEYS.items()}

    try:
        run = _build_run(values, text_values.get("run", {}))
    except ParameterError as exc:
        key = _guess_key(str(exc))
        section = next((s for s, ks in SCHEMA.items() if key in ks), None)
        raise ConfigError(str(exc), lines.get((section, key)), key) from exc

    sweep = {}
    raw_sweep = text_values.get("sweep", {})
    try:
        if "taus" in raw_sweep:
            sweep["taus"] = to_si(parse_range(raw_sweep["taus"], "taus"), FS)
        if "fit" in raw_sweep:
            lo, hi = parse_pair(raw_sweep["fit"])
            sweep["fit"] = (to_si(lo, FS), to_si(hi, FS))
        if "rho_bb" in raw_sweep:
            sweep["rho_bb"] = parse_range(raw_sweep["rho_bb"], "rho_bb")
        if "jobs" in raw_sweep:
            sweep["jobs"] = int(raw_sweep["jobs"])
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"[sweep]: {exc}") from exc

    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return LoadedConfig(run=run, values=values, sweep=sweep, digest=digest, source=source)


def load_config(path) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return load_config_text(text, str(path))


def _guess_key(message: str) -> str | None:
    for section in SCHEMA.values():
        for key in section:
            if re.search(rf"\b{re.escape(key)}\b", message):
                return key
    return None


def _build_run(values: dict, run_text: dict) -> RunConfig:
    m = values["medium"]
    params = MediumParams(**m)
    params.validate()
    p = values["pulses"]
    pulses = [
        PulseSpec(Role.PUMP, p["pump_amplitude"], p["pump_duration"], p["pump_center"]),
        PulseSpec(Role.READ, p["read_amplitude"], p["read_duration"], p["pump_center"]),
    ]
    if p["seed_amplitude"] > 0:
        pulses.append(PulseSpec(Role.SEED, p["seed_amplitude"], p["seed_duration"], p["seed_center"]))
    elif p["seed_amplitude"] < 0:
        raise ParameterError("seed_amplitude must be >= 0")
    g, r = values["grid"], values["run"]
    nz = g["nz"]
    if nz < 1 or nz != int(nz):
        raise ParameterError(f"nz must be a positive integer, got {nz!r}")
    if not g["dt"] > 0:
        raise ParameterError("dt must be > 0")
    if not g["tail_window"] > 0:
        raise ParameterError("tail_window must be > 0")
    probes = ()
    if run_text.get("probes"):
        probes = tuple(to_si(float(v), MM) for v in run_text["probes"].split(",") if v.strip())
    for key in ("rho_AA0", "rho_BB0"):
        if not 0 <= r[key] <= 1:
            raise ParameterError(f"{key} must lie in [0, 1]")
    initial = BlochState(rho_AA=r["rho_AA0"], rho_BB=r["rho_BB0"])
    base = RunConfig(
        params=params,
        pulses=pulses,
        delay_tau=r["tau"],
        initial_state=initial,
        tail_window=g["tail_window"],
        probes=probes,
        grid=None,
    )
    grid = make_grid(params.length, base.resolved_pulses(), g["tail_window"], g["dt"], int(nz))
    return base.replace(grid=grid)


def _file_repr(si_value: float, scale: float) -> str:
    """Shortest file-unit text that reloads to exactly ``si_value``."""
    guess = from_si(si_value, scale)
    for candidate in (guess, *_neighbours(guess)):
        if to_si(float(repr(candidate)), scale) == si_value:
            return repr(candidate)
    return repr(guess)


def _neighbours(x: float, n: int = 4):
    lo = hi = x
    for _ in range(n):
        lo = math.nextafter(lo, -math.inf)
        hi = math.nextafter(hi, math.inf)
        yield lo
        yield hi


def dump_config(loaded: LoadedConfig) -> str:
    """Render the resolved parameters back to file units, one key per line with its unit."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key, (scale, unit, _default) in keys.items():
            value = loaded.values[section][key]
            comment = f"  # {unit}" if unit else ""
            out.append(f"{key} = {_file_repr(value, scale)}{comment}")
        if section == "run" and loaded.run.probes:
            out.append("probes = " + ", ".join(_file_repr(z, MM) for z in loaded.run.probes) + "  # mm")
        out.append("")
    return "\n".join(out)


REFERENCE_CONFIG = """\
# Reference parameter set. Units are fixed per key and converted to SI on load.

[medium]
dipole_AX = 1e-30     # C m
dipole_IA = 1e-30     # C m
dipole_BI = 1e-30     # C m
dipole_BX = 1e-30     # C m
gamma_A = 0.01        # 1/ns, spontaneous decay of A
gamma_B = 0.01        # 1/ns, spontaneous decay of B
gamma_col = 1.0       # 1/ns, collisional dephasing
delta = 1e6           # rad/ns, detuning of the intermediate level (1e15 rad/s)
density = 4e16        # cm^-3
lambda_AX = 800.0     # nm
lambda_BX = 329.3     # nm
length = 0.15         # mm

[pulses]
pump_amplitude = 3e10     # V/m
pump_duration = 50        # fs, intensity FWHM
pump_center = 0           # fs
read_amplitude = 0.7e10   # V/m
read_duration = 50        # fs
seed_amplitude = 0        # V/m, 0 disables the seed
seed_duration = 50        # fs
seed_center = 500         # fs

[grid]
dt = 0.1              # fs
nz = 200
tail_window = 2000    # fs after the latest pulse

[run]
tau = 0               # fs, read delay after the pump
rho_AA0 = 0
rho_BB0 = 0.2

[sweep]
taus = 500:2000:100   # fs
fit = 500:2000        # fs
rho_bb = 0, 0.1, 0.2, 0.4
jobs = 1
"""
