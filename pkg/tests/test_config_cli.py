import xml.etree.ElementTree as ET

import numpy as np
import pytest

from photon_retention import output
from photon_retention.cli import main
from photon_retention.config import (
    REFERENCE_CONFIG,
    ConfigError,
    dump_config,
    load_config,
    load_config_text,
    parse_range,
)
from photon_retention.model import MediumParams, Role

SHORT = "[grid]\ntail_window = 300\n"


def test_reference_config_matches_defaults():
    loaded = load_config_text(REFERENCE_CONFIG)
    assert loaded.run.params == MediumParams()
    assert loaded.run.initial_state.rho_BB == 0.2
    assert loaded.run.pulse(Role.PUMP).peak_amplitude == 3e10
    assert loaded.sweep["taus"].size == 16


def test_missing_keys_fall_back():
    assert load_config_text("").run.params == load_config_text(REFERENCE_CONFIG).run.params


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        load_config_text("[medium]\n\n# note\nbogus = 3\n")
    assert err.value.line == 4 and err.value.key == "bogus"


def test_unknown_section():
    with pytest.raises(ConfigError):
        load_config_text("[nonsense]\na = 1\n")


def test_bad_value_names_key_and_line():
    with pytest.raises(ConfigError) as err:
        load_config_text("[medium]\ngamma_A = 0.01\ndensity = -4e16\n")
    assert err.value.key == "density" and err.value.line == 3
    with pytest.raises(ConfigError) as err:
        load_config_text("[pulses]\npump_amplitude = strong\n")
    assert err.value.line == 2


def test_unit_conversion():
    run = load_config_text("[medium]\ndelta = 2e6\ngamma_col = 0.5\n[run]\ntau = 1000\n").run
    assert run.params.delta == 2e15 and run.params.gamma_col == 5e8
    assert run.delay_tau == pytest.approx(1e-12)


@pytest.mark.parametrize(
    "text",
    [REFERENCE_CONFIG, "[medium]\nlambda_AX = 801.3\ndensity = 3.3e16\n[run]\nprobes = 0.05, 0.1\n"],
)
def test_dump_round_trip_bit_exact(text):
    a = load_config_text(text)
    b = load_config_text(dump_config(a))
    assert a.values == b.values
    assert a.run.probes == b.run.probes


def test_parse_range():
    np.testing.assert_allclose(parse_range("500:2000:100"), np.arange(500, 2001, 100))
    np.testing.assert_allclose(parse_range("0, 0.1,0.4"), [0, 0.1, 0.4])
    with pytest.raises(ConfigError):
        parse_range("1:0:1")


def test_csv_round_trip(tmp_path):
    x = np.array([0.1, 1 / 3, np.pi * 1e-300, -2.5e17])
    output.write_csv(tmp_path / "a.csv", ["x", "y"], [x, x**2], ["note"])
    header, data, comments = output.read_csv(tmp_path / "a.csv")
    assert header == ["x", "y"] and comments == ["note"]
    assert np.array_equal(data[:, 0], x) and np.array_equal(data[:, 1], x**2)


def test_malformed_csv(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# t_fs,re_rad_per_s,im_rad_per_s\n1,2,3\n2,x,3\n")
    with pytest.raises(ValueError, match=":3:"):
        output.read_csv(p)
    assert main(["spectrum", "--record", str(p), "--out", str(tmp_path)]) == 1


@pytest.fixture(scope="module")
def short_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = d / "short.ini"
    cfg.write_text(SHORT)
    assert main(["run", str(cfg), "--out", str(d / "a")]) == 0
    return d, cfg


def test_run_writes_files(short_run):
    d, cfg = short_run
    loaded = load_config(cfg)
    for name in ("omega1_out.csv", "omega_s_out.csv", "rho_probes.csv"):
        _h, data, _c = output.read_csv(d / "a" / name)
        assert data.shape[0] == loaded.run.grid.nt
    man = output.read_manifest(d / "a" / "manifest.txt")
    assert man["config_sha256"] == loaded.digest
    assert float(man["medium.delta_si"]) == loaded.run.params.delta
    ET.parse(d / "a" / "fields.svg")


def test_rerun_byte_identical(short_run):
    d, cfg = short_run
    assert main(["run", str(cfg), "--out", str(d / "b")]) == 0
    for name in ("omega1_out.csv", "omega_s_out.csv", "rho_probes.csv", "fields.svg"):
        assert (d / "a" / name).read_bytes() == (d / "b" / name).read_bytes()
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("wall_time_s")]  # noqa: E731
    assert strip(d / "a" / "manifest.txt") == strip(d / "b" / "manifest.txt")


def test_spectrum_from_record(short_run, tmp_path):
    d, _cfg = short_run
    assert main(["spectrum", "--record", str(d / "a" / "omega_s_out.csv"), "--out", str(tmp_path)]) == 0
    _h, data, comments = output.read_csv(tmp_path / "spectrum.csv")
    assert any(c.startswith("asymmetry =") for c in comments)
    assert any(c.startswith("fwhm_THz =") for c in comments)
    assert data[:, 2].max() == 1.0
    ET.parse(tmp_path / "spectrum.svg")


def test_spectrum_constant_series(tmp_path):
    p = tmp_path / "c.csv"
    t = np.arange(64) * 0.1
    output.write_csv(p, ["t_fs", "re_rad_per_s", "im_rad_per_s"], [t, np.ones(64), np.zeros(64)])
    assert main(["spectrum", "--record", str(p), "--out", str(tmp_path), "--logy"]) == 0
    _h, data, _c = output.read_csv(tmp_path / "spectrum.csv")
    assert data[np.argmax(data[:, 1]), 0] == 0.0


def test_delay_scan_jobs_identical(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text(SHORT)
    args = ["delay-scan", str(cfg), "--taus", "0:200:100", "--fit", "0:200"]
    assert main(args + ["--out", str(tmp_path / "j1"), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(tmp_path / "j8"), "--jobs", "8"]) == 0
    assert (tmp_path / "j1" / "scan.csv").read_bytes() == (tmp_path / "j8" / "scan.csv").read_bytes()
    fit = output.read_manifest(tmp_path / "j1" / "fit.txt")
    assert set(fit) >= {"rate_per_ns", "amplitude", "residual"}
    ET.parse(tmp_path / "j1" / "scan.svg")


def test_delay_scan_single_tau_matches_run(short_run, tmp_path):
    d, cfg = short_run
    assert main(["delay-scan", str(cfg), "--taus", "0", "--out", str(tmp_path)]) == 0
    _h, data, _c = output.read_csv(tmp_path / "scan.csv")
    man = output.read_manifest(d / "a" / "manifest.txt")
    assert data[0, 1] == float(man["integrated_signal"])


def test_population_scan_one_row(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text(SHORT)
    assert main(["population-scan", str(cfg), "--rho-bb", "0", "--tau", "0", "--out", str(tmp_path)]) == 0
    header, data, _c = output.read_csv(tmp_path / "scan.csv")
    assert data.shape[0] == 1 and "max_abs_rho_BA" in header


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[medium]\ndensity = -1\n")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 1
    coarse = tmp_path / "coarse.ini"
    coarse.write_text("[grid]\ndt = 5\n")
    assert main(["run", str(coarse), "--out", str(tmp_path)]) == 2
    assert main(["run", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 1
    assert main(["delay-scan", "--taus", "2:1:1", "--out", str(tmp_path)]) == 1


def test_seed_run_rejects_zero_seed(tmp_path):
    assert main(["seed-run", "--out", str(tmp_path)]) == 1


def _seed_gain(tmp_path, rho_bb):
    cfg = tmp_path / f"seed{rho_bb}.ini"
    cfg.write_text(f"[pulses]\nseed_amplitude = 1e8\n[grid]\ntail_window = 800\n[run]\nrho_BB0 = {rho_bb}\n")
    out = tmp_path / f"o{rho_bb}"
    assert main(["seed-run", str(cfg), "--delay", "500", "--out", str(out)]) == 0
    return float(output.read_manifest(out / "manifest.txt")["seed_gain"])


@pytest.mark.slow
def test_seed_amplified_with_inversion(tmp_path):
    # after the pump, B-X inversion needs rho_BB > rho_XX; 0.7 gives it, 0.4 does not
    assert _seed_gain(tmp_path, 0.7) > 1


@pytest.mark.slow
def test_seed_absorbed_without_b_population(tmp_path):
    assert _seed_gain(tmp_path, 0.0) < 1


def test_dump_config_cli(capsys):
    assert main(["dump-config"]) == 0
    assert "[medium]" in capsys.readouterr().out
