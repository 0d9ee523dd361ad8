import hashlib
import json
import math
from pathlib import Path

import pytest

import cli
from common import read_csv

DOUBLE_WELL = {
    "potential": {"kind": "quartic_double_well", "V0": 8.0, "x0": 1.0},
    "grid": {"x_min": -4.0, "x_max": 4.0, "n": 2001},
}


def write_config(tmp_path: Path, payload: dict, name: str = "run.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def rabi_config(**extra) -> dict:
    payload = {
        "tls": {"delta": 1.0},
        "modes": [{"omega_ph": 1.0, "n_max": 8}],
        "eta": 0.0,
        "levels": 4,
        "tolerances": {"converge": 1e-9},
    }
    payload.update(extra)
    return payload


def run(argv, tmp_path: Path):
    return cli.run(list(argv) + ["--out", str(tmp_path / "out")])


def test_reduce_symmetric_double_well(tmp_path, capsys):
    cfg = write_config(tmp_path, DOUBLE_WELL)
    assert run(["reduce", "--config", str(cfg)], tmp_path) == 0

    payload = json.loads(capsys.readouterr().out)
    tls = payload["tls"]
    assert abs(tls["eps"]) < 1e-6 * tls["delta"]
    assert payload["delta_minus_2t"] == pytest.approx(0.0, abs=1e-15)
    assert (tmp_path / "out" / "reduce.json").is_file()
    assert (tmp_path / "out" / "reduce.manifest.json").is_file()


def test_reduce_harmonic_reports_unit_anharmonicity(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            "potential": {"kind": "harmonic", "V0": 0.5, "x0": 1.0},
            "grid": {"x_min": -10.0, "x_max": 10.0, "n": 2001},
            "eta": 0.05,
        },
    )
    assert run(["reduce", "--config", str(cfg)], tmp_path) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["tls"]["mu"] == pytest.approx(1.0, abs=1e-3)
    assert payload["validity"]["verdict"] == "valid"


def test_malformed_json_exits_with_config_code(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text('{"potential": {"kind": ')
    assert run(["reduce", "--config", str(cfg)], tmp_path) == cli.EXIT_CONFIG
    err = capsys.readouterr().err.strip()
    assert err.startswith("[error]")
    assert "\n" not in err


def test_unknown_keys_are_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, {**DOUBLE_WELL, "colour": "blue"})
    assert run(["reduce", "--config", str(cfg)], tmp_path) == cli.EXIT_CONFIG
    assert "colour" in capsys.readouterr().err

    nested = {**DOUBLE_WELL, "grid": {"x_min": -4.0, "x_max": 4.0, "n": 2001, "dx": 0.1}}
    cfg = write_config(tmp_path, nested, "nested.json")
    assert run(["reduce", "--config", str(cfg)], tmp_path) == cli.EXIT_CONFIG


def test_boundary_leak_exits_with_numeric_code(tmp_path):
    narrow = {
        "potential": {"kind": "harmonic", "V0": 0.5, "x0": 1.0},
        "grid": {"x_min": -1.5, "x_max": 1.5, "n": 301},
    }
    cfg = write_config(tmp_path, narrow)
    assert run(["reduce", "--config", str(cfg)], tmp_path) == cli.EXIT_NUMERIC


def test_missing_config_flag(tmp_path):
    assert run(["spectrum"], tmp_path) == cli.EXIT_CONFIG


def test_spectrum_csv_and_manifest(tmp_path):
    cfg = write_config(tmp_path, rabi_config())
    assert run(["spectrum", "--config", str(cfg), "--json"], tmp_path) == 0

    out = tmp_path / "out"
    header, rows = read_csv(out / "spectrum.csv")
    assert header == ["level", "energy"]
    assert [float(r[1]) for r in rows] == pytest.approx([-0.5, 0.5, 0.5, 1.5], abs=1e-12)

    manifest = json.loads((out / "spectrum.manifest.json").read_text())
    assert manifest["command"] == "spectrum"
    assert manifest["config"] == rabi_config()
    assert set(manifest["versions"]) >= {"python", "numpy", "scipy", "matplotlib"}
    digest = hashlib.sha256((out / "spectrum.csv").read_bytes()).hexdigest()
    assert manifest["artifacts"]["spectrum.csv"] == digest
    mirror = json.loads((out / "spectrum.json").read_text())
    assert mirror["header"] == ["level", "energy"]


def test_units_scale_reported_energies(tmp_path):
    natural = rabi_config(tls={"delta": 2.0}, modes=[{"omega_ph": 2.0, "n_max": 4}], levels=3)
    cfg = write_config(tmp_path, natural)
    assert run(["spectrum", "--config", str(cfg)], tmp_path) == 0
    _, rows = read_csv(tmp_path / "out" / "spectrum.csv")
    assert [float(r[1]) for r in rows] == pytest.approx([-0.5, 0.5, 0.5])

    cfg = write_config(tmp_path, {**natural, "units": "absolute"}, "abs.json")
    assert run(["spectrum", "--config", str(cfg)], tmp_path) == 0
    _, rows = read_csv(tmp_path / "out" / "spectrum.csv")
    assert [float(r[1]) for r in rows] == pytest.approx([-1.0, 1.0, 1.0])


def test_data_artifacts_are_reproducible(tmp_path):
    cfg = write_config(tmp_path, rabi_config(eta=0.4))
    assert run(["converge", "--config", str(cfg)], tmp_path) == 0
    first = (tmp_path / "out" / "converge.csv").read_bytes()
    assert run(["converge", "--config", str(cfg)], tmp_path) == 0
    assert (tmp_path / "out" / "converge.csv").read_bytes() == first


def test_converge_decoupled_single_doubling(tmp_path):
    cfg = write_config(tmp_path, rabi_config())
    assert run(["converge", "--config", str(cfg)], tmp_path) == 0
    header, rows = read_csv(tmp_path / "out" / "converge_history.csv")
    assert header == ["n", "residual"]
    assert len(rows) == 1
    assert float(rows[0][1]) <= 1e-12


def test_gauge_check_table(tmp_path):
    payload = rabi_config(levels=6, gauge_check={"eta_grid": [0.1, 0.5, 1.0]})
    cfg = write_config(tmp_path, payload)
    assert run(["gauge-check", "--config", str(cfg)], tmp_path) == 0

    header, rows = read_csv(tmp_path / "out" / "gauge_check.csv")
    assert header[:3] == ["eta", "gi_deviation", "linearized_deviation"]
    assert len(rows) == 3
    assert all(float(r[1]) <= 1e-7 for r in rows)
    assert float(rows[-1][2]) > 0.05


def test_cutoff_table_has_analytic_zeros(tmp_path):
    ks = [0.5, 2 * math.pi, 4 * math.pi, 9.0, 30.0]
    payload = {
        "tls": {"delta": 1.0, "a": 1.0},
        "modes": [{"omega_ph": 1.0, "A0": 0.5, "profile": {"kind": "cosine"}}],
        "cutoff": {"k_values": ks},
    }
    cfg = write_config(tmp_path, payload)
    assert run(["cutoff", "--config", str(cfg)], tmp_path) == 0

    header, rows = read_csv(tmp_path / "out" / "cutoff.csv")
    assert header == ["k", "eta_k"]
    values = {float(k): float(eta) for k, eta in rows}
    assert abs(values[float("%.12g" % (2 * math.pi))]) < 1e-10
    assert abs(values[float("%.12g" % (4 * math.pi))]) < 1e-10
    assert values[0.5] == pytest.approx(0.5 / 0.5 * math.sin(0.25), abs=1e-10)


def test_cutoff_linspace_block(tmp_path):
    payload = {"tls": {"delta": 1.0}, "cutoff": {"k_min": 0.1, "k_max": 30.0, "points": 50}}
    cfg = write_config(tmp_path, payload)
    assert run(["cutoff", "--config", str(cfg)], tmp_path) == 0
    _, rows = read_csv(tmp_path / "out" / "cutoff.csv")
    assert len(rows) == 50
    for k, eta in rows:
        assert abs(float(eta)) <= 1.0 / float(k) + 1e-10


def test_sweep_with_failed_point_still_exits_ok(tmp_path, capsys):
    payload = rabi_config(
        eta=0.2, levels=2, sweep={"parameter": "omega_ph", "grid": [1.0, -1.0], "metric": "levels"}
    )
    cfg = write_config(tmp_path, payload)
    assert run(["sweep", "--config", str(cfg)], tmp_path) == 0

    header, rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert header[-1] == "status"
    assert [r[-1] for r in rows] == ["ok", "error:config"]
    manifest = json.loads((tmp_path / "out" / "sweep.manifest.json").read_text())
    assert manifest["warnings"] == 1
    assert "1 warning" in capsys.readouterr().out


def test_max_dim_env_turns_large_model_into_numeric_error(tmp_path, monkeypatch):
    monkeypatch.setenv("GAUGE_RABI_MAX_DIM", "16")
    cfg = write_config(tmp_path, rabi_config(modes=[{"omega_ph": 1.0, "n_max": 64}]))
    assert run(["spectrum", "--config", str(cfg)], tmp_path) == cli.EXIT_NUMERIC


def write_table(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def test_plot_svg_has_one_series_per_column_and_is_stable(tmp_path):
    csv_path = write_table(tmp_path / "table.csv", "k,a,b,c\n0,1,2,3\n1,2,3,4\n")
    argv = ["plot", "--csv", str(csv_path), "--x", "k", "--y", "a", "--y", "b"]
    assert run(argv, tmp_path) == 0

    svg_path = tmp_path / "out" / "table.svg"
    svg = svg_path.read_text()
    assert 'id="series-a"' in svg
    assert 'id="series-b"' in svg
    assert 'id="series-c"' not in svg

    first = svg_path.read_bytes()
    assert run(argv, tmp_path) == 0
    assert svg_path.read_bytes() == first


def test_plot_from_config_block(tmp_path):
    write_table(tmp_path / "cut.csv", "k,eta_k\n1,0.4\n2,0.2\n3,\n")
    cfg = write_config(tmp_path, {"plot": {"csv": "cut.csv", "x": "k", "y": ["eta_k"]}})
    assert run(["plot", "--config", str(cfg)], tmp_path) == 0
    assert 'id="series-eta_k"' in (tmp_path / "out" / "cut.svg").read_text()


def test_plot_errors_use_data_exit_code(tmp_path):
    csv_path = write_table(tmp_path / "table.csv", "k,a\n0,1\n")
    missing = ["plot", "--csv", str(csv_path), "--x", "k", "--y", "zzz"]
    assert run(missing, tmp_path) == cli.EXIT_DATA

    empty = write_table(tmp_path / "empty.csv", "k,a\n")
    assert run(["plot", "--csv", str(empty), "--x", "k", "--y", "a"], tmp_path) == cli.EXIT_DATA

    absent = ["plot", "--csv", str(tmp_path / "nope.csv"), "--x", "k", "--y", "a"]
    assert run(absent, tmp_path) == cli.EXIT_DATA


def test_parse_run_config_validation():
    with pytest.raises(cli.ConfigError):
        cli.parse_run_config({"units": "imperial"})
    with pytest.raises(cli.ConfigError):
        cli.parse_run_config({"tls": {"delta": 1.0}, **DOUBLE_WELL})
    with pytest.raises(cli.ConfigError):
        cli.parse_run_config({"levels": "six"})
    bad_profile = {"kind": "cosine", "amp": 1}
    with pytest.raises(cli.ConfigError):
        cli.parse_run_config({"modes": [{"omega_ph": 1.0, "profile": bad_profile}]})
    run_cfg = cli.parse_run_config(rabi_config(gauge="dipole"))
    assert run_cfg.gauge == "dipole"
    assert cli.build_model(run_cfg).eta == 0.0


def test_config_max_dim_caps_every_command(tmp_path):
    payload = rabi_config(modes=[{"omega_ph": 1.0, "n_max": 64}], max_dim=16)
    cfg = write_config(tmp_path, payload)
    assert run(["spectrum", "--config", str(cfg)], tmp_path) == cli.EXIT_NUMERIC


def test_config_max_dim_overrides_a_lower_settings_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("GAUGE_RABI_MAX_DIM", "16")
    payload = rabi_config(modes=[{"omega_ph": 1.0, "n_max": 16}], max_dim=64)
    cfg = write_config(tmp_path, payload)
    assert run(["spectrum", "--config", str(cfg)], tmp_path) == 0
    assert run(["converge", "--config", str(cfg)], tmp_path) == 0
    _, rows = read_csv(tmp_path / "out" / "converge_history.csv")
    assert [int(r[0]) for r in rows] == [32]
