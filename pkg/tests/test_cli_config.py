import math

import numpy as np
import pytest
import yaml
from click.testing import CliRunner
from pydantic import ValidationError

from kinrelax import config, exports
from kinrelax.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, data, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def test_missing_dt_names_field(tmp_path, runner):
    path = _write(tmp_path, {"problem": "gas", "horizon": 10.0, "initial_data": {"variant": "equilibrium"}})
    with pytest.raises(ValidationError) as exc:
        config.load_config(path)
    assert "dt" in str(exc.value)
    res = runner.invoke(main, ["solve", path])
    assert res.exit_code == 2
    assert "dt" in res.output


def test_config_invariants(tmp_path):
    base = {"problem": "gas", "horizon": 1.0, "dt": 0.1, "initial_data": {"variant": "equilibrium"}}
    config.load_config(_write(tmp_path, base))
    for bad in ({"dt": 2.0}, {"dt": -0.1}, {"problem": "radiative"}, {"initial_data": None},
                {"monte_carlo": {"particle_count": 0}}, {"unknown": 1}):
        with pytest.raises(ValidationError):
            config.load_config(_write(tmp_path, {**base, **bad}))


def test_presets_load():
    names = config.preset_names()
    assert {"gas-bounded-default", "radiative-default", "bounds-default"} <= set(names)
    for name in names:
        cfg = config.load_config(name)
        if cfg.initial_data is not None:
            config.build_initial_data(cfg.initial_data)


def test_unknown_preset(runner):
    res = runner.invoke(main, ["solve", "no-such-preset"])
    assert res.exit_code == 2


def test_schema_and_presets_commands(runner):
    res = runner.invoke(main, ["schema"])
    assert res.exit_code == 0 and '"dt"' in res.output
    res = runner.invoke(main, ["presets"])
    assert "radiative-default" in res.output


def test_kernel_command(runner, tmp_path):
    out = tmp_path / "k.csv"
    res = runner.invoke(main, ["kernel", "--variant", "monokinetic", "--t-max", "3", "--points", "31", "-o", str(out)])
    assert res.exit_code == 0
    cols, data, notes = exports.read_table(out)
    assert cols == ["tau", "K", "cdf", "tail_ratio"]
    np.testing.assert_allclose(data[:, 1], np.where(data[:, 0] < 2.0, data[:, 0] / 2.0, 0.0), atol=1e-15)
    res = runner.invoke(main, ["kernel", "--moments"])
    assert res.exit_code == 0 and "1,0.835542758210" in res.output


def test_bounds_command_and_validation(runner):
    res = runner.invoke(main, ["bounds", "--points", "5"])
    assert res.exit_code == 0
    assert "envelope_value" in res.output
    res = runner.invoke(main, ["bounds", "--epsilon", "0.7"])
    assert res.exit_code == 2
    res = runner.invoke(main, ["bounds", "--kind", "log_entropy", "--t-min", "2", "--t-max", "5"])
    assert res.exit_code == 2


def test_spectrum_command(runner):
    res = runner.invoke(main, ["spectrum", "--depth", "1.0", "--no-bisection"])
    assert res.exit_code == 0
    alpha = float([ln for ln in res.output.splitlines() if ln.startswith("# alpha:")][0].split(":")[1])
    assert alpha == pytest.approx(0.69605924137, rel=1e-9)


def test_solve_command(runner, tmp_path):
    path = _write(tmp_path, {"problem": "gas", "horizon": 2.0, "dt": 0.01, "initial_data": {"variant": "equilibrium"}})
    res = runner.invoke(main, ["solve", path])
    assert res.exit_code == 0
    out = tmp_path / "mu.csv"
    out.write_text(res.output, encoding="utf-8")
    cols, data, notes = exports.read_table(out)
    assert cols[:3] == ["t", "mu", "S"]
    np.testing.assert_allclose(data[:, 1], 1.0 / math.sqrt(2 * math.pi), atol=1e-9)
    assert "mu_infinity" in notes and "residual_max" in notes
    assert runner.invoke(main, ["solve", "bounds-default"]).exit_code == 2


def test_mc_command(runner, tmp_path):
    path = _write(tmp_path, {"problem": "gas", "horizon": 2.0, "dt": 0.01, "initial_data": {"variant": "equilibrium"},
                             "monte_carlo": {"bin_width": 0.5}})
    res = runner.invoke(main, ["mc", path, "--particles", "20000", "--seed", "3", "--horizon", "2"])
    assert res.exit_code == 0
    assert "bin_center,flux_estimate,stderr" in res.output


def test_table_roundtrip(tmp_path):
    rows = [(0.1, 1.0 / 3.0), (0.2, math.pi)]
    path = exports.write_table(tmp_path / "t.csv", ["a", "b"], rows, {"kind": "x"}, {"total": 1.5})
    cols, data, notes = exports.read_table(path)
    assert cols == ["a", "b"]
    np.testing.assert_array_equal(data, np.array(rows))
    assert notes == {"kind": "x", "total": "1.5"}
    text = path.read_text(encoding="utf-8")
    assert "\r" not in text and text.endswith("\n")


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_bounds_run_reproducible(runner, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert runner.invoke(main, ["run", "bounds-default", "--output-dir", str(a)]).exit_code == 0
    assert runner.invoke(main, ["run", "bounds-default", "--output-dir", str(b)]).exit_code == 0
    assert _files(a) == _files(b)


def test_radiative_run_summary_matches_exports(runner, tmp_path):
    out = tmp_path / "rad"
    res = runner.invoke(main, ["run", "radiative-default", "--no-mc", "--output-dir", str(out)])
    assert res.exit_code == 0, res.output
    summary = yaml.safe_load((out / "summary.yaml").read_text(encoding="utf-8"))
    _, zeros, znotes = exports.read_table(out / "zeros.csv")
    _, mu, mnotes = exports.read_table(out / "mu.csv")
    assert summary["spectral"]["alpha"] == float(znotes["alpha"])
    assert summary["spectral"]["zeros_in_strip"] == len(zeros)
    assert summary["renewal"]["mu_infinity"] == float(mnotes["mu_infinity"])
    assert summary["spectral"]["relative_difference"]["pass"]
    again = tmp_path / "rad2"
    runner.invoke(main, ["run", "radiative-default", "--no-mc", "--output-dir", str(again)])
    assert _files(out) == _files(again)


def test_gas_run_reports_p1_exponent(runner, tmp_path):
    out = tmp_path / "gas"
    res = runner.invoke(main, ["run", "gas-bounded-default", "--no-mc", "--output-dir", str(out)])
    assert res.exit_code == 0, res.output
    summary = yaml.safe_load((out / "summary.yaml").read_text(encoding="utf-8"))
    text = yaml.safe_dump(summary)
    assert "p1" in text
    cols, curves, notes = exports.read_table(out / "field_curves.csv")
    assert cols[0] == "t" and len(cols) == 3
