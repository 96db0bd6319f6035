import csv
import json
import subprocess
import sys

import pytest

from redccr import cli
from redccr.config import EXPERIMENTS, default_config_text, load_config
from redccr.exceptions import ConfigError


def run(tmp_path, *args):
    return cli.main([*args, "-q", "-o", str(tmp_path)])


def manifest(tmp_path, name):
    return json.loads((tmp_path / name / "manifest.json").read_text())


def read_csv(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def test_default_config_round_trips(tmp_path, capsys):
    assert cli.main(["default-config"]) == 0
    text = capsys.readouterr().out
    assert text == default_config_text()
    p = tmp_path / "cfg.ini"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg.seed == 20240611
    assert cfg.section("ccr").get_int("N") == 2


def test_config_fallbacks_and_overrides():
    cfg = load_config(overrides=["grid.n_polar=3", "ccr.trials=4"])
    sec = cfg.section("ccr")
    assert sec.get_int("trials") == 4
    assert sec.grid_spec().n_polar == 3  # falls back to [grid]
    assert sec.grid_spec().n_radial == 2  # section value wins
    assert cfg.section("radiation").profile_args()[0] == "power_exp"


@pytest.mark.parametrize("override", ["nodot=1", "ccr.tol", "nosuch.key=1", "grid.k_min=-1",
                                      "grid.n_radial=two", "profile.template=gaussian"])
def test_bad_overrides_raise(override):
    with pytest.raises(ConfigError):
        load_config(overrides=[override])


def test_unknown_section_name():
    with pytest.raises(ConfigError):
        load_config().section("nonsense")


def test_corrupted_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid\nk_min = 1\n")
    assert cli.main(["theorem1", "-c", str(bad), "-o", str(tmp_path)]) == 2
    assert "config" in capsys.readouterr().err
    assert cli.main(["ccr", "-c", str(tmp_path / "missing.ini"), "-o", str(tmp_path)]) == 2


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code == 2


def test_ccr_artifacts(tmp_path):
    assert run(tmp_path, "ccr") == 0
    m = manifest(tmp_path, "ccr")
    assert m["schema_version"] == cli.SCHEMA_VERSION and m["status"] == "pass"
    assert m["metrics"]["max_ccr_residual"] < 1e-12
    assert m["artifacts"] == sorted(m["artifacts"])


def test_tightened_tolerance_fails_with_residuals(tmp_path):
    assert run(tmp_path, "ccr", "--set", "ccr.tol=1e-16") == 1
    m = manifest(tmp_path, "ccr")
    assert m["status"] == "fail"
    assert any("max_ccr_residual" in f and "measured" in f for f in m["failures"])


def test_theorem1_default(tmp_path):
    assert run(tmp_path, "theorem1") == 0
    rows = read_csv(tmp_path / "theorem1" / "convergence.csv")
    assert [int(r["N"]) for r in rows] == [4, 8, 16, 32, 64]
    assert list(rows[0]) == ["N", "finite_value_re", "finite_value_im", "limit_re", "limit_im", "abs_error"]
    m = manifest(tmp_path, "theorem1")
    assert abs(m["metrics"]["slope"] + 1.0) < 0.1
    dat = (tmp_path / "theorem1" / "convergence_error.dat").read_text().splitlines()
    assert dat[0].startswith("#") and len(dat) == 6


def test_theorem1_unbalanced_column_is_zero(tmp_path):
    assert run(tmp_path, "theorem1", "--set", "theorem1.m_prime=3") == 0
    for r in read_csv(tmp_path / "theorem1" / "convergence.csv"):
        assert float(r["finite_value_re"]) == 0 and float(r["finite_value_im"]) == 0


def test_insufficient_truncation_is_skipped_with_reason(tmp_path):
    assert run(tmp_path, "theorem1", "--set", "theorem1.oracle_n_max=1") == 0
    m = manifest(tmp_path, "theorem1")
    assert m["skipped"] and all("n_max=1" in s for s in m["skipped"])


def test_radiation_default_certifies(tmp_path):
    assert run(tmp_path, "radiation") == 0
    m = manifest(tmp_path, "radiation")["metrics"]
    assert m["fock_diverges"] and m["reducible_converged"]
    rows = read_csv(tmp_path / "radiation" / "sweep.csv")
    assert len(rows) == 7 and list(rows[0])[:3] == ["k_min", "n_red", "n_fock"]


def test_radiation_constant_profile_is_reported_not_asserted(tmp_path):
    assert run(tmp_path, "radiation", "--set", "radiation.template=constant") == 0
    m = manifest(tmp_path, "radiation")
    assert m["metrics"]["reducible_diverges"] and not m["metrics"]["reducible_converged"]
    assert m["notes"]


@pytest.mark.parametrize("value", ["", "0.1, 0.2"])
def test_radiation_bad_kmin_list_is_usage_error(tmp_path, value):
    assert run(tmp_path, "radiation", "--set", f"radiation.k_mins={value}") == 2


def test_explicit_kmin_list(tmp_path):
    # one row is written, but a single point cannot certify divergence
    assert run(tmp_path, "radiation", "--set", "radiation.k_mins=0.1") == 1
    assert len(read_csv(tmp_path / "radiation" / "sweep.csv")) == 1
    assert manifest(tmp_path, "radiation")["failures"]


def test_standalone_matches_suite(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "poisson") == 0
    assert run(b, "suite") == 0
    for f in (a / "poisson").iterdir():
        assert f.read_bytes() == (b / "poisson" / f.name).read_bytes()


def test_seed_changes_random_checks(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(a, "ccr")
    run(b, "ccr", "--seed", "7")
    assert manifest(a, "ccr")["seed"] != manifest(b, "ccr")["seed"]
    assert (a / "ccr" / "manifest.json").read_bytes() != (b / "ccr" / "manifest.json").read_bytes()


def test_suite_failure_list(tmp_path):
    assert run(tmp_path, "suite", "--set", "fields.tol=1e-18") == 1
    summary = json.loads((tmp_path / "suite.json").read_text())
    assert summary["status"] == "fail"
    assert summary["checks"]["fields"] == "fail"
    assert all(f["check"] == "fields" for f in summary["failures"])
    assert set(summary["checks"]) == set(EXPERIMENTS)


def test_json_has_no_nan():
    assert cli._clean({"a": float("nan"), "b": [float("inf"), 1.0]}) == {"a": None, "b": [None, 1.0]}


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "redccr.cli", "default-config"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("[run]")
