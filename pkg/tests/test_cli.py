"""Command-line client: exit codes, file outputs, reproducibility."""

import json
import os

import pytest

from f2walk.cli import main
from f2walk.reports import canonical_json, jsonable, render_csv, write_files

CHAIN_INI = """\
[run]
command = verify-chain
seed = 20240817
workers = 1

[verify-chain]
n_lo = -6
n_hi = -2
"""


def write_config(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_chain_end_to_end(tmp_path, capsys):
    cfg = write_config(tmp_path, CHAIN_INI)
    out_dir = str(tmp_path / "reports")
    code, out, err = run_cli(
        ["verify-chain", "--config", cfg, "--out", out_dir], capsys
    )
    assert code == 0
    assert "verify-chain: PASS (ok)" in out
    report_path = os.path.join(out_dir, "verify-chain.json")
    assert os.path.exists(report_path)
    assert os.path.exists(os.path.join(out_dir, "verify-chain_chain.csv"))
    assert os.path.exists(os.path.join(out_dir, "verify-chain_run_meta.json"))
    report = json.loads(open(report_path).read())
    assert report["passed"] is True
    assert report["seed"] == 20240817
    assert report["slot_rule"] == "FIRST_LETTER"


def test_rerun_is_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, CHAIN_INI)
    dir_a = str(tmp_path / "a")
    dir_b = str(tmp_path / "b")
    assert run_cli(["verify-chain", "--config", cfg, "--out", dir_a], capsys)[0] == 0
    assert run_cli(["verify-chain", "--config", cfg, "--out", dir_b], capsys)[0] == 0
    for fname in ("verify-chain.json", "verify-chain_chain.csv"):
        a = open(os.path.join(dir_a, fname), "rb").read()
        b = open(os.path.join(dir_b, fname), "rb").read()
        assert a == b


def test_seed_override_lands_in_report(tmp_path, capsys):
    cfg = write_config(tmp_path, CHAIN_INI)
    out_dir = str(tmp_path / "r")
    code, out, _ = run_cli(
        ["verify-chain", "--config", cfg, "--seed", "123", "--out", out_dir], capsys
    )
    assert code == 0
    report = json.loads(open(os.path.join(out_dir, "verify-chain.json")).read())
    assert report["seed"] == 123


def test_default_out_dir_env(tmp_path, capsys, monkeypatch):
    cfg = write_config(tmp_path, CHAIN_INI)
    env_dir = str(tmp_path / "envout")
    monkeypatch.setenv("F2WALK_OUT", env_dir)
    code, _, _ = run_cli(["verify-chain", "--config", cfg], capsys)
    assert code == 0
    assert os.path.exists(os.path.join(env_dir, "verify-chain.json"))


def test_no_config_runs_defaults(tmp_path, capsys):
    # verify-chain defaults are the full exact window; keep it explicit
    out_dir = str(tmp_path / "d")
    code, out, _ = run_cli(["verify-chain", "--out", out_dir], capsys)
    assert code == 0
    assert "PASS" in out


def test_missing_config_file_exit_3(tmp_path, capsys):
    code, _, err = run_cli(
        ["verify-chain", "--config", str(tmp_path / "absent.ini")], capsys
    )
    assert code == 3
    assert "config-invalid" in err


def test_bad_section_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "[run]\ncommand = axioms\n\n[mystery]\nx = 1\n")
    code, _, err = run_cli(["axioms", "--config", cfg], capsys)
    assert code == 3
    assert "config-invalid" in err


def test_check_failure_exit_2(tmp_path, capsys):
    # a window cap of zero cannot reach the needed pass fraction
    cfg = write_config(
        tmp_path,
        "[run]\ncommand = survey\n\n[survey]\n"
        "level = 0\npoints = 8\nn_max = 0\nwalks_min = 32\nwalks_max = 32\n"
        "batch = 32\nwindow_level = 0.2\n",
    )
    out_dir = str(tmp_path / "f")
    code, out, _ = run_cli(["survey", "--config", cfg, "--out", out_dir], capsys)
    assert code == 2
    assert "FAIL (check-failed)" in out
    report = json.loads(open(os.path.join(out_dir, "survey-level0.json")).read())
    assert report["passed"] is False
    assert report["window_found"] is False


def test_unreachable_server_exit_4(tmp_path, capsys):
    cfg = write_config(tmp_path, CHAIN_INI)
    code, _, err = run_cli(
        [
            "verify-chain",
            "--config",
            cfg,
            "--server",
            "http://127.0.0.1:9",  # discard port; nothing listens
        ],
        capsys,
    )
    assert code == 4
    assert "infra-failed" in err


def test_unknown_command_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["frobnicate"])


# -- serialization helpers ------------------------------------------------


def test_render_csv_cells():
    text = render_csv(
        ["a", "b", "c", "d"],
        [[1, 0.5, True, None], ["x", 2.0, False, "y"]],
    )
    assert text == "a,b,c,d\n1,0.5,true,\nx,2.0,false,y\n"


def test_canonical_json_fractions():
    from fractions import Fraction

    s = canonical_json({"alpha": Fraction(39, 64), "ok": True})
    assert '"39/64"' in s
    assert s.endswith("\n")
    assert jsonable(Fraction(1, 2)) == "1/2"


def test_write_files_layout(tmp_path):
    written = write_files(
        str(tmp_path), "demo", {"x": 1}, {"t": (["h"], [[1], [2]])}
    )
    names = {os.path.basename(p) for p in written}
    assert names == {"demo.json", "demo_t.csv"}
    assert os.path.exists(tmp_path / "demo_run_meta.json")
