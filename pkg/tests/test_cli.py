import json

import pytest

from symglm.cli import ExperimentManifest, UsageError, main, parse_config


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run_cli(capsys, "list")
    assert code == 0
    lines = {l.split()[0]: l.split() for l in out.strip().splitlines()[1:]}
    for n in ("4123A", "4123B", "4123C", "4223A", "4124A", "4124B", "4124C", "4124D", "4124E",
              "midpoint", "suzuki4115", "lobatto3b"):
        assert n in lines
    assert lines["4124B"][7] == "yes"
    assert lines["4123A"][7] == "no"
    assert lines["lobatto3b"][3] == "1"


def test_verify_all_pass(capsys):
    code, out, _ = run_cli(capsys, "verify", "4123A")
    assert code == 0 and "all applicable checks pass" in out


def test_verify_4123C_marks_structural_na(capsys):
    code, out, _ = run_cli(capsys, "verify", "4123C")
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("gsym-thm-conditions"))
    assert "FAIL (n/a)" in line


def test_verify_json(capsys):
    code, out, _ = run_cli(capsys, "verify", "4124B", "--json")
    objs = [json.loads(l) for l in out.strip().splitlines()]
    assert code == 0
    assert all(set(o) == {"method", "check", "residual", "pass"} for o in objs)
    assert {o["check"] for o in objs} >= {"symmetry", "gsymplectic-matrix", "gsym-thm-conditions"}


def test_verify_unknown_method(capsys):
    code, _, err = run_cli(capsys, "verify", "nosuch")
    assert code == 2 and "unknown method" in err


def test_bad_subcommand(capsys):
    assert main(["frobnicate"]) == 2


def test_order_table(capsys):
    code, out, _ = run_cli(capsys, "order", "4123A", "--table")
    assert code == 0 and "verified order 4" in out
    assert "25/144" in out


def test_order_needs_exact(capsys):
    code, _, _ = run_cli(capsys, "order", "suzuki4115")
    assert code == 1


def test_run_writes_csv(capsys, tmp_path):
    out = tmp_path / "k.csv"
    code, text, _ = run_cli(capsys, "run", "--method", "4124B", "--problem", "kepler", "--h", "0.01",
                            "--T", "0.5", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,H_err,L_err" and len(lines) == 51
    assert "wall time" in text and "Newton iterations" in text


def test_run_single_row(capsys, tmp_path):
    out = tmp_path / "one.csv"
    assert main(["run", "--method", "4123A", "--problem", "kepler", "--h", "0.01", "--T", "0.01",
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2


def test_run_out_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SYMGLM_OUT_DIR", str(tmp_path / "outdir"))
    assert main(["run", "--method", "midpoint", "--problem", "tlv", "--h", "0.1", "--T", "0.2",
                 "--out", "tlv.csv"]) == 0
    assert (tmp_path / "outdir" / "tlv.csv").exists()


def test_run_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "m.cfg"
    out = tmp_path / "c.csv"
    cfg.write_text(f"method = 4124D\nproblem = kepler\nh = 0.01\nT = 5.0 # long\nout = {out}\n")
    assert main(["run", "--config", str(cfg), "--T", "0.03"]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_run_usage_errors(capsys):
    assert main(["run", "--method", "4124D", "--problem", "kepler"]) == 2
    assert main(["run", "--method", "4124D", "--problem", "mars", "--h", "0.1", "--T", "1"]) == 2
    assert main(["run", "--method", "nosuch", "--problem", "kepler", "--h", "0.1", "--T", "1"]) == 2
    assert main(["run", "--method", "4124D", "--problem", "kepler", "--h", "-1", "--T", "1"]) == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_run_abort_partial_csv(capsys, tmp_path):
    out = tmp_path / "dp.csv"
    code = main(["run", "--method", "4124D", "--problem", "dp", "--h", "3.0", "--T", "300",
                 "--out", str(out), "--newton-tol", "1e-15"])
    assert code == 1
    assert out.read_text().startswith("t,H_err")


def test_determinism(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["run", "--method", "4123A", "--problem", "hh",
                     "--h", "0.25", "--T", "25", "--seed", "42", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_manifest_round_trip():
    m = ExperimentManifest("4124B", "kepler", 0.1 + 0.2, 1e3, 10, "x/y.csv", 7, False, 3e-14)
    assert ExperimentManifest.from_text(m.to_text()) == m


def test_manifest_out(tmp_path):
    mf = tmp_path / "run.cfg"
    main(["run", "--method", "4123A", "--problem", "kepler", "--h", "0.01", "--T", "0.02",
          "--out", str(tmp_path / "r.csv"), "--manifest-out", str(mf)])
    m = ExperimentManifest.from_text(mf.read_text())
    assert (m.method, m.h, m.T) == ("4123A", 0.01, 0.02)


def test_parse_config_errors():
    with pytest.raises(UsageError):
        parse_config("no equals sign")
    with pytest.raises(UsageError):
        ExperimentManifest.from_text("method = a\nproblem = b\nh = 1\nT = 1\ncolour = red\n")


def test_full_scale_flag_resolves_settings(tmp_path):
    from symglm.cli import _manifest_from_args, build_parser

    args = build_parser().parse_args(["run", "--method", "4124B", "--problem", "hh", "--paper-scale"])
    m = _manifest_from_args(args)
    assert (m.h, m.T) == (0.25, 1e6)


def test_convergence(capsys):
    code, out, _ = run_cli(capsys, "convergence", "--method", "4124B", "--problem", "harmonic",
                           "--h", "0.2", "0.1", "0.05", "--workers", "2")
    rows = [l.split() for l in out.strip().splitlines()[1:]]
    assert code == 0 and len(rows) == 3
    errors = [float(r[1]) for r in rows]
    assert errors[0] > errors[1] > errors[2]
    assert all(3.7 < float(r[2]) < 4.3 for r in rows[1:])


def test_stability_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, text, _ = run_cli(capsys, "stability", "4123A", "--x-max", "3", "--n", "30", "--out", str(out))
    rows = out.read_text().splitlines()
    assert code == 0
    assert rows[0] == "x,abs_lambda1,abs_lambda2,deviation"
    assert rows[1].split(",")[0] == "0" and float(rows[1].split(",")[-1]) == 0
    assert "k0_estimate" in text
    k0 = float(text.split("=")[1].split()[0])
    assert k0 > 0
