"""End-to-end command-line behavior: formats, determinism, exit codes."""

import csv
import math

import pytest

from clusterqb.cli import main
from clusterqb.energetics import INFINITE, stored_energy
from clusterqb.model import H1, ModelSpec


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(path):
    with open(path, newline="") as fh:
        plain = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(plain))


def test_curve_basic_csv(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code, _, err = run(capsys, "curve", "--sizes", "12", "--n-fixed", "2",
                       "--grid", "16", "--beta", "inf", "--out", str(out))
    assert code == 0 and err == ""
    text = out.read_text().splitlines()
    assert text[0].startswith("# generated: ")
    assert text[1].startswith("# params: model=h1 rule=fixed n_fixed=2 ")
    assert text[2] == "model,N,n,phi_b,phi_c,beta,tau,energy,power"
    rows = read_csv(out)
    assert len(rows) == 16
    # 17-digit serialization round-trips the engine values bit for bit
    b = ModelSpec(H1, 12, 2, 0.0)
    c = b.with_phi(math.pi / 2 - 0.3)
    for rec in rows:
        tau = float(rec["tau"])
        e = stored_energy(b, c, INFINITE, tau)
        assert float(rec["energy"]) == e
        assert float(rec["power"]) == e / tau
        assert rec["beta"] == "inf"


def test_curve_default_beta_list(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "curve", "--sizes", "10", "--grid", "8", "--out", str(out))
    assert code == 0
    assert sorted({rec["beta"] for rec in read_csv(out)}) == ["1", "inf"]


def test_curve_no_quench_is_all_zero(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "curve", "--sizes", "10", "--phi-b", "0.8",
                     "--phi-c", "0.8", "--grid", "8", "--out", str(out))
    assert code == 0
    for rec in read_csv(out):
        assert rec["energy"] == "0" and rec["power"] == "0"


def test_curve_deterministic_with_no_meta(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["curve", "--sizes", "14", "--n-fixed", "3", "--grid", "32", "--no-meta"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    capsys.readouterr()
    blob_a, blob_b = a.read_bytes(), b.read_bytes()
    assert blob_a == blob_b
    assert not blob_a.startswith(b"# generated")


def test_sweep_csv_and_fit_report(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, err = run(capsys, "sweep", "--model", "h2", "--n-fixed", "15",
                       "--sizes", "36,49,64,81", "--grid", "256", "--out", str(out))
    assert code == 0 and err == ""
    lines = out.read_text().splitlines()
    assert lines[2] == "model,N,n,tau_max,p_max,e_max,boundary_hit"
    rows = read_csv(out)
    assert [r["N"] for r in rows] == ["36", "49", "64", "81"]
    assert all(r["n"] == "15" for r in rows)

    report = (tmp_path / "sweep.csv.fit.txt").read_text().splitlines()
    body = "\n".join(report)
    for key in ("# params:", "phi_b=0", "phi_c=1.2707963267948965",
                "sizes = 36,49,64,81", "n_values = ", "boundary_hits = ",
                "mean_p_max_n_over_N = ", "a = ", "alpha = ",
                "alpha_reference = 0.89329999999999998", "r_squared = ", "residuals = "):
        assert key in body, f"missing {key!r} in fit report"


def test_sweep_warns_on_rejected_sizes(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, err = run(capsys, "sweep", "--n-fixed", "15", "--sizes", "9,36,49,64",
                       "--grid", "64", "--out", str(out))
    assert code == 0
    assert "skipped N=9" in err
    assert [r["N"] for r in read_csv(out)] == ["36", "49", "64"]
    assert "rejected = N=9" in (tmp_path / "sweep.csv.fit.txt").read_text()


def test_sweep_too_few_rows_skips_fit(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--n-fixed", "2", "--sizes", "12,16",
                     "--grid", "64", "--out", str(out))
    assert code == 0
    assert "fit = skipped" in (tmp_path / "sweep.csv.fit.txt").read_text()


def test_fit_inject_power_law_echoes_parameters(capsys):
    code, out, _ = run(capsys, "fit", "--inject-power-law", "0.001,0.8933",
                       "--sizes", "36,49,64,81,100", "--no-meta")
    assert code == 0
    kv = dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)
    assert abs(float(kv["a"]) - 0.001) <= 1e-10
    assert abs(float(kv["alpha"]) - 0.8933) <= 1e-10
    assert float(kv["r_squared"]) == pytest.approx(1.0, abs=1e-12)


def test_fit_reads_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--n-fixed", "3", "--sizes", "12,16,20,24",
                 "--grid", "128", "--out", str(out)]) == 0
    capsys.readouterr()
    code, text, _ = run(capsys, "fit", "--in", str(out), "--no-meta")
    assert code == 0
    assert "alpha = " in text and "r_squared = " in text


def test_fit_without_inputs_is_usage_error(capsys):
    code, _, err = run(capsys, "fit")
    assert code == 1 and "error:" in err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model: h2\nphi_c: 0.9\nsizes: [10]\ngrid: 8\nno_meta: true\n")
    out = tmp_path / "c.csv"
    code, _, _ = run(capsys, "curve", "--config", str(cfg), "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0]["model"] == "h2"
    assert float(rows[0]["phi_c"]) == 0.9

    code, _, _ = run(capsys, "curve", "--config", str(cfg), "--phi-c", "1.2",
                     "--out", str(out))
    assert code == 0
    assert float(read_csv(out)[0]["phi_c"]) == 1.2


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model: h1\nwibble: 3\n")
    code, _, err = run(capsys, "curve", "--config", str(cfg))
    assert code == 1 and "unknown config keys: wibble" in err


def test_usage_errors_exit_one(capsys):
    cases = [
        ["curve", "--beta", "-1"],
        ["curve", "--grid", "1"],
        ["curve", "--sizes", "abc"],
        ["sweep", "--sizes", "49,36"],
        ["sweep", "--beta", "inf,1"],
        ["oracle-check", "--sizes", ""],
        ["oracle-check", "--sizes", "16"],
        ["curve", "--not-a-flag"],
        ["fit", "--inject-power-law", "nonsense"],
    ]
    for argv in cases:
        code, _, err = run(capsys, *argv)
        assert code == 1, argv
        assert err, argv


def test_oracle_check_passes_and_corruption_fails(capsys):
    code, out, err = run(capsys, "oracle-check", "--sizes", "6")
    assert code == 0 and err == ""
    assert "max |diff| = " in out

    code, out, err = run(capsys, "oracle-check", "--sizes", "6",
                         "--corrupt-scale", "2")
    assert code == 2
    assert "FAIL" in err and "tolerance failure" in err
