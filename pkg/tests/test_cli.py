import csv
import io
import json
import math

import numpy as np
import pytest

from tdbench import cli
from tdbench.quadrature import QuadratureFailure

PLANE_COLLIDED_0_1 = 0.49152566461006625


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_evaluate_plane_pulse_table(tmp_path):
    out = tmp_path / "plane.csv"
    code = cli.main(["evaluate", "--problem", "plane_pulse", "--times", "1,5,10", "--grid=-12:12:241",
                     "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == "coord,t,phi_u,phi_c,phi_total,err_u,err_c"
    table = rows(out)
    assert len(table) == 3 * 241
    # t-major, coordinate-minor
    assert [float(r["t"]) for r in table[:241]] == [1.0] * 241
    assert float(table[0]["coord"]) == -12.0 and float(table[240]["coord"]) == 12.0
    centre = next(r for r in table if float(r["t"]) == 1.0 and float(r["coord"]) == 0.0)
    assert float(centre["phi_u"]) == pytest.approx(math.exp(-1) / 2, rel=1e-15)
    assert float(centre["phi_c"]) == pytest.approx(PLANE_COLLIDED_0_1, rel=1e-10)
    for r in table:
        assert float(r["phi_total"]) == float(r["phi_u"]) + float(r["phi_c"])
        if abs(float(r["coord"])) > float(r["t"]):
            assert float(r["phi_total"]) == 0.0


def test_numbers_use_17_significant_digits(tmp_path):
    out = tmp_path / "a.csv"
    cli.main(["evaluate", "--points", "0.25", "--times", "1", "--out", str(out)])
    line = out.read_text().splitlines()[1]
    for field in line.split(","):
        mantissa = field.split("e")[0].lstrip("-")
        assert len(mantissa.replace(".", "")) == 17


def test_square_pulse_front_column(tmp_path):
    out = tmp_path / "sq.csv"
    assert cli.main(["evaluate", "--problem", "square_pulse", "--times", "1", "--grid=-2:2:81",
                     "--out", str(out)]) == 0
    for r in rows(out):
        x = abs(float(r["coord"]))
        total = float(r["phi_total"])
        if x >= 1.5:
            assert total == 0.0
        elif x <= 1.45:
            assert total > 0.0


@pytest.mark.parametrize("args", [["--grid=0:1:1"], ["--grid=1:0:5"], ["--points", ","], ["--times", ""],
                                  ["--problem", "sphere"], ["--c", "1.5"], ["--x0", "-1", "--problem", "square_pulse"],
                                  ["--grid", "bad"], ["--format", "xml"]])
def test_bad_configuration_exit_code(args, tmp_path, capsys):
    try:
        code = cli.main(["evaluate", *args, "--out", str(tmp_path / "x.csv")])
    except SystemExit as exc:  # argparse rejects invalid choices itself
        code = exc.code
    assert code == 2
    assert not (tmp_path / "x.csv").exists()


def test_source_term_examples(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["source-term", "--points", "0", "--times", "1", "--out", str(out)]) == 0
    assert float(rows(out)[0]["source"]) == pytest.approx(math.exp(-1) / 4, rel=1e-15)
    assert cli.main(["source-term", "--points", "0,0.5", "--times", "1", "--c", "0", "--out", str(out)]) == 0
    assert all(float(r["source"]) == 0.0 for r in rows(out))
    assert cli.main(["source-term", "--problem", "square_source", "--c", "0.6", "--points", "0",
                     "--times", "0.3", "--out", str(out)]) == 0
    assert float(rows(out)[0]["source"]) == pytest.approx(0.3 * (1 - math.exp(-0.3)), rel=1e-13)


def test_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["evaluate", "--problem", "gaussian_pulse", "--times", "1,2", "--grid=-3:3:13", "--format", "json"]
    cli.main(args + ["--out", str(a)])
    cli.main(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_json_embeds_resolved_config(tmp_path):
    out = tmp_path / "g.json"
    cli.main(["evaluate", "--problem", "gaussian_source", "--times", "1", "--points", "0",
              "--format", "json", "--out", str(out)])
    payload = json.loads(out.read_text())
    cfg = payload["config"]
    assert cfg["problem"] == "gaussian_source"
    assert cfg["sigma"] == 0.5 and cfg["t0"] == 5.0 and "x0" not in cfg
    assert payload["columns"] == "coord,t,phi_u,phi_c,phi_total,err_u,err_c".split(",")


def test_config_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# benchmark settings\nproblem = square_pulse\nc = 0.5\nx0 = 0.25\ntimes = 2\n",
                    encoding="utf-8")
    out = tmp_path / "o.json"
    cli.main(["evaluate", "--config", str(conf), "--c", "0.75", "--points", "0", "--format", "json",
              "--out", str(out)])
    cfg = json.loads(out.read_text())["config"]
    assert cfg["c"] == 0.75 and cfg["x0"] == 0.25 and cfg["times"] == [2.0]
    assert cfg["problem"] == "square_pulse"


def test_config_file_errors(tmp_path):
    conf = tmp_path / "bad.cfg"
    conf.write_text("colour = blue\n", encoding="utf-8")
    assert cli.main(["evaluate", "--config", str(conf)]) == 2
    assert cli.main(["evaluate", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_quadrature_failure_leaves_no_file(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise QuadratureFailure("budget exhausted")

    monkeypatch.setattr(cli, "evaluate", boom)
    out = tmp_path / "fail.csv"
    assert cli.main(["evaluate", "--points", "0", "--out", str(out)]) == 3
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_stdout_when_no_out(capsys):
    assert cli.main(["evaluate", "--points", "0", "--times", "1"]) == 0
    assert capsys.readouterr().out.startswith("coord,t,phi_u")


def test_verify_plane_pulse_passes(tmp_path):
    out = tmp_path / "v.json"
    code = cli.main(["verify", "--problem", "plane_pulse", "--times", "1", "--histories", "1e7", "--seed", "42",
                     "--format", "json", "--out", str(out)])
    payload = json.loads(out.read_text())
    assert code == 0 and payload["passed"]
    assert payload["summary"]["n_bins"] == 40


def test_verify_detects_corrupted_reference(tmp_path, monkeypatch):
    real = cli.bin_averages

    def scaled(*a, **k):
        return {key: 1.05 * v for key, v in real(*a, **k).items()}

    monkeypatch.setattr(cli, "bin_averages", scaled)
    out = tmp_path / "v.csv"
    assert cli.main(["verify", "--times", "1", "--histories", "1e6", "--out", str(out)]) == 4
    assert out.exists()


def test_verify_rejects_bad_setups(tmp_path):
    assert cli.main(["verify", "--histories", "100", "--times", "1"]) == 2
    assert cli.main(["verify", "--problem", "line_pulse", "--grid=-1:1:10", "--times", "1",
                     "--histories", "1e4"]) == 2
