import json
import subprocess
import sys

import jsonschema
import pytest

from jetcheck.cli import main
from jetcheck.report import AnalysisReport, load_schema

FAST = ["--nradii", "6", "--tail", "4", "--starts", "16"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_hopf_corpus(capsys):
    code, out, _ = run(capsys, "analyze", "--corpus", "hopf", "--class", "r")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"]["status"] == "SUFFICIENT"
    assert abs(rep["estimate"]["kappa_hat"] - 4) < 0.1
    assert rep["problem"]["corpus"] == "hopf"
    jsonschema.validate(rep, load_schema())


def test_analyze_linear_next_class(capsys):
    code, out, _ = run(capsys, "analyze", "--map", "x1", "--n", "1", "--m", "1", "--r", "1",
                       "--class", "r+1")
    assert code == 0
    assert json.loads(out)["problem"]["smoothness"] == "E_r_plus_1"


def test_analyze_example1_insufficient(capsys, tmp_path):
    js = tmp_path / "r.json"
    code, out, _ = run(capsys, "analyze", "--corpus", "example1", "--r", "4", "--json", str(js))
    assert code == 1
    rep = json.loads(out)
    assert rep["verdict"]["status"] == "INSUFFICIENT"
    assert rep["verdict"]["witness"] is not None
    assert js.read_text() == out


def test_map_file_with_comments(capsys, tmp_path):
    path = tmp_path / "hopf.txt"
    path.write_text("# Hopf 2-jet\nx2*x3 + x1*x4\n\nx1*x3 - x2*x4  # second\n")
    code, out, _ = run(capsys, "analyze", "--map", str(path), "--n", "4", "--r", "2", *FAST)
    assert code == 0
    assert json.loads(out)["problem"]["input"] == ["x1*x4 + x2*x3", "x1*x3 - x2*x4"]


def test_parse_error_exit_and_location(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("x1^2\nx1 + * x2\n")
    code, _, err = run(capsys, "analyze", "--map", str(path), "--n", "2", "--r", "2")
    assert code == 65
    assert "line 2" in err and "column 6" in err
    code, _, err = run(capsys, "analyze", "--map", "x1 + x7", "--n", "2", "--r", "2")
    assert code == 65 and "out of range" in err


@pytest.mark.parametrize("argv", [
    ["analyze", "--map", "x1, x2, x1*x2", "--n", "2", "--r", "2"],          # n < m
    ["analyze", "--map", "x1; x2", "--n", "2", "--r", "1"],                 # r=1 with m>1
    ["analyze", "--map", "x1^3", "--n", "1", "--r", "2"],                   # degree > r
    ["analyze", "--map", "x1", "--n", "1", "--m", "2", "--r", "1"],         # m mismatch
    ["analyze", "--map", "x1 + 1", "--n", "1", "--r", "1"],                 # f(0) != 0
    ["analyze", "--map", "x1", "--n", "1"],                                  # missing --r
    ["analyze", "--corpus", "linear", "--rho", "2"],                         # bad config
    ["analyze", "--corpus", "linear", "--kind", "Q"],                        # argparse
    ["frobnicate"],
])
def test_usage_errors_exit_64(capsys, argv):
    code = None
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    capsys.readouterr()
    assert code == 64


def test_corpus_listing(capsys):
    code, out, _ = run(capsys, "corpus", "--list")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines()]
    assert len(names) >= 5
    for required in ("example1", "hopf", "linear", "radial", "axis_degenerate"):
        assert required in names


def test_corpus_show_hopf(capsys):
    code, out, _ = run(capsys, "corpus", "--corpus", "hopf")
    assert code == 0
    body = [line for line in out.splitlines() if not line.startswith("#")]
    assert body == ["x1*x4 + x2*x3", "x1*x3 - x2*x4"]
    assert "(x1, x2, x3, x4)" in out


def test_unknown_corpus_suggests(capsys):
    code, _, err = run(capsys, "corpus", "--corpus", "hpof")
    assert code == 64 and "hopf" in err
    code, _, err = run(capsys, "corpus", "--corpus", "nosuch")
    assert code == 64 and "example1" in err
    code, _, err = run(capsys, "analyze", "--corpus", "linaer")
    assert code == 64 and "linear" in err


def test_truncate(capsys):
    code, out, _ = run(capsys, "truncate", "--map", "x1^2-2*x1*x2^2+x1^4+x2^4+x2^8", "--n", "2", "--r", "4")
    assert code == 0 and out == "x1^2 - 2*x1*x2^2 + x1^4 + x2^4\n"
    code, out, _ = run(capsys, "truncate", "--map", "x1^2 - x2^3; x1*x2", "--n", "2", "--r", "0")
    assert out == "0\n0\n"
    code, out, _ = run(capsys, "truncate", "--map", "x1*x2 - 1/2*x2^3", "--n", "2", "--r", "9")
    assert out == "x1*x2 - 1/2*x2^3\n"


def test_report_round_trip_schema_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "s.csv"
    code, out, _ = run(capsys, "analyze", "--corpus", "axis_degenerate", "--cross-validate",
                       "--csv", str(csv_path), "--timings", *FAST)
    assert code == 1
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema())
    rep = AnalysisReport.from_json(out)
    assert rep.to_json() == out
    assert rep.cross_validation.agree
    assert set(rep.timings) == {"analyze", "cross_validate"}
    assert doc["estimate"]["kappa_hat"] == "inf"

    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("radius,min_value")
    assert lines[0] == "radius,min_value,x1,x2"
    rows = [list(map(float, line.split(","))) for line in lines[1:]]
    assert len(rows) == rep.config.nradii
    assert [r[0] for r in rows] == sorted((r[0] for r in rows), reverse=True)
    for row, s in zip(rows, rep.estimate.samples):
        assert row == [s.radius, s.min_value, *s.argmin_x]


def test_csv_includes_y_columns(capsys, tmp_path):
    csv_path = tmp_path / "h.csv"
    run(capsys, "analyze", "--corpus", "hopf", "--csv", str(csv_path), *FAST)
    assert csv_path.read_text().splitlines()[0] == "radius,min_value,x1,x2,x3,x4,y1,y2"


def test_json_reports_are_byte_identical(tmp_path):
    argv = [sys.executable, "-m", "jetcheck", "analyze", "--corpus", "cusp", *FAST]
    a = subprocess.run(argv, capture_output=True, check=False)
    b = subprocess.run(argv, capture_output=True, check=False, env={"JETCHECK_THREADS": "3",
                                                                     "PATH": "/usr/bin:/bin"})
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout and a.stdout
