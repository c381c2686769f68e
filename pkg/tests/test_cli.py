import json
import subprocess
import sys

import pytest

from conftest import TABLE_TWO_COUPLES
from groupfair.cli import main
from groupfair.experiments import parse_report_csv


@pytest.fixture
def table_file(tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps({"num_goods": 4, "groups": TABLE_TWO_COUPLES}))
    return path


def test_solve_two_couples(table_file, capsys):
    assert main(["solve-two-couples", str(table_file)]) == 0
    out = capsys.readouterr().out
    assert "group 0: goods [1, 2]" in out and "ef1=Y" in out and "balanced: True" in out


@pytest.mark.parametrize("policy", ["remove-all", "remove-best"])
def test_solve_prop(table_file, capsys, policy):
    assert main(["solve-prop", str(table_file), "--policy", policy]) == 0
    out = capsys.readouterr().out
    assert "fPO: True (domination LP optimum 0)" in out


def test_solve_special(table_file, capsys):
    assert main(["solve-special", str(table_file), "--method", "m2n"]) == 0
    assert "method: m2n" in capsys.readouterr().out


def test_verify_counterexample(capsys):
    assert main(["verify-counterexample", "ef1", "--n", "3"]) == 0
    out = capsys.readouterr().out
    assert "243 allocations" in out and "no EF1 allocation" in out


def test_exists(table_file, capsys):
    assert main(["exists", str(table_file), "--predicate", "balanced-EF1"]) == 0
    assert "exists" in capsys.readouterr().out
    assert main(["exists", str(table_file), "--predicate", "EF", "--budget", "3", "--exhaustive"]) == 2


def test_experiment(tmp_path, capsys):
    out, chart = tmp_path / "r.csv", tmp_path / "r.svg"
    args = ["experiment", "--dataset", "synthetic", "--num-instances", "3", "--seed", "2", "--limit", "2",
            "--resamples", "200", "--out", str(out), "--chart", str(chart), "--save-dataset", str(tmp_path / "d")]
    assert main(args) == 0
    rows = parse_report_csv(out.read_text())
    assert rows and chart.read_text().startswith("<svg")
    assert json.loads((tmp_path / "r.meta.json").read_text())["metadata"]["seed"] == 2
    again = tmp_path / "again.csv"
    assert main(["experiment", "--dataset", str(tmp_path / "d"), "--seed", "2", "--limit", "2",
                 "--resamples", "200", "--out", str(again)]) == 0
    assert again.read_text() == out.read_text()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "groupfair", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "solve-two-couples" in res.stdout
