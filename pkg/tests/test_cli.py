import csv
import io
import json
import subprocess
import sys

import pytest

from pndclass import cli
from pndclass.classicality import ClassicalityReport
from pndclass.pnd import Coherent, Fock, Thermal, generate_pnd

SCHILLER_Q = "0.44,0.07,0.26,0.30,1.44,3.60,28.80"


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_schiller_q_values_are_witnessed(capsys):
    code, out, _ = run(["analyze", "--q", SCHILLER_Q], capsys)
    assert code == cli.EXIT_NONCLASSICAL
    assert "NONCLASSICAL" in out
    assert "[local3] n=2" in out and "[local3] n=4" in out


def test_vacuum_preset(capsys):
    code, out, _ = run(["analyze", "--state", "vacuum"], capsys)
    assert code == cli.EXIT_CONSISTENT and "vacuum" in out


def test_fock_record_file(tmp_path, capsys):
    path = tmp_path / "fock.json"
    path.write_text(generate_pnd(Fock(1), 6, mode="exact").to_json())
    code, out, _ = run(["analyze", "--pnd", str(path), "--mode", "exact"], capsys)
    assert code == cli.EXIT_NONCLASSICAL and "zero_rule" in out


def test_state_file_with_explicit_K(tmp_path, capsys):
    path = tmp_path / "thermal.json"
    path.write_text(json.dumps({"type": "thermal", "mean": 1.5}))
    code, out, _ = run(["analyze", "--state", str(path), "--K", "40"], capsys)
    assert code == cli.EXIT_CONSISTENT
    assert "K = 40" in out and "superpoissonian" in out


def test_json_report_round_trips(tmp_path, capsys):
    target = tmp_path / "r.json"
    code, _, _ = run(["analyze", "--state", "fig2-coherent-unit", "--json", str(target)], capsys)
    assert code == cli.EXIT_CONSISTENT
    report = ClassicalityReport.from_json(target.read_text())
    assert report.verdict == "consistent"
    assert ClassicalityReport.from_json(report.to_json()) == report


def test_json_to_stdout_is_parseable(capsys):
    code, out, err = run(["analyze", "--q", SCHILLER_Q, "--json", "-"], capsys)
    assert code == cli.EXIT_NONCLASSICAL
    data = json.loads(out)
    assert [w["index"] for w in data["witnesses"] if w["test"] == "local3"] == [2, 4]
    assert "NONCLASSICAL" in err


def test_plot_to_stdout(capsys):
    code, out, err = run(["analyze", "--state", "fig3", "--plot"], capsys)
    assert code == cli.EXIT_CONSISTENT
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "p_n", "q_n"]
    assert len(rows) == 42 and "verdict" in err


def test_figure_command_writes_csv(tmp_path, capsys):
    target = tmp_path / "fig.csv"
    code, _, _ = run(["figure", "fig2-thermal", "--K", "10", "-o", str(target)], capsys)
    assert code == cli.EXIT_CONSISTENT
    rows = list(csv.DictReader(target.open()))
    assert [int(r["n"]) for r in rows] == list(range(11))
    for r in rows:
        n = int(r["n"])
        assert float(r["p_n"]) == pytest.approx(0.5 ** (n + 1), rel=1e-15)


def test_figure_is_deterministic(capsys):
    _, first, _ = run(["figure", "fig1", "--K", "50"], capsys)
    _, second, _ = run(["figure", "fig1", "--K", "50"], capsys)
    assert first == second


def test_presets_listed(capsys):
    code, out, _ = run(["presets"], capsys)
    assert code == 0
    names = [line.split(":")[0] for line in out.splitlines()]
    assert {"fig1", "fig3", "vacuum", "fig2-thermal"} <= set(names)
    assert set(names) == set(cli.preset_names())


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--q", "1,abc,2"],
        ["analyze", "--q", "1,2,3", "--depth", "9"],
        ["analyze", "--state", "no-such-preset"],
        ["analyze", "--q", "1,1,1", "--tol", "-1"],
        ["analyze"],
        ["analyze", "--q", "1,1,1", "--state", "vacuum"],
        ["bogus"],
    ],
)
def test_errors_exit_one(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == cli.EXIT_ERROR and err


def test_invalid_pnd_rejected(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"p": [0.5, -0.2, 0.7]}')
    code, _, err = run(["analyze", "--pnd", str(path)], capsys)
    assert code == cli.EXIT_ERROR and err


def test_auto_K_covers_the_mass():
    K = cli.auto_K(Coherent(10.0))
    p = generate_pnd(Coherent(10.0), K)
    assert 1 - sum(p.probabilities) < cli.TAIL_MASS
    assert cli.auto_K(Fock(3)) >= 3


def test_auto_K_thermal_grows_with_mean():
    assert cli.auto_K(Thermal(5.0)) > cli.auto_K(Thermal(0.5))


def test_module_entry_point():
    done = subprocess.run(
        [sys.executable, "-m", "pndclass", "analyze", "--q", SCHILLER_Q],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert done.returncode == cli.EXIT_NONCLASSICAL
