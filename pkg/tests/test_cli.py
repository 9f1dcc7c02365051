import io
import json

import pandas as pd
import pytest

import sos_ggm.cli as cli
import sos_ggm.models.phase_diagram as phase_diagram
from sos_ggm.cli import EXIT_EMPTY, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main, parse_number


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_parse_number():
    assert float(parse_number("7/2")) == 3.5
    assert float(parse_number("4.25")) == 4.25


def test_solve_k3():
    code, text = run("solve", "--k", "3", "--tau", "5")
    assert code == EXIT_OK
    records = json.loads(text)
    assert len(records) == 5
    for r in records:
        assert r["a"] > 0 and r["b"] > 0
        assert max(abs(x) for x in r["residuals"]) < 1e-10


def test_solve_below_threshold_has_unit_law_only():
    code, text = run("solve", "--k", "2", "--tau", "3")
    assert code == EXIT_OK
    records = json.loads(text)
    assert len(records) == 1
    assert records[0]["a"] == pytest.approx(1.0)
    assert records[0]["b"] == pytest.approx(1.0)


def test_solve_with_field():
    code, text = run("solve", "--k", "2", "--tau", "7", "--h1", "1", "--h2", "1")
    assert code == EXIT_OK
    assert len(json.loads(text)) == 7


def test_solve_writes_figure(tmp_path):
    figure = tmp_path / "fig" / "solutions.json"
    code, _ = run("solve", "--k", "2", "--tau", "7", "--figure", str(figure))
    assert code == EXIT_OK
    assert "data" in json.loads(figure.read_text())


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--k", "2", "--tau", "2"],
        ["solve", "--k", "1", "--tau", "5"],
        ["solve", "--k", "2", "--tau", "5", "--h1", "0"],
        ["scan", "--k", "2", "--tau-min", "5", "--tau-max", "4"],
        ["scan", "--k", "3", "--tau-min", "4", "--tau-max", "5", "--h-min", "0.5", "--h-max", "1"],
        ["ggm", "--k", "2", "--tau", "5", "--index", "9"],
        ["verify", "--only", "bogus"],
        ["scan", "--k", "2", "--tau-min", "3", "--tau-max", "5", "--workers", "0"],
        ["scan", "--k", "2", "--tau-min", "4", "--tau-max", "5", "--h-min", "1", "--h-max", "0.5"],
        ["solve", "--k", "2", "--tau", "5", "--tol", "0"],
    ],
)
def test_usage_errors(argv):
    assert run(*argv)[0] == EXIT_USAGE


def test_unparseable_number_exits_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        run("solve", "--k", "2", "--tau", "five")
    assert exc.value.code == EXIT_USAGE


def test_scan_csv():
    code, text = run("scan", "--k", "2", "--tau-min", "3", "--tau-max", "7", "--steps", "37", "--format", "csv")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(text), comment="#")
    assert len(frame) == 37
    assert (frame["n_total"] == frame["n_equal"] + frame["n_unequal"]).all()
    transitions = [line for line in text.splitlines() if line.startswith("# transition")]
    assert len(transitions) == 3


def test_scan_json_field():
    code, text = run(
        "scan", "--k", "2", "--tau-min", "4.6", "--tau-max", "7.1",
        "--steps", "4", "--h-min", "0.5", "--h-max", "1.5", "--h-steps", "5",
    )
    assert code == EXIT_OK
    payload = json.loads(text)
    assert len(payload["points"]) == 20
    assert payload["metadata"]["max_candidates"] <= 7


def test_ggm_pinned_table():
    code, text = run("ggm", "--k", "2", "--tau", "7", "--index", "2", "--window", "8")
    assert code == EXIT_OK
    report = json.loads(text)
    table = report["table"]
    assert table["window"] == {"k": 2, "R": 1}
    assert sum(p for _, p in table["entries"]) == pytest.approx(1, abs=1e-12)
    assert report["consistency_residual"] < 1e-9


def test_ggm_mixed_table():
    code, text = run("ggm", "--k", "2", "--tau", "7", "--index", "2", "--window", "6", "--mixed")
    assert code == EXIT_OK
    assert json.loads(text)["table"]["pin"] == "mixed"


def test_ggm_check_consistency():
    code, text = run(
        "ggm", "--k", "2", "--tau", "7", "--index", "2", "--radius", "2", "--window", "20", "--check-consistency"
    )
    assert code == EXIT_OK
    assert json.loads(text)["marginal_residual"] < 1e-8


def test_ggm_budget_exceeded():
    code, _ = run("ggm", "--k", "2", "--tau", "5", "--radius", "2", "--window", "10", "--budget", "1000")
    assert code == EXIT_USAGE


def test_verify_subset():
    out = io.StringIO()
    assert main(["verify", "--only", "factorization,critical-values"], out=out) == EXIT_OK
    lines = out.getvalue().splitlines()
    assert [line.split()[1].rstrip(":") for line in lines] == ["critical-values", "factorization"]
    assert all(line.startswith("PASS") for line in lines)


def test_solve_without_solutions_exits_empty(monkeypatch):
    monkeypatch.setattr(cli, "solve_field_generic", lambda fp, seed=0, tol=None: [])
    code, text = run("solve", "--k", "3", "--tau", "5", "--h1", "2")
    assert code == EXIT_EMPTY
    assert json.loads(text) == []


def test_broken_count_invariant_exits_internal(monkeypatch):
    def one_class_too_many(solutions, tol=None):
        return [[i] for i in range(len(solutions) + 1)]

    monkeypatch.setattr(phase_diagram, "ggm_classes", one_class_too_many)
    code, _ = run("scan", "--k", "2", "--tau-min", "3", "--tau-max", "5", "--steps", "3")
    assert code == EXIT_INTERNAL


def test_scan_cache(data_dir):
    argv = ["scan", "--k", "2", "--tau-min", "3", "--tau-max", "7", "--steps", "9", "--cache"]
    first = run(*argv)
    assert first[0] == EXIT_OK
    assert len(list(data_dir.iterdir())) == 1
    assert run(*argv) == first
    field = ["scan", "--k", "2", "--tau-min", "4", "--tau-max", "5", "--h-min", "0.5", "--h-max", "1", "--cache"]
    assert run(*field)[0] == EXIT_USAGE


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_EMPTY, EXIT_USAGE, EXIT_INTERNAL}) == 4
