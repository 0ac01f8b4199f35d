"""The command-line harness: exit codes, output formats, determinism."""

import csv
import io
import json
from importlib import resources

import jsonschema
import pytest

import bellqma as bq
from bellqma.cli import main
from bellqma.results import RUN_COLUMNS


@pytest.fixture(scope="module")
def schema():
    ref = resources.files("bellqma") / "schemas" / "results.schema.json"
    return json.loads(ref.read_text())


@pytest.fixture
def cycle_file(tmp_path):
    graph, _ = bq.odd_cycle_neq(5)
    path = tmp_path / "cycle5.json"
    bq.save_graph(path, graph, {"best": bq.certify_gap(graph).witness})
    return path


@pytest.fixture
def config_file(tmp_path, cycle_file):
    def make(**overrides):
        cfg = {
            "instance": {"path": str(cycle_file)},
            "strategy": {"kind": "honest", "coloring": "best"},
            "protocol": {"C": 4, "trials": 400, "seed": 7},
            "output": {"format": "json"},
        }
        cfg.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path

    return make


def run_cli(*argv):
    return main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# validate


def test_validate_ok(cycle_file, capsys):
    assert run_cli("validate", cycle_file) == 0
    out = capsys.readouterr().out
    assert "valid:" in out
    assert "eta 1/5" in out
    assert "coloring 'best'" in out


def test_validate_reports_diagnostics(tmp_path, capsys):
    doc = {"n": 2, "K": 2,
           "edges": [{"u": 0, "v": 9, "relation": [[0, 1], [1, 0]]}]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run_cli("validate", path) == 1
    assert "endpoint_range" in capsys.readouterr().out


def test_validate_unreadable_inputs_exit_2(tmp_path, capsys):
    assert run_cli("validate", tmp_path / "missing.json") == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert run_cli("validate", garbled) == 2
    capsys.readouterr()


def test_validate_respects_budget(cycle_file, capsys):
    assert run_cli("validate", cycle_file, "--budget", 4) == 0
    assert "skipped" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# run


def test_run_json_document(config_file, capsys, schema):
    assert run_cli("run", "-c", config_file(), "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, schema)
    assert doc["command"] == "run"
    (row,) = doc["rows"]
    assert set(row) == set(RUN_COLUMNS)
    assert (row["n"], row["K"], row["num_provers"]) == (5, 2, 9)
    assert row["trials"] == 400 and row["seed"] == 7
    assert 0.0 <= row["acceptance"] <= 1.0
    reject_total = sum(v for k, v in row.items() if k.startswith("count_"))
    assert reject_total == 400
    assert row["uniformity_trials"] + row["consistency_trials"] == 400


def test_run_csv_header_and_out_file(config_file, tmp_path, capsys):
    out = tmp_path / "row.csv"
    code = run_cli("run", "-c", config_file(), "--format", "csv", "--out", out,
                   "--workers", 1)
    assert code == 0
    assert capsys.readouterr().out == ""  # written to the file, not stdout
    reader = csv.reader(io.StringIO(out.read_text()))
    header, row = list(reader)
    assert tuple(header) == RUN_COLUMNS
    assert row[header.index("instance_id")]


def test_run_flag_overrides(config_file, capsys):
    cfg = config_file()
    assert run_cli("run", "-c", cfg, "--trials", 100, "--seed", 1, "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["trials"] == 100
    assert doc["rows"][0]["seed"] == 1


def test_run_determinism_across_workers(config_file, tmp_path):
    cfg = config_file(protocol={"C": 4, "trials": 5000, "seed": 3})
    outputs = []
    for index, workers in enumerate((1, 2, 4, 1)):
        out = tmp_path / f"det{index}.json"
        assert run_cli("run", "-c", cfg, "--workers", workers, "--out", out) == 0
        outputs.append(out.read_bytes())
    assert len(set(outputs)) == 1


def test_run_dump_states(config_file, tmp_path):
    out = tmp_path / "dump.json"
    assert run_cli("run", "-c", config_file(), "--out", out, "--dump-states",
                   "--workers", 1) == 0
    doc = json.loads((tmp_path / "dump.json.states.json").read_text())
    assert len(doc["provers"]) == 9
    for records in doc["provers"]:
        assert all(abs(re - 5 ** -0.5) < 1e-12 and im == 0.0
                   for _, _, re, im in records)


def test_run_dump_states_needs_out_path(config_file, capsys):
    assert run_cli("run", "-c", config_file(), "--dump-states", "--workers", 1) == 2
    assert "output path" in capsys.readouterr().err


def test_run_config_errors_exit_2(tmp_path, cycle_file, capsys):
    missing = tmp_path / "nope.json"
    assert run_cli("run", "-c", missing) == 2

    invalid = tmp_path / "invalid.json"
    invalid.write_text("[1, 2]")
    assert run_cli("run", "-c", invalid) == 2

    no_strategy = tmp_path / "nostrat.json"
    no_strategy.write_text(json.dumps({
        "instance": {"path": str(cycle_file)}, "protocol": {"C": 4}}))
    assert run_cli("run", "-c", no_strategy) == 2

    bad_kind = tmp_path / "badkind.json"
    bad_kind.write_text(json.dumps({
        "instance": {"path": str(cycle_file)},
        "strategy": {"kind": "psychic"},
        "protocol": {"C": 4, "trials": 10, "seed": 0}}))
    assert run_cli("run", "-c", bad_kind) == 2
    assert "strategy" in capsys.readouterr().err


def test_run_rejects_invalid_instance(tmp_path, capsys):
    doc = {"n": 2, "K": 2, "edges": [{"u": 0, "v": 9, "relation": [[0, 1], [1, 0]]}]}
    graph_path = tmp_path / "bad.json"
    graph_path.write_text(json.dumps(doc))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "instance": {"path": str(graph_path)},
        "strategy": {"kind": "phase_adversary", "frequency": 1},
        "protocol": {"C": 4, "trials": 10, "seed": 0}}))
    assert run_cli("run", "-c", cfg) == 2
    assert "fails validation" in capsys.readouterr().err


def test_run_with_inline_generator(tmp_path, capsys):
    cfg = tmp_path / "gen.json"
    cfg.write_text(json.dumps({
        "instance": {"generator": {"kind": "planted_satisfiable",
                                   "params": {"n": 9, "K": 2, "d": 2}, "seed": 4}},
        "strategy": {"kind": "honest", "coloring": "planted"},
        "protocol": {"C": 2, "trials": 200, "seed": 0}}))
    assert run_cli("run", "-c", cfg, "--format", "json", "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["count_edge_violation"] == 0


# ---------------------------------------------------------------------------
# sweep


def test_sweep_over_c(config_file, capsys):
    assert run_cli("sweep", "-c", config_file(), "--grid", "C=2,4", "--format",
                   "json", "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["value"] for r in doc["rows"]] == [2, 4]
    assert [r["num_provers"] for r in doc["rows"]] == [5, 9]
    seeds = {r["seed"] for r in doc["rows"]}
    assert len(seeds) == 2  # per-point derived seeds


def test_sweep_range_syntax(config_file, capsys):
    assert run_cli("sweep", "-c", config_file(), "--grid", "m_prime=8:16:4",
                   "--format", "json", "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["value"] for r in doc["rows"]] == [8, 12, 16]
    zeros = [r["prob_zero"] for r in doc["rows"]]
    assert zeros == sorted(zeros, reverse=True)
    assert all(r["mean_lower_bound"].count("/") == 1 for r in doc["rows"])


def test_sweep_strategy_parameter(config_file, capsys):
    cfg = config_file(strategy={"kind": "phase_adversary", "frequency": 1})
    assert run_cli("sweep", "-c", cfg, "--grid", "strategy.frequency=1",
                   "--format", "json", "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["acceptance"] <= 0.6  # phase prover never passes step 1


def test_sweep_grid_errors(config_file, capsys):
    cfg = config_file()
    assert run_cli("sweep", "-c", cfg, "--grid", "C=") == 2
    assert run_cli("sweep", "-c", cfg, "--grid", "C=4:2") == 2
    assert run_cli("sweep", "-c", cfg, "--grid", "depth=1,2") == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# audit


def test_audit_default_grid_flags_known_violation(config_file, tmp_path):
    out = tmp_path / "audit.json"
    code = run_cli("audit", "-c", config_file(), "--out", out, "--workers", 1)
    assert code == 1  # one genuine bound violation on the default grid
    doc = json.loads(out.read_text())
    assert doc["all_pass"] is False
    failing = [r for r in doc["rows"] if not r["ok"]]
    assert [(r["audit"], r["item"]) for r in failing] == [
        ("chernoff_soundness", "n=400,K=3,C=32")
    ]


def test_audit_passes_on_restricted_grid(config_file, tmp_path, capsys):
    cfg = config_file(analysis={
        "chernoff_grid": {"n": [25, 100], "K": [2, 3, 4], "C": [8, 16, 32]},
        "m_prime": [6],
    })
    assert run_cli("audit", "-c", cfg, "--format", "json", "--workers", 1) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["all_pass"] is True
    audits = {r["audit"] for r in doc["rows"]}
    assert audits == {"chernoff_completeness", "chernoff_soundness",
                      "soundness", "second_moment"}
    case_row = next(r for r in doc["rows"] if r["item"] == "case")
    assert case_row["measured"] == "main_case"


def test_audit_unknown_toggle_exits_2(config_file, capsys):
    cfg = config_file(analysis={"audits": ["vibes"]})
    assert run_cli("audit", "-c", cfg) == 2
    assert "unknown audits" in capsys.readouterr().err


def test_audit_epsilon_required_when_not_exhaustive(config_file, capsys):
    cfg = config_file(analysis={"audits": ["soundness"], "budget": 2})
    assert run_cli("audit", "-c", cfg) == 2
    assert "epsilon" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# entry point


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exit_info:
        run_cli("--version")
    assert exit_info.value.code == 0
    assert bq.__version__ in capsys.readouterr().out
