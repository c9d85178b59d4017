"""Command-line interface: output goldens and the exit-code contract."""

import json
import subprocess
import sys

import pytest

from conftest import fixture_path
from patternforge.cli import main

BASIC_CATALOG = str(fixture_path("requirements_basic", "catalog.json"))
BASIC_NETWORK = str(fixture_path("requirements_basic", "network.json"))
BASIC_PROJECT = str(fixture_path("requirements_basic", "project.json"))
FULL_CATALOG = str(fixture_path("requirements", "catalog.json"))
FULL_NETWORK = str(fixture_path("requirements", "network.json"))
FULL_PROJECT = str(fixture_path("requirements", "project.json"))

WINNER = "seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)"


def run_cli(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_catalog_only(self, capsys):
        code, out, err = run_cli(capsys, "validate", "--catalog", BASIC_CATALOG)
        assert code == 0
        assert out == "catalog OK: 3 pattern(s), 0 function(s), 2 attribute(s)\n"
        assert err == ""

    def test_catalog_and_network(self, capsys):
        code, out, _ = run_cli(capsys, "validate", "--catalog", BASIC_CATALOG,
                               "--network", BASIC_NETWORK)
        assert code == 0
        assert out.splitlines() == [
            "catalog OK: 3 pattern(s), 0 function(s), 2 attribute(s)",
            "network OK: 2 adjacency rule(s), 0 compatibility predicate(s), "
            "1 initial artifact(s)",
        ]

    def test_bad_catalog_exits_two(self, capsys, tmp_path):
        bad = tmp_path / "catalog.json"
        bad.write_text(json.dumps({"schema": {"attributes": []}, "patterns": [
            {"id": "p", "characterization": {}, "significance": {
                "usage_count": -1, "contexts": []}},
        ]}))
        code, _, err = run_cli(capsys, "validate", "--catalog", str(bad))
        assert code == 2
        assert err.startswith("error:")


class TestEval:
    def test_text_output(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "final state:"
        assert "  effort = 654" in lines
        assert "  requirements_document = 'verified'" in lines
        assert "trace:" in lines
        trace_tail = lines[lines.index("trace:") + 1:]
        assert any(line.startswith("  merged effort (additive)")
                   for line in trace_tail)
        assert any("verify_requirements" in line for line in trace_tail)

    def test_json_output_round_trips(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER,
                               "--json")
        assert code == 0
        payload = json.loads(out)
        assert set(payload) == {"final_state", "trace"}
        assert payload["final_state"]["effort"] == 654.0
        assert payload["final_state"]["requirements_document"] == "verified"
        events = [entry["event"] for entry in payload["trace"]]
        assert events == ["atom", "atom", "par_merged", "atom"]
        merged = payload["trace"][2]
        assert merged["attribute"] == "effort"
        assert merged["policy"] == "additive"


class TestVerify:
    def test_verified(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER)
        assert code == 0
        # enum attrs referenced by the goal are omitted from the summary
        assert out == "VERIFIED (effort = 654)\n"

    def test_goal_override_failure(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER,
                               "--goal", "effort < 600")
        assert code == 1
        assert out.splitlines() == [
            "FAILED (effort = 654)",
            "  not satisfied: effort < 600 (654, 600)",
        ]

    def test_json_report(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER,
                               "--json")
        assert code == 0
        report = json.loads(out)
        assert report["verified"] is True
        assert report["final_state"]["effort"] == 654.0
        assert report["breakdown"]["value"] is True
        assert [c["value"] for c in report["breakdown"]["children"]] == [True, True]

    def test_json_failure_exit_code(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER,
                               "--goal", "effort < 600", "--json")
        assert code == 1
        assert json.loads(out)["verified"] is False

    def test_malformed_goal_exits_two(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", WINNER,
                               "--goal", "effort <")
        assert code == 2
        assert err.startswith("error:")

    def test_unknown_pattern_exits_two(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", BASIC_PROJECT, "--comb", "ghost")
        assert code == 2
        assert "unknown pattern 'ghost'" in err


class TestPlan:
    def test_basic_project(self, capsys):
        code, out, _ = run_cli(capsys, "plan", "--catalog", BASIC_CATALOG,
                               "--network", BASIC_NETWORK,
                               "--project", BASIC_PROJECT)
        assert code == 0
        assert out.splitlines() == [
            "1 candidate(s):",
            f"  1. {WINNER}  [effort = 654]",
        ]

    def test_json_candidates(self, capsys):
        code, out, _ = run_cli(capsys, "plan", "--catalog", BASIC_CATALOG,
                               "--network", BASIC_NETWORK,
                               "--project", BASIC_PROJECT, "--json")
        assert code == 0
        payload = json.loads(out)
        (candidate,) = payload["candidates"]
        assert candidate["combination_text"] == WINNER
        assert candidate["final_state"]["effort"] == 654.0
        assert candidate["score"] == [654.0]
        assert candidate["combination"]["type"] == "seq"
        assert candidate["combination"]["children"][0]["type"] == "par"

    def test_max_atoms_override_starves_search(self, capsys):
        # one atom cannot produce the verified document, so nothing qualifies
        code, out, _ = run_cli(capsys, "plan", "--catalog", BASIC_CATALOG,
                               "--network", BASIC_NETWORK,
                               "--project", BASIC_PROJECT, "--max-atoms", "1")
        assert code == 1
        assert out == "no candidates\n"

    def test_impossible_goal(self, capsys, tmp_path):
        project = tmp_path / "project.json"
        project.write_text(json.dumps({
            "state": {"effort": 0, "requirements_document": "incomplete"},
            "goal": "effort < 0",
        }))
        code, out, _ = run_cli(capsys, "plan", "--catalog", BASIC_CATALOG,
                               "--network", BASIC_NETWORK,
                               "--project", str(project))
        assert code == 1
        assert out == "no candidates\n"

    def test_limit_truncates(self, capsys):
        code, full, _ = run_cli(capsys, "plan", "--catalog", FULL_CATALOG,
                                "--network", FULL_NETWORK,
                                "--project", FULL_PROJECT)
        assert code == 0
        code, trimmed, _ = run_cli(capsys, "plan", "--catalog", FULL_CATALOG,
                                   "--network", FULL_NETWORK,
                                   "--project", FULL_PROJECT, "--limit", "2")
        assert code == 0
        full_lines = full.splitlines()
        assert full_lines[0] == "3 candidate(s):"
        assert trimmed.splitlines() == ["2 candidate(s):"] + full_lines[1:3]

    def test_rank_override(self, capsys):
        code, out, _ = run_cli(capsys, "plan", "--catalog", FULL_CATALOG,
                               "--network", FULL_NETWORK,
                               "--project", FULL_PROJECT,
                               "--rank", "max effort", "--limit", "1")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "1 candidate(s):"
        assert lines[1].endswith("[effort = 664]")

    def test_bad_rank_exits_two(self, capsys):
        code, _, err = run_cli(capsys, "plan", "--catalog", FULL_CATALOG,
                               "--network", FULL_NETWORK,
                               "--project", FULL_PROJECT, "--rank", "lowest effort")
        assert code == 2
        assert err.startswith("error:")


class TestFailureModes:
    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "validate", "--catalog",
                               str(tmp_path / "absent.json"))
        assert code == 2
        assert err.startswith("error:")

    def test_invalid_json(self, capsys, tmp_path):
        broken = tmp_path / "broken.json"
        broken.write_text("{nope")
        code, _, err = run_cli(capsys, "validate", "--catalog", str(broken))
        assert code == 2
        assert err.startswith("error: invalid JSON")

    def test_unknown_project_key(self, capsys, tmp_path):
        project = tmp_path / "project.json"
        project.write_text(json.dumps({"state": {}, "objective": "effort < 1"}))
        code, _, err = run_cli(capsys, "verify", "--catalog", BASIC_CATALOG,
                               "--project", str(project), "--comb", WINNER)
        assert code == 2
        assert "objective" in err

    def test_runtime_error_exits_two(self, capsys, tmp_path):
        # the loop body never writes `approved`, so the guard stays true forever
        catalog = str(fixture_path("errors", "iteration_limit.json"))
        project = tmp_path / "project.json"
        project.write_text(json.dumps({
            "state": {"effort": 0, "approved": False},
        }))
        code, _, err = run_cli(capsys, "eval", "--catalog", catalog,
                               "--project", str(project),
                               "--comb", "while(approved = false, chase_approval)")
        assert code == 2
        assert err.startswith("error:")
        assert "100 iterations" in err

    def test_iteration_cap_flag_is_forwarded(self, capsys, tmp_path):
        catalog = str(fixture_path("errors", "iteration_limit.json"))
        project = tmp_path / "project.json"
        project.write_text(json.dumps({
            "state": {"effort": 0, "approved": False},
        }))
        code, _, err = run_cli(capsys, "eval", "--catalog", catalog,
                               "--project", str(project),
                               "--comb", "while(approved = false, chase_approval)",
                               "--iteration-cap", "7")
        assert code == 2
        assert "7 iterations" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "patternforge.cli",
         "validate", "--catalog", BASIC_CATALOG],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "catalog OK" in proc.stdout
