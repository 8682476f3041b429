"""CLI subcommands exercised in-process."""

from __future__ import annotations

import json

import pytest

from harrow.cli import main

MAP_CSV = "3,1,1,0,0\n0,0,1\n"


@pytest.fixture()
def map_path(tmp_path):
    p = tmp_path / "field.csv"
    p.write_text(MAP_CSV, encoding="utf-8")
    return p


def test_ingest_reports_and_normalizes(tmp_path, map_path, capsys):
    out = tmp_path / "normalized.json"
    assert main(["ingest", "--map", str(map_path), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "3x1" in printed and "targets at threshold 0.5: 1" in printed
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["probs"] == [0.0, 0.0, 1.0]


def test_plan_validate_explain_round_trip(tmp_path, map_path, capsys):
    plan_path = tmp_path / "plan.txt"
    dom_path = tmp_path / "weeding.pddl"
    prob_path = tmp_path / "mission.pddl"
    rc = main(
        [
            "plan",
            "--map",
            str(map_path),
            "--out",
            str(plan_path),
            "--emit-domain",
            str(dom_path),
            "--emit-problem",
            str(prob_path),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    body = plan_path.read_text(encoding="utf-8")
    assert "(weed c2)" in body and "; cost = 3" in body

    rc = main(
        ["validate", "--domain", str(dom_path), "--problem", str(prob_path), "--plan", str(plan_path)]
    )
    assert rc == 0
    assert "valid: cost 3" in capsys.readouterr().out

    bad = tmp_path / "bad.txt"
    bad.write_text("(weed c2)\n", encoding="utf-8")
    rc = main(
        ["validate", "--domain", str(dom_path), "--problem", str(prob_path), "--plan", str(bad)]
    )
    assert rc == 1
    assert "invalid at step 0" in capsys.readouterr().out

    rc = main(
        [
            "explain",
            "--domain",
            str(dom_path),
            "--problem",
            str(prob_path),
            "--plan",
            str(plan_path),
            "--foil",
            "forbid (move c2 c1)",
            "--json",
        ]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["feasible"] is True and payload["cost_delta"] == "0"


def test_plan_from_raw_pddl(tmp_path, map_path, capsys):
    dom_path = tmp_path / "d.pddl"
    prob_path = tmp_path / "p.pddl"
    main(
        [
            "plan",
            "--map",
            str(map_path),
            "--emit-domain",
            str(dom_path),
            "--emit-problem",
            str(prob_path),
            "--out",
            str(tmp_path / "ignore.txt"),
        ]
    )
    capsys.readouterr()
    rc = main(["plan", "--domain", str(dom_path), "--problem", str(prob_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "(move c0 c1)" in out and "; cost = 3" in out


def test_simulate_trials_table_and_trace(tmp_path, map_path, capsys):
    plan_path = tmp_path / "plan.txt"
    main(["plan", "--map", str(map_path), "--out", str(plan_path)])
    capsys.readouterr()
    trace_path = tmp_path / "trace.jsonl"
    rc = main(
        [
            "--seed",
            "9",
            "simulate",
            "--map",
            str(map_path),
            "--plan",
            str(plan_path),
            "--trials",
            "3",
            "--trace",
            str(trace_path),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("seed status")
    assert len([l for l in out.splitlines() if l and l[0].isdigit()]) == 3
    lines = trace_path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["action"] == "(move c0 c1)"


def test_config_file_supplies_defaults(tmp_path, map_path, capsys):
    cfg = tmp_path / "harrow.json"
    cfg.write_text(json.dumps({"threshold": 1.0}), encoding="utf-8")
    rc = main(["--config", str(cfg), "ingest", "--map", str(map_path)])
    assert rc == 0
    assert "targets at threshold 1.0: 1" in capsys.readouterr().out


def test_unreadable_map_is_a_clean_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,1\n", encoding="utf-8")
    from harrow.field import MalformedHeader

    with pytest.raises(MalformedHeader):
        main(["ingest", "--map", str(bad)])
