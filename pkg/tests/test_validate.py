"""Plan validator: progression semantics, reports, plan file round-trips."""

from __future__ import annotations

import pytest

from harrow.pddl import (
    ForeignAction,
    format_plan,
    ground,
    make_plan,
    parse_domain,
    parse_plan,
    parse_problem,
    validate_plan,
)
from harrow.planner import compile_problem
from helpers import field_with_targets


def weeding_task(width=3, height=1, targets=(2,), **kwargs):
    field, ts = field_with_targets(width, height, targets, **kwargs)
    domain, problem = compile_problem(field, ts)
    return ground(domain, problem)


def test_empty_plan_when_init_satisfies_goal():
    task = weeding_task(targets=())
    report = validate_plan(task, make_plan(task, []))
    assert report.valid and report.total_cost == 0


def test_empty_plan_with_unmet_goal():
    task = weeding_task()
    report = validate_plan(task, make_plan(task, []))
    assert not report.valid
    assert report.first_failing_step is None
    assert report.missing_goals == ("(cleared c2)",)


def test_valid_plan_and_costs():
    task = weeding_task()
    plan = parse_plan("(move c0 c1)\n(move c1 c2)\n(weed c2)\n", task)
    report = validate_plan(task, plan)
    assert report.valid and report.total_cost == 3


def test_precondition_failure_reports_step_and_literals():
    task = weeding_task()
    plan = parse_plan("(move c1 c2)\n", task)
    report = validate_plan(task, plan)
    assert not report.valid
    assert report.first_failing_step == 0
    assert "(at c1)" in report.unsatisfied


def test_foreign_action_raises():
    task = weeding_task()
    with pytest.raises(ForeignAction):
        parse_plan("(teleport c0 c2)\n", task)
    other = weeding_task(width=2, height=1, targets=())
    plan = parse_plan("(move c0 c1)\n(move c1 c2)\n(weed c2)\n", task)
    with pytest.raises(ForeignAction):
        validate_plan(other, plan)


def test_validation_is_deterministic():
    task = weeding_task()
    plan = parse_plan("(move c0 c1)\n(move c1 c2)\n(weed c2)\n", task)
    assert validate_plan(task, plan) == validate_plan(task, plan)


def test_plan_file_round_trip_with_comments():
    task = weeding_task()
    text = "; optimal route\n(move c0 c1)\n\n(move c1 c2) ; advance\n(weed c2)\n"
    plan = parse_plan(text, task)
    assert format_plan(plan) == "(move c0 c1)\n(move c1 c2)\n(weed c2)\n"
