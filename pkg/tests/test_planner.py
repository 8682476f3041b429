"""Planner: optimality vs brute force, determinism, limits, replanning."""

from __future__ import annotations

import random
import threading
from fractions import Fraction

import pytest

from harrow.pddl import concat_plans, ground, make_plan, parse_plan, validate_plan
from harrow.planner import (
    InvalidPrefix,
    NoPlan,
    ResourceLimit,
    SearchCancelled,
    SearchConfig,
    SearchMode,
    TargetUnreachable,
    WeedingProblemConfig,
    compile_problem,
    compile_task,
    plan,
    replan_from,
)
from helpers import field_with_targets, random_instance
from oracle import dijkstra_cost, weeding_cost_by_enumeration

OPT = SearchConfig(mode=SearchMode.OPTIMAL)
SAT = SearchConfig(mode=SearchMode.SATISFICING)


def test_simple_corridor_instance():
    field, targets = field_with_targets(3, 1, targets=(2,))
    task = compile_task(field, targets)
    result = plan(task, OPT)
    # frozen from the enumeration oracle: 2 moves + 1 weed, unit costs
    assert weeding_cost_by_enumeration(field, targets.targets) == Fraction(3)
    assert result.step_names == ("(move c0 c1)", "(move c1 c2)", "(weed c2)")
    assert result.total_cost == Fraction(3)


def test_empty_target_set_gives_empty_plan():
    field, targets = field_with_targets(2, 2, targets=())
    domain, problem = compile_problem(field, targets)
    assert problem.goal == ()
    task = ground(domain, problem)
    for cfg in (OPT, SAT):
        assert plan(task, cfg).steps == ()


def test_target_enclosed_by_blocked_cells():
    # 3x3 with the center target walled off
    field, targets = field_with_targets(3, 3, targets=(4,), blocked=(1, 3, 5, 7))
    with pytest.raises(TargetUnreachable) as err:
        compile_problem(field, targets)
    assert err.value.cells == (4,)


def test_return_home_costs_the_way_back():
    field, targets = field_with_targets(3, 1, targets=(2,))
    cfg = WeedingProblemConfig(require_return_home=True)
    task = compile_task(field, targets, cfg)
    result = plan(task, OPT)
    assert result.total_cost == Fraction(5)
    assert result.step_names[-1] == "(move c1 c0)"
    assert weeding_cost_by_enumeration(field, targets.targets, cfg) == Fraction(5)


def test_non_unit_costs_change_the_optimum():
    # weeding is expensive relative to moving; optimum still must match oracle
    field, targets = field_with_targets(2, 2, targets=(1, 2))
    cfg = WeedingProblemConfig(weed_cost=Fraction(5), move_cost_per_cell=Fraction(1, 2))
    task = compile_task(field, targets, cfg)
    result = plan(task, OPT)
    expected = weeding_cost_by_enumeration(field, targets.targets, cfg)
    assert result.total_cost == expected == Fraction(1, 2) * 3 + Fraction(5) * 2


def test_optimal_matches_oracle_on_random_instances():
    rng = random.Random(1001)
    for _ in range(40):
        field, targets = random_instance(rng, rng.randint(1, 4), rng.randint(1, 4), max_targets=3)
        task = compile_task(field, targets)
        expected = dijkstra_cost(task)
        enum_expected = weeding_cost_by_enumeration(field, targets.targets)
        assert expected == enum_expected
        if expected is None:
            with pytest.raises(NoPlan):
                plan(task, OPT)
            continue
        result = plan(task, OPT)
        assert result.total_cost == expected
        assert validate_plan(task, result).valid


def test_satisficing_validates_and_never_beats_optimal():
    rng = random.Random(77)
    for _ in range(25):
        field, targets = random_instance(rng, 4, 4, max_targets=4)
        task = compile_task(field, targets)
        best = plan(task, OPT)
        found = plan(task, SAT)
        assert validate_plan(task, found).valid
        assert found.total_cost >= best.total_cost


def test_plans_are_deterministic():
    rng = random.Random(5150)
    field, targets = random_instance(rng, 4, 4, max_targets=4)
    task = compile_task(field, targets)
    for cfg in (OPT, SAT):
        a = plan(task, cfg)
        b = plan(task, cfg)
        assert a == b
        assert a.step_names == b.step_names


def test_node_limit_and_time_limit():
    field, targets = field_with_targets(4, 4, targets=(5, 10, 15, 3))
    task = compile_task(field, targets)
    with pytest.raises(ResourceLimit) as err:
        plan(task, SearchConfig(mode=SearchMode.OPTIMAL, node_limit=3))
    assert err.value.kind == "nodes"
    with pytest.raises(ResourceLimit) as err2:
        plan(task, SearchConfig(mode=SearchMode.OPTIMAL, time_limit=1e-9))
    assert err2.value.kind == "time"


def test_cancellation_is_cooperative():
    field, targets = field_with_targets(4, 4, targets=(5, 10, 15))
    task = compile_task(field, targets)
    flag = threading.Event()
    flag.set()
    with pytest.raises(SearchCancelled):
        plan(task, OPT, cancel=flag.is_set)


def test_replan_from_empty_prefix_equals_plan():
    field, targets = field_with_targets(3, 1, targets=(2,))
    task = compile_task(field, targets)
    assert replan_from(task, make_plan(task, []), OPT) == plan(task, OPT)


def test_replan_from_full_plan_is_empty():
    field, targets = field_with_targets(3, 1, targets=(2,))
    task = compile_task(field, targets)
    full = plan(task, OPT)
    assert replan_from(task, full, OPT).steps == ()


def test_replan_from_random_prefixes():
    rng = random.Random(31337)
    for _ in range(20):
        field, targets = random_instance(rng, 3, 3, max_targets=3)
        task = compile_task(field, targets)
        optimal_cost = dijkstra_cost(task)
        if optimal_cost is None:
            continue
        best = plan(task, OPT)
        cut = rng.randint(0, len(best.steps))
        prefix = make_plan(task, [s.index for s in best.steps[:cut]])
        rest = replan_from(task, prefix, OPT)
        joined = concat_plans(prefix, rest)
        assert validate_plan(task, joined).valid
        assert joined.total_cost >= optimal_cost


def test_replan_rejects_invalid_prefix():
    field, targets = field_with_targets(3, 1, targets=(2,))
    task = compile_task(field, targets)
    bad = parse_plan("(move c1 c2)\n", task)
    with pytest.raises(InvalidPrefix):
        replan_from(task, bad, OPT)


def test_unsolvable_pddl_task_raises_noplan():
    # goal atom exists but its only achiever needs an unreachable fact
    from harrow.pddl import parse_domain, parse_problem

    d = parse_domain(
        "(define (domain dead) (:predicates (key) (open))"
        " (:action unlock :parameters () :precondition (key) :effect (open)))"
    )
    p = parse_problem("(define (problem d1) (:domain dead) (:goal (and (open))))", d)
    task = ground(d, p)
    with pytest.raises(NoPlan):
        plan(task, OPT)


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(node_limit=0)
    with pytest.raises(ValueError):
        SearchConfig(time_limit=0)
    with pytest.raises(ValueError):
        WeedingProblemConfig(weed_cost=Fraction(-1))
