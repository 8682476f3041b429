"""Grounding: instantiation counts, pruning soundness, cost resolution."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from harrow.pddl import (
    CostFluentUndefined,
    GroundingError,
    UndeclaredObject,
    ground,
    parse_domain,
    parse_problem,
)
from harrow.planner import compile_problem
from helpers import random_instance
from oracle import dijkstra_cost

NOOP = "(define (domain noop) (:action noop :parameters () :precondition (and) :effect (and)))"


def test_noop_grounding():
    d = parse_domain(NOOP)
    p = parse_problem("(define (problem n) (:domain noop) (:goal (and)))", d)
    task = ground(d, p)
    assert len(task.actions) == 1
    assert task.goal <= task.init


def test_parameter_counting_without_pruning():
    d = parse_domain(
        "(define (domain c) (:types cell - object) (:predicates (seen ?c - cell))"
        " (:action look :parameters (?c - cell) :precondition (and) :effect (seen ?c)))"
    )
    p = parse_problem(
        "(define (problem p) (:domain c) (:objects a b c - cell) (:goal (and)))", d
    )
    task = ground(d, p, prune=False)
    assert [x.name for x in task.actions] == ["(look a)", "(look b)", "(look c)"]
    task_pruned = ground(d, p, prune=True)
    assert len(task_pruned.actions) == 3  # no preconditions, all relax-reachable


def test_typed_binding_respects_hierarchy():
    d = parse_domain(
        "(define (domain t) (:types crop weed - plant)"
        " (:predicates (cut ?p - plant))"
        " (:action mow :parameters (?p - plant) :precondition (and) :effect (cut ?p)))"
    )
    p = parse_problem(
        "(define (problem q) (:domain t) (:objects w1 w2 - weed c1 - crop)"
        " (:goal (and)))",
        d,
    )
    task = ground(d, p, prune=False)
    assert {a.name for a in task.actions} == {"(mow w1)", "(mow w2)", "(mow c1)"}


def test_undeclared_object_and_cost_fluent_errors():
    d = parse_domain(
        "(define (domain e) (:predicates (p ?x - object)) (:functions (total-cost) (fee))"
        " (:action a :parameters (?x) :precondition (and)"
        "  :effect (and (p ?x) (increase (total-cost) (fee)))))"
    )
    with pytest.raises(UndeclaredObject):
        parse_and_ground = ground(
            d,
            parse_problem(
                "(define (problem f) (:domain e) (:init (p ghost)) (:goal (and)))", d
            ),
        )
    p = parse_problem(
        "(define (problem f) (:domain e) (:objects o - object) (:goal (and)))", d
    )
    with pytest.raises(CostFluentUndefined):
        ground(d, p)  # fee has no init value


def test_mistyped_init_atom_rejected():
    d = parse_domain(
        "(define (domain t) (:types cell tool - object) (:predicates (at ?c - cell)))"
    )
    p = parse_problem(
        "(define (problem x) (:domain t) (:objects spade - tool) (:init (at spade))"
        " (:goal (and)))",
        d,
    )
    with pytest.raises(GroundingError):
        ground(d, p)


def test_static_goal_false_is_representable():
    d = parse_domain(
        "(define (domain s) (:predicates (fixed) (q))"
        " (:action a :parameters () :precondition (fixed) :effect (q)))"
    )
    p = parse_problem("(define (problem s1) (:domain s) (:goal (and (q))))", d)
    task = ground(d, p)
    assert task.goal and not (task.goal <= task.init)


def test_pruning_preserves_optimal_cost_on_random_tasks():
    rng = random.Random(424242)
    checked = 0
    for _ in range(20):
        field, targets = random_instance(rng, rng.randint(1, 3), rng.randint(1, 3), max_targets=2)
        domain, problem = compile_problem(field, targets)
        pruned = ground(domain, problem, prune=True)
        unpruned = ground(domain, problem, prune=False)
        assert dijkstra_cost(pruned) == dijkstra_cost(unpruned)
        assert len(pruned.actions) <= len(unpruned.actions)
        checked += 1
    assert checked == 20


def test_grounding_is_deterministic():
    rng = random.Random(7)
    field, targets = random_instance(rng, 3, 3)
    domain, problem = compile_problem(field, targets)
    t1 = ground(domain, problem)
    t2 = ground(domain, problem)
    assert t1.facts == t2.facts
    assert [a.name for a in t1.actions] == [a.name for a in t2.actions]
    assert t1 == t2
