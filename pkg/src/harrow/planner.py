"""Compile weeding missions to planning tasks and solve them.

Two search modes: ``OPTIMAL`` is A* with the admissible h_max heuristic
and returns minimum-cost plans; ``SATISFICING`` is greedy best-first on
h_add and returns some valid plan quickly. Tie-breaking is fixed (lower
action index first, FIFO among equal priorities) so identical inputs
produce identical plans.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field as dc_field
from enum import Enum
from fractions import Fraction
from typing import Callable

from .field import FieldModel, TargetSet
from .pddl import (
    ActionSchema,
    Atom,
    CostValue,
    DomainAst,
    GroundedTask,
    Literal,
    Parameter,
    Plan,
    ProblemAst,
    ProjectedTask,
    applicable,
    apply_action,
    concat_plans,
    ground,
    make_plan,
    progress,
    project,
)
from .pddl.errors import ForeignAction


class PlannerError(Exception):
    pass


class NoPlan(PlannerError):
    pass


class ResourceLimit(PlannerError):
    def __init__(self, kind: str, expansions: int):
        super().__init__(f"search exhausted its {kind} limit after {expansions} expansions")
        self.kind = kind  # "nodes" | "time"
        self.expansions = expansions


class SearchCancelled(PlannerError):
    pass


class InvalidPrefix(PlannerError):
    pass


class TargetUnreachable(PlannerError):
    def __init__(self, cells: tuple[int, ...]):
        super().__init__(f"targets not connected to home: {', '.join(map(str, cells))}")
        self.cells = cells


def as_cost(value) -> Fraction:
    """Exact rational from int/float/str input (floats via their repr)."""
    cost = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    if cost < 0:
        raise ValueError(f"costs must be nonnegative, got {value}")
    return cost


@dataclass(frozen=True)
class WeedingProblemConfig:
    weed_cost: Fraction = Fraction(1)
    move_cost_per_cell: Fraction = Fraction(1)
    require_return_home: bool = False

    def __post_init__(self):
        if self.weed_cost < 0 or self.move_cost_per_cell < 0:
            raise ValueError("costs must be nonnegative")


class SearchMode(Enum):
    OPTIMAL = "optimal"
    SATISFICING = "satisficing"


@dataclass(frozen=True)
class SearchConfig:
    mode: SearchMode = SearchMode.OPTIMAL
    node_limit: int = 1_000_000
    time_limit: float = 120.0

    def __post_init__(self):
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("search limits must be positive")


def cell_object(c: int) -> str:
    return f"c{c}"


def cell_index(name: str) -> int:
    return int(name[1:])


WEEDING_DOMAIN_NAME = "weeding"


def weeding_domain(cfg: WeedingProblemConfig) -> DomainAst:
    c, a, b, f, t = (Parameter(n, "cell") for n in ("?c", "?a", "?b", "?from", "?to"))
    move = ActionSchema(
        name="move",
        params=(f, t),
        precondition=(
            Literal(Atom("at", ("?from",))),
            Literal(Atom("adjacent", ("?from", "?to"))),
        ),
        add=(Atom("at", ("?to",)),),
        delete=(Atom("at", ("?from",)),),
        cost=CostValue(cfg.move_cost_per_cell),
    )
    weed = ActionSchema(
        name="weed",
        params=(c,),
        precondition=(
            Literal(Atom("at", ("?c",))),
            Literal(Atom("weedy", ("?c",))),
        ),
        add=(Atom("cleared", ("?c",)),),
        delete=(Atom("weedy", ("?c",)),),
        cost=CostValue(cfg.weed_cost),
    )
    return DomainAst(
        name=WEEDING_DOMAIN_NAME,
        requirements=(":strips", ":typing", ":action-costs"),
        types={"cell": "object"},
        predicates={
            "at": (c,),
            "weedy": (c,),
            "cleared": (c,),
            "adjacent": (a, b),
        },
        functions={"total-cost": ()},
        actions=(move, weed),
    )


def compile_problem(
    field: FieldModel, targets: TargetSet, cfg: WeedingProblemConfig | None = None
) -> tuple[DomainAst, ProblemAst]:
    """Encode a field + target set as a planning instance.

    Raises TargetUnreachable for targets not 4-connected to home.
    """
    cfg = cfg or WeedingProblemConfig()
    reachable = field.reachable_from_home()
    stranded = tuple(t for t in targets.targets if t not in reachable)
    if stranded:
        raise TargetUnreachable(stranded)

    passable = [c for c in range(field.map.size) if c not in field.blocked]
    domain = weeding_domain(cfg)
    init: list[Atom] = [Atom("at", (cell_object(field.home),))]
    init += [Atom("weedy", (cell_object(t),)) for t in targets.targets]
    for c in passable:
        for n in field.passable_neighbors(c):
            init.append(Atom("adjacent", (cell_object(c), cell_object(n))))
    goal = [Atom("cleared", (cell_object(t),)) for t in targets.targets]
    if cfg.require_return_home:
        goal.append(Atom("at", (cell_object(field.home),)))
    problem = ProblemAst(
        name=f"weeding-{field.map.width}x{field.map.height}",
        domain_name=domain.name,
        objects={cell_object(c): "cell" for c in passable},
        init=tuple(init),
        fluent_init={Atom("total-cost"): Fraction(0)},
        goal=tuple(goal),
        metric_min_total_cost=True,
    )
    return domain, problem


def compile_task(
    field: FieldModel, targets: TargetSet, cfg: WeedingProblemConfig | None = None
) -> GroundedTask:
    domain, problem = compile_problem(field, targets, cfg)
    return ground(domain, problem)


class _RelaxedHeuristic:
    """h_max / h_add via generalized Dijkstra over the relaxed task."""

    def __init__(self, proj: ProjectedTask, mode: SearchMode):
        self.additive = mode is SearchMode.SATISFICING
        self.goal = proj.goal
        self.costs = [act.cost for _, act in proj.actions]
        self.adds = [sorted(act.add) for _, act in proj.actions]
        self.pre_sizes = [len(act.pre_pos) for _, act in proj.actions]
        self.consumers: dict[int, list[int]] = {}
        self.no_pre = [i for i, n in enumerate(self.pre_sizes) if n == 0]
        for i, (_, act) in enumerate(proj.actions):
            for f in act.pre_pos:
                self.consumers.setdefault(f, []).append(i)
        self.cache: dict[frozenset[int], Fraction | None] = {}

    def __call__(self, state: frozenset[int]) -> Fraction | None:
        if not self.goal:
            return Fraction(0)
        cached = self.cache.get(state, _MISS)
        if cached is not _MISS:
            return cached
        value = self._compute(state)
        self.cache[state] = value
        return value

    def _compute(self, state: frozenset[int]) -> Fraction | None:
        dist: dict[int, Fraction] = {f: Fraction(0) for f in state}
        settled: set[int] = set()
        remaining = list(self.pre_sizes)
        agg: list[Fraction] = [Fraction(0)] * len(remaining)
        heap: list[tuple[Fraction, int]] = [(Fraction(0), f) for f in state]
        heapq.heapify(heap)
        goal_left = len(self.goal - state)

        def relax(aid: int, base: Fraction) -> None:
            val = self.costs[aid] + base
            for g in self.adds[aid]:
                if g not in dist or val < dist[g]:
                    dist[g] = val
                    heapq.heappush(heap, (val, g))

        for aid in self.no_pre:
            relax(aid, Fraction(0))
        while heap and goal_left:
            d, f = heapq.heappop(heap)
            if f in settled or d > dist.get(f, d):
                continue
            settled.add(f)
            if f in self.goal and f not in state:
                goal_left -= 1
            for aid in self.consumers.get(f, ()):
                remaining[aid] -= 1
                if self.additive:
                    agg[aid] += d
                else:
                    agg[aid] = d  # pops are in cost order; the last pre dominates
                if remaining[aid] == 0:
                    relax(aid, agg[aid])
        total = Fraction(0)
        for g in self.goal:
            val = dist.get(g)
            if val is None:
                return None
            total = total + val if self.additive else max(total, val)
        return total


_MISS = object()


def _reconstruct(parent, state) -> list[int]:
    indices = []
    while parent[state] is not None:
        state, idx = parent[state]
        indices.append(idx)
    indices.reverse()
    return indices


def plan(
    task: GroundedTask,
    cfg: SearchConfig | None = None,
    cancel: Callable[[], bool] | None = None,
    start_state: frozenset[int] | None = None,
) -> Plan:
    """Forward search for a plan; OPTIMAL mode proves minimum cost.

    ``start_state`` (full fact set) overrides ``task.init`` for replanning.
    """
    cfg = cfg or SearchConfig()
    proj = project(task)
    if not proj.goal_statics_ok:
        raise NoPlan("goal requires a static fact that is false in init")
    full = task.init if start_state is None else start_state
    start = full & task.fluents
    if proj.goal <= start:
        return make_plan(task, [])

    optimal = cfg.mode is SearchMode.OPTIMAL
    h = _RelaxedHeuristic(proj, cfg.mode)
    h0 = h(start)
    if h0 is None:
        raise NoPlan("goal unreachable even under delete relaxation")

    counter = itertools.count()
    g0 = Fraction(0)
    heap = [((g0 + h0) if optimal else h0, next(counter), g0, start)]
    best_g: dict[frozenset[int], Fraction] = {start: g0}
    parent: dict[frozenset[int], tuple[frozenset[int], int] | None] = {start: None}
    expansions = 0
    deadline = time.monotonic() + cfg.time_limit

    while heap:
        _, _, g, state = heapq.heappop(heap)
        if optimal and g > best_g.get(state, g):
            continue  # stale queue entry
        if proj.goal <= state:
            return make_plan(task, _reconstruct(parent, state))
        expansions += 1
        if expansions > cfg.node_limit:
            raise ResourceLimit("nodes", expansions)
        if time.monotonic() > deadline:
            raise ResourceLimit("time", expansions)
        if cancel is not None and cancel():
            raise SearchCancelled(f"cancelled after {expansions} expansions")
        for orig_idx, act in proj.actions:
            if not applicable(act, state):
                continue
            succ = apply_action(act, state)
            ng = g + act.cost
            if optimal:
                known = best_g.get(succ)
                if known is not None and ng >= known:
                    continue
                best_g[succ] = ng
            else:
                if succ in best_g:
                    continue
                best_g[succ] = ng
            parent[succ] = (state, orig_idx)
            hs = h(succ)
            if hs is None:
                continue
            priority = ng + hs if optimal else hs
            heapq.heappush(heap, (priority, next(counter), ng, succ))
    raise NoPlan("explored the whole reachable state space without meeting the goal")


def replan_from(task: GroundedTask, plan_prefix: Plan, cfg: SearchConfig | None = None) -> Plan:
    """Plan onward from the state the prefix reaches; prefix+result validates."""
    state = task.init
    try:
        for step in plan_prefix.steps:
            state = progress(task, state, step)
    except (ValueError, ForeignAction) as exc:
        raise InvalidPrefix(str(exc)) from None
    return plan(task, cfg, start_state=state)


def extend_plan(task: GroundedTask, plan_prefix: Plan, cfg: SearchConfig | None = None) -> Plan:
    return concat_plans(plan_prefix, replan_from(task, plan_prefix, cfg))
