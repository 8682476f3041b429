"""Independent brute-force oracles the planner and explainer are tested against.

Nothing here imports the planner or the shared STRIPS helpers: transition
semantics are re-implemented inline (Dijkstra over explicit states), and
the field-level oracle never touches PDDL at all (grid BFS + permutations).
"""

from __future__ import annotations

import heapq
import itertools
from fractions import Fraction

from harrow.field import FieldModel
from harrow.pddl import GroundedTask
from harrow.planner import WeedingProblemConfig


def dijkstra_cost(task: GroundedTask, limit: int = 200_000) -> Fraction | None:
    """Exact optimal plan cost by uniform-cost search over full states."""
    start = task.init
    goal = task.goal
    dist: dict[frozenset[int], Fraction] = {start: Fraction(0)}
    tie = itertools.count()
    heap: list[tuple[Fraction, int, frozenset[int]]] = [(Fraction(0), next(tie), start)]
    popped = 0
    while heap:
        d, _, s = heapq.heappop(heap)
        if d > dist.get(s, d):
            continue
        if goal <= s:
            return d
        popped += 1
        if popped > limit:
            raise RuntimeError(f"oracle state budget exceeded ({limit} states)")
        for a in task.actions:
            if a.pre_pos <= s and not (a.pre_neg & s):
                ns = (s - a.delete) | a.add
                nd = d + a.cost
                if ns not in dist or nd < dist[ns]:
                    dist[ns] = nd
                    heapq.heappush(heap, (nd, next(tie), ns))
    return None


def dijkstra_plan(task: GroundedTask, limit: int = 200_000) -> list[str] | None:
    """An optimal plan (action names) from the same search, for replay tests."""
    start = task.init
    goal = task.goal
    dist: dict[frozenset[int], Fraction] = {start: Fraction(0)}
    parent: dict[frozenset[int], tuple[frozenset[int], str] | None] = {start: None}
    tie = itertools.count()
    heap: list[tuple[Fraction, int, frozenset[int]]] = [(Fraction(0), next(tie), start)]
    popped = 0
    while heap:
        d, _, s = heapq.heappop(heap)
        if d > dist.get(s, d):
            continue
        if goal <= s:
            names: list[str] = []
            cur = s
            while parent[cur] is not None:
                cur, name = parent[cur]
                names.append(name)
            names.reverse()
            return names
        popped += 1
        if popped > limit:
            raise RuntimeError(f"oracle state budget exceeded ({limit} states)")
        for a in task.actions:
            if a.pre_pos <= s and not (a.pre_neg & s):
                ns = (s - a.delete) | a.add
                nd = d + a.cost
                if ns not in dist or nd < dist[ns]:
                    dist[ns] = nd
                    parent[ns] = (s, a.name)
                    heapq.heappush(heap, (nd, next(tie), ns))
    return None


def grid_distances(field: FieldModel, source: int) -> dict[int, int]:
    """BFS hop counts over passable 4-connected cells."""
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for c in frontier:
            for n in field.passable_neighbors(c):
                if n not in dist:
                    dist[n] = dist[c] + 1
                    nxt.append(n)
        frontier = nxt
    return dist


def weeding_cost_by_enumeration(
    field: FieldModel,
    targets: tuple[int, ...],
    cfg: WeedingProblemConfig | None = None,
) -> Fraction | None:
    """Optimal mission cost by trying every target visiting order.

    Pure grid reasoning - no PDDL, no shared code with the planner.
    Exponential in the number of targets; keep it under ~6.
    """
    cfg = cfg or WeedingProblemConfig()
    points = (field.home, *targets)
    dists = {p: grid_distances(field, p) for p in points}
    for t in targets:
        if t not in dists[field.home]:
            return None
    best: Fraction | None = None
    for order in itertools.permutations(targets):
        here = field.home
        moves = 0
        feasible = True
        for t in order:
            if t not in dists[here]:
                feasible = False
                break
            moves += dists[here][t]
            here = t
        if not feasible:
            continue
        if cfg.require_return_home:
            if field.home not in dists[here]:
                continue
            moves += dists[here][field.home]
        total = cfg.move_cost_per_cell * moves + cfg.weed_cost * len(targets)
        if best is None or total < best:
            best = total
    return best
