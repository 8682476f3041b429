"""Contrastive plan explanations: compile a user's foil into the task,
replan, and report the comparison.

A foil ("why not do X / avoid Y / do A before B / also clear Z / skip Z")
becomes a constrained copy of the grounded task. Replanning that copy with
the session's own search configuration yields a like-for-like cost
comparison plus an aligned step diff.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .pddl import GroundedTask, Plan, normalize_action_name, validate_plan
from .planner import NoPlan, SearchConfig, plan as run_planner


class ExplainError(Exception):
    pass


class UnknownAction(ExplainError):
    pass


class UnknownLiteral(ExplainError):
    pass


class LiteralNotInGoal(ExplainError):
    pass


class FoilSyntaxError(ExplainError):
    pass


@dataclass(frozen=True)
class ForbidAction:
    action: str

    def describe(self) -> str:
        return f"forbid {self.action}"


@dataclass(frozen=True)
class RequireAction:
    action: str

    def describe(self) -> str:
        return f"require {self.action}"


@dataclass(frozen=True)
class OrderBefore:
    first: str
    second: str

    def describe(self) -> str:
        return f"order {self.first} before {self.second}"


@dataclass(frozen=True)
class AddGoal:
    literal: str

    def describe(self) -> str:
        return f"add-goal {self.literal}"


@dataclass(frozen=True)
class DropGoal:
    literal: str

    def describe(self) -> str:
        return f"drop-goal {self.literal}"


ContrastiveQuery = Union[ForbidAction, RequireAction, OrderBefore, AddGoal, DropGoal]


def describe_query(query) -> str:
    if isinstance(query, (list, tuple)):
        return "; ".join(describe_query(q) for q in query)
    return query.describe()


def _mangle(name: str) -> str:
    return name.strip("()").replace(" ", "_")


def _action_id(task: GroundedTask, name: str) -> int:
    idx = task.action_index.get(normalize_action_name(name))
    if idx is None:
        raise UnknownAction(f"no action {name} in this task")
    return idx


def _fact_id(task: GroundedTask, literal: str) -> int:
    idx = task.fact_index.get(normalize_action_name(literal))
    if idx is None:
        raise UnknownLiteral(f"no ground literal {literal} in this task")
    return idx


def _with_marker(task: GroundedTask, marker: str) -> tuple[tuple[str, ...], int]:
    existing = task.fact_index.get(marker)
    if existing is not None:
        return task.facts, existing
    return task.facts + (marker,), len(task.facts)


def compile_foil(task: GroundedTask, query: ContrastiveQuery) -> GroundedTask:
    """Constrained copy of ``task``; the input is never mutated."""
    if isinstance(query, ForbidAction):
        idx = _action_id(task, query.action)
        return replace(task, actions=task.actions[:idx] + task.actions[idx + 1 :])
    if isinstance(query, RequireAction):
        idx = _action_id(task, query.action)
        facts, marker = _with_marker(task, f"(executed_{_mangle(query.action)})")
        act = task.actions[idx]
        actions = (
            task.actions[:idx]
            + (replace(act, add=act.add | {marker}),)
            + task.actions[idx + 1 :]
        )
        return replace(task, facts=facts, actions=actions, goal=task.goal | {marker})
    if isinstance(query, OrderBefore):
        first = _action_id(task, query.first)
        second = _action_id(task, query.second)
        facts, marker = _with_marker(task, f"(done_{_mangle(query.first)})")
        actions = list(task.actions)
        actions[first] = replace(actions[first], add=actions[first].add | {marker})
        actions[second] = replace(
            actions[second], pre_pos=actions[second].pre_pos | {marker}
        )
        return replace(task, facts=facts, actions=tuple(actions))
    if isinstance(query, AddGoal):
        return replace(task, goal=task.goal | {_fact_id(task, query.literal)})
    if isinstance(query, DropGoal):
        idx = _fact_id(task, query.literal)
        if idx not in task.goal:
            raise LiteralNotInGoal(f"{query.literal} is not a goal of this task")
        return replace(task, goal=task.goal - {idx})
    raise ExplainError(f"unsupported query {query!r}")


def compile_foils(task: GroundedTask, queries: Iterable[ContrastiveQuery]) -> GroundedTask:
    for q in queries:
        task = compile_foil(task, q)
    return task


@dataclass(frozen=True)
class DiffEntry:
    op: str  # "keep" | "remove" | "add"
    step: str


def step_diff(original: Sequence[str], foil: Sequence[str]) -> tuple[DiffEntry, ...]:
    """LCS alignment of two step-name sequences."""
    n, m = len(original), len(foil)
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = lcs[i], lcs[i + 1]
        for j in range(m - 1, -1, -1):
            if original[i] == foil[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = max(nxt[j], row[j + 1])
    out: list[DiffEntry] = []
    i = j = 0
    while i < n and j < m:
        if original[i] == foil[j]:
            out.append(DiffEntry("keep", original[i]))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            out.append(DiffEntry("remove", original[i]))
            i += 1
        else:
            out.append(DiffEntry("add", foil[j]))
            j += 1
    out.extend(DiffEntry("remove", s) for s in original[i:])
    out.extend(DiffEntry("add", s) for s in foil[j:])
    return tuple(out)


def apply_diff(original: Sequence[str], diff: Sequence[DiffEntry]) -> tuple[str, ...]:
    """Patch ``original`` with ``diff``; reproduces the foil step list."""
    out: list[str] = []
    it = iter(original)
    for entry in diff:
        if entry.op == "keep":
            if next(it, None) != entry.step:
                raise ExplainError("diff does not align with the original plan")
            out.append(entry.step)
        elif entry.op == "remove":
            if next(it, None) != entry.step:
                raise ExplainError("diff does not align with the original plan")
        else:
            out.append(entry.step)
    if next(it, None) is not None:
        raise ExplainError("diff does not consume the whole original plan")
    return tuple(out)


@dataclass(frozen=True)
class Explanation:
    query: ContrastiveQuery
    original: Plan
    foil_plan: Plan | None
    cost_delta: Fraction | None
    infeasible_reason: str | None
    diff: tuple[DiffEntry, ...]
    foil_task: GroundedTask = field(compare=False, repr=False, default=None)

    @property
    def feasible(self) -> bool:
        return self.foil_plan is not None

    def to_payload(self) -> dict:
        return {
            "query": describe_query(self.query),
            "original_cost": str(self.original.total_cost),
            "feasible": self.feasible,
            "foil_cost": str(self.foil_plan.total_cost) if self.foil_plan else None,
            "cost_delta": str(self.cost_delta) if self.cost_delta is not None else None,
            "foil_steps": list(self.foil_plan.step_names) if self.foil_plan else None,
            "infeasible_reason": self.infeasible_reason,
            "diff": [{"op": d.op, "step": d.step} for d in self.diff],
        }


def explain(
    task: GroundedTask,
    original: Plan,
    query: ContrastiveQuery | Sequence[ContrastiveQuery],
    search: SearchConfig | None = None,
) -> Explanation:
    """Answer one contrastive challenge against ``original``."""
    queries = query if isinstance(query, (list, tuple)) else (query,)
    if not queries:
        raise ExplainError("empty challenge")
    report = validate_plan(task, original)
    if not report.valid:
        raise ExplainError("the challenged plan does not validate on this task")
    foil_task = compile_foils(task, queries)
    head = queries[0] if len(queries) == 1 else queries
    try:
        foil_plan = run_planner(foil_task, search)
    except NoPlan as exc:
        return Explanation(
            query=head,
            original=original,
            foil_plan=None,
            cost_delta=None,
            infeasible_reason=f"no plan: {exc}",
            diff=(),
            foil_task=foil_task,
        )
    return Explanation(
        query=head,
        original=original,
        foil_plan=foil_plan,
        cost_delta=foil_plan.total_cost - original.total_cost,
        infeasible_reason=None,
        diff=step_diff(original.step_names, foil_plan.step_names),
        foil_task=foil_task,
    )


_FOIL_RE = re.compile(
    r"""
    \s*(?P<kind>forbid|require|order|add-goal|drop-goal)\s*
    (?P<rest>.*)$
    """,
    re.VERBOSE | re.IGNORECASE | re.DOTALL,
)
_PARENS = re.compile(r"\(([^()]*)\)")


def parse_foil(text: str) -> ContrastiveQuery:
    """Parse the small foil expression grammar used by CLI and gateway.

    Forms: ``forbid (a ...)``, ``require (a ...)``,
    ``order (a ...) before (b ...)``, ``add-goal (lit ...)``,
    ``drop-goal (lit ...)``.
    """
    m = _FOIL_RE.match(text or "")
    if not m:
        raise FoilSyntaxError(f"cannot parse foil expression: {text!r}")
    kind = m.group("kind").lower()
    groups = [normalize_action_name(g) for g in _PARENS.findall(m.group("rest"))]
    if kind == "order":
        if len(groups) != 2 or "before" not in m.group("rest"):
            raise FoilSyntaxError("order foil needs: order (a ...) before (b ...)")
        return OrderBefore(groups[0], groups[1])
    if len(groups) != 1:
        raise FoilSyntaxError(f"{kind} foil needs exactly one parenthesized term")
    if kind == "forbid":
        return ForbidAction(groups[0])
    if kind == "require":
        return RequireAction(groups[0])
    if kind == "add-goal":
        return AddGoal(groups[0])
    return DropGoal(groups[0])
