"""STRIPS progression semantics, plans, and the plan validator.

``applicable``/``apply_action`` are the single transition implementation
shared by the validator, the forward search, and draft checking, so a
plan accepted by one is accepted by all.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ForeignAction
from .ground import GroundAction, GroundedTask


def applicable(action: GroundAction, state: frozenset[int]) -> bool:
    return action.pre_pos <= state and not (action.pre_neg & state)


def apply_action(action: GroundAction, state: frozenset[int]) -> frozenset[int]:
    return (state - action.delete) | action.add


def unsatisfied_preconditions(
    task: GroundedTask, action: GroundAction, state: frozenset[int]
) -> tuple[str, ...]:
    missing = [task.facts[f] for f in sorted(action.pre_pos - state)]
    missing += [f"(not {task.facts[f]})" for f in sorted(action.pre_neg & state)]
    return tuple(missing)


@dataclass(frozen=True)
class PlanStep:
    index: int  # position in task.actions
    name: str
    cost: Fraction


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]
    total_cost: Fraction

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def step_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.steps)


EMPTY_PLAN = Plan((), Fraction(0))


def make_plan(task: GroundedTask, indices: list[int] | tuple[int, ...]) -> Plan:
    steps = tuple(
        PlanStep(i, task.actions[i].name, task.actions[i].cost) for i in indices
    )
    return Plan(steps, sum((s.cost for s in steps), Fraction(0)))


def concat_plans(prefix: Plan, suffix: Plan) -> Plan:
    return Plan(prefix.steps + suffix.steps, prefix.total_cost + suffix.total_cost)


def resolve_step(task: GroundedTask, step: PlanStep) -> GroundAction:
    """Map a plan step back to this task's action or raise ForeignAction."""
    if 0 <= step.index < len(task.actions) and task.actions[step.index].name == step.name:
        return task.actions[step.index]
    idx = task.action_index.get(step.name)
    if idx is None:
        raise ForeignAction(f"step {step.name} is not an action of this task")
    return task.actions[idx]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of replaying a plan from the initial state.

    ``valid`` requires every precondition to hold along the way and the
    goal to be satisfied at the end. A report with ``first_failing_step``
    of ``None`` but nonempty ``missing_goals`` describes a precondition-
    clean plan that stops short of the goal.
    """

    valid: bool
    total_cost: Fraction
    final_state: frozenset[int]
    first_failing_step: int | None = None
    unsatisfied: tuple[str, ...] = ()
    missing_goals: tuple[str, ...] = ()

    @property
    def steps_ok(self) -> bool:
        return self.first_failing_step is None


def validate_plan(task: GroundedTask, plan: Plan) -> ValidationReport:
    """Replay ``plan`` by STRIPS progression from ``task.init``."""
    state = task.init
    cost = Fraction(0)
    for n, step in enumerate(plan.steps):
        action = resolve_step(task, step)
        if not applicable(action, state):
            return ValidationReport(
                valid=False,
                total_cost=cost,
                final_state=state,
                first_failing_step=n,
                unsatisfied=unsatisfied_preconditions(task, action, state),
            )
        state = apply_action(action, state)
        cost += action.cost
    if task.goal <= state:
        return ValidationReport(valid=True, total_cost=cost, final_state=state)
    missing = tuple(task.facts[f] for f in sorted(task.goal - state))
    return ValidationReport(
        valid=False, total_cost=cost, final_state=state, missing_goals=missing
    )


def progress(task: GroundedTask, state: frozenset[int], step: PlanStep) -> frozenset[int]:
    """One checked progression step; raises ForeignAction on alien steps."""
    action = resolve_step(task, step)
    if not applicable(action, state):
        raise ValueError(
            f"step {step.name}: {', '.join(unsatisfied_preconditions(task, action, state))}"
        )
    return apply_action(action, state)


def normalize_action_name(text: str) -> str:
    """Canonical "(name arg ...)" form of a plan line."""
    toks = text.replace("(", " ").replace(")", " ").split()
    return f"({' '.join(t.lower() for t in toks)})"


def parse_plan(text: str, task: GroundedTask) -> Plan:
    """Read a VAL-style plan file: one ``(action obj ...)`` per line."""
    indices = []
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        name = normalize_action_name(line)
        idx = task.action_index.get(name)
        if idx is None:
            raise ForeignAction(f"plan names unknown action {name}")
        indices.append(idx)
    return make_plan(task, indices)


def format_plan(plan: Plan) -> str:
    return "".join(f"{name}\n" for name in plan.step_names)


@dataclass(frozen=True)
class ProjectedTask:
    """Search view of a task: static facts resolved away.

    Actions whose static preconditions fail in ``init`` are dropped; the
    remaining actions' preconditions mention fluent facts only, so search
    states need only track fluents.
    """

    task: GroundedTask
    actions: tuple[tuple[int, GroundAction], ...]  # (original index, simplified action)
    init: frozenset[int]
    goal: frozenset[int]
    goal_statics_ok: bool


def project(task: GroundedTask) -> ProjectedTask:
    fluents = task.fluents
    static_true = task.init - fluents
    usable: list[tuple[int, GroundAction]] = []
    for i, a in enumerate(task.actions):
        pos_static = a.pre_pos - fluents
        if not pos_static <= static_true:
            continue
        if (a.pre_neg - fluents) & static_true:
            continue
        usable.append(
            (
                i,
                GroundAction(
                    name=a.name,
                    pre_pos=a.pre_pos & fluents,
                    pre_neg=a.pre_neg & fluents,
                    add=a.add,
                    delete=a.delete,
                    cost=a.cost,
                ),
            )
        )
    goal_static = task.goal - fluents
    return ProjectedTask(
        task=task,
        actions=tuple(usable),
        init=task.init & fluents,
        goal=task.goal & fluents,
        goal_statics_ok=goal_static <= static_true,
    )
