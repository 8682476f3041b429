"""AST for the supported PDDL subset: typed STRIPS with action costs.

Source positions ride along for error reporting but are excluded from
equality, so a written-out AST compares equal to its reparse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import SourcePos

SUPPORTED_REQUIREMENTS = (":strips", ":typing", ":negative-preconditions", ":action-costs")

ROOT_TYPE = "object"


@dataclass(frozen=True)
class Atom:
    """Predicate or fluent application; args are variables (?x) or constants."""

    pred: str
    args: tuple[str, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        if self.args:
            return f"({self.pred} {' '.join(self.args)})"
        return f"({self.pred})"

    @property
    def is_ground(self) -> bool:
        return not any(a.startswith("?") for a in self.args)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"(not {self.atom})"


@dataclass(frozen=True)
class Parameter:
    name: str
    type: str = ROOT_TYPE


@dataclass(frozen=True)
class CostValue:
    amount: Fraction


@dataclass(frozen=True)
class CostFluentRef:
    ref: Atom  # ground fluent reference, value read from problem init


CostExpr = CostValue | CostFluentRef


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[Parameter, ...]
    precondition: tuple[Literal, ...]
    add: tuple[Atom, ...]
    delete: tuple[Atom, ...]
    cost: CostExpr = CostValue(Fraction(0))
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DomainAst:
    name: str
    requirements: tuple[str, ...]
    types: dict[str, str]  # declared type -> supertype; "object" is implicit root
    predicates: dict[str, tuple[Parameter, ...]]
    functions: dict[str, tuple[Parameter, ...]]
    actions: tuple[ActionSchema, ...]

    def type_ancestors(self, t: str) -> tuple[str, ...]:
        """``t`` and its supertype chain up to and including ``object``."""
        chain = [t]
        seen = {t}
        while chain[-1] != ROOT_TYPE:
            parent = self.types.get(chain[-1], ROOT_TYPE)
            if parent in seen:  # defensive; parser rejects cycles
                break
            chain.append(parent)
            seen.add(parent)
        return tuple(chain)


@dataclass(frozen=True)
class ProblemAst:
    name: str
    domain_name: str
    objects: dict[str, str]  # name -> type, declaration order preserved
    init: tuple[Atom, ...]  # ground atoms, deduplicated, file order
    fluent_init: dict[Atom, Fraction]
    goal: tuple[Atom, ...]  # conjunction of ground positive atoms
    metric_min_total_cost: bool = False


def format_number(x: Fraction) -> str:
    """Render an exact rational as PDDL decimal text, or fail loudly.

    Only rationals with 2^a*5^b denominators have finite decimal forms;
    anything else cannot round-trip through PDDL text.
    """
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise ValueError(f"{x} has no exact decimal representation")
    shift = max(twos, fives)
    scaled = abs(x.numerator) * 10**shift // x.denominator
    digits = str(scaled).rjust(shift + 1, "0")
    sign = "-" if x.numerator < 0 else ""
    return f"{sign}{digits[:-shift]}.{digits[-shift:]}"


def _typed_params(params: tuple[Parameter, ...]) -> str:
    return " ".join(f"{p.name} - {p.type}" for p in params)


def _cost_text(cost: CostExpr) -> str:
    if isinstance(cost, CostValue):
        return format_number(cost.amount)
    return str(cost.ref)


def domain_to_pddl(domain: DomainAst) -> str:
    """Render a domain AST; ``parse_domain`` inverts this exactly."""
    out = [f"(define (domain {domain.name})"]
    if domain.requirements:
        out.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        groups: dict[str, list[str]] = {}
        for t, sup in domain.types.items():
            groups.setdefault(sup, []).append(t)
        decl = " ".join(f"{' '.join(names)} - {sup}" for sup, names in groups.items())
        out.append(f"  (:types {decl})")
    if domain.predicates:
        preds = "\n".join(
            f"    ({name} {_typed_params(ps)})" if ps else f"    ({name})"
            for name, ps in domain.predicates.items()
        )
        out.append(f"  (:predicates\n{preds})")
    if domain.functions:
        fns = " ".join(
            f"({name} {_typed_params(ps)})" if ps else f"({name})"
            for name, ps in domain.functions.items()
        )
        out.append(f"  (:functions {fns})")
    for act in domain.actions:
        pre = " ".join(str(lit) for lit in act.precondition)
        effs = [f"(not {a})" for a in act.delete] + [str(a) for a in act.add]
        if act.cost != CostValue(Fraction(0)):  # zero-cost actions omit the increase
            effs.append(f"(increase (total-cost) {_cost_text(act.cost)})")
        out.append(
            f"  (:action {act.name}\n"
            f"    :parameters ({_typed_params(act.params)})\n"
            f"    :precondition (and {pre})\n"
            f"    :effect (and {' '.join(effs)}))"
        )
    out.append(")")
    return "\n".join(out) + "\n"


def problem_to_pddl(problem: ProblemAst) -> str:
    """Render a problem AST; ``parse_problem`` inverts this exactly."""
    out = [
        f"(define (problem {problem.name})",
        f"  (:domain {problem.domain_name})",
    ]
    if problem.objects:
        decl = " ".join(f"{name} - {t}" for name, t in problem.objects.items())
        out.append(f"  (:objects {decl})")
    lines = [f"    {atom}" for atom in problem.init]
    lines += [
        f"    (= {ref} {format_number(value)})" for ref, value in problem.fluent_init.items()
    ]
    body = "\n".join(lines)
    out.append(f"  (:init\n{body})" if lines else "  (:init)")
    goal = " ".join(str(a) for a in problem.goal)
    out.append(f"  (:goal (and {goal}))")
    if problem.metric_min_total_cost:
        out.append("  (:metric minimize (total-cost))")
    out.append(")")
    return "\n".join(out) + "\n"
