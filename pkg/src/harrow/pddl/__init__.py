"""Typed-STRIPS-with-costs PDDL subset: parse, ground, validate."""

from .errors import (
    ArityError,
    CostFluentUndefined,
    DomainMismatch,
    ForeignAction,
    GroundingError,
    LexError,
    ParseError,
    PddlError,
    SourcePos,
    UndeclaredObject,
    UnknownFluent,
    UnknownPredicate,
    UnknownType,
    UnsupportedRequirement,
)
from .ground import GroundAction, GroundedTask, ground, ground_atom_name
from .model import (
    ActionSchema,
    Atom,
    CostFluentRef,
    CostValue,
    DomainAst,
    Literal,
    Parameter,
    ProblemAst,
    SUPPORTED_REQUIREMENTS,
    domain_to_pddl,
    format_number,
    problem_to_pddl,
)
from .parser import parse_domain, parse_problem
from .strips import (
    EMPTY_PLAN,
    Plan,
    PlanStep,
    ProjectedTask,
    ValidationReport,
    applicable,
    apply_action,
    concat_plans,
    format_plan,
    make_plan,
    normalize_action_name,
    parse_plan,
    progress,
    project,
    resolve_step,
    unsatisfied_preconditions,
    validate_plan,
)

__all__ = [
    "ActionSchema",
    "ArityError",
    "Atom",
    "CostFluentRef",
    "CostFluentUndefined",
    "CostValue",
    "DomainAst",
    "DomainMismatch",
    "EMPTY_PLAN",
    "ForeignAction",
    "GroundAction",
    "GroundedTask",
    "GroundingError",
    "LexError",
    "Literal",
    "Parameter",
    "ParseError",
    "PddlError",
    "Plan",
    "PlanStep",
    "ProblemAst",
    "ProjectedTask",
    "SUPPORTED_REQUIREMENTS",
    "SourcePos",
    "UndeclaredObject",
    "UnknownFluent",
    "UnknownPredicate",
    "UnknownType",
    "UnsupportedRequirement",
    "ValidationReport",
    "applicable",
    "apply_action",
    "concat_plans",
    "domain_to_pddl",
    "format_number",
    "format_plan",
    "ground",
    "ground_atom_name",
    "make_plan",
    "normalize_action_name",
    "parse_domain",
    "parse_plan",
    "parse_problem",
    "problem_to_pddl",
    "progress",
    "project",
    "resolve_step",
    "unsatisfied_preconditions",
    "validate_plan",
]
