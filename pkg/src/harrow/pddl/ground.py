"""Grounding: instantiate action schemas over typed objects.

With ``prune=True`` (default) instantiation is driven by joining over
static precondition atoms and the result is filtered by delete-relaxation
reachability from the initial state; both steps preserve plan existence
and optimal cost. ``prune=False`` enumerates every type-consistent
binding, which is only tractable on small instances but gives the
reference semantics the pruned configuration is tested against.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CostFluentUndefined, GroundingError, UndeclaredObject
from .model import ActionSchema, Atom, CostFluentRef, CostValue, DomainAst, ProblemAst


@dataclass(frozen=True)
class GroundAction:
    name: str
    pre_pos: frozenset[int]
    pre_neg: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    cost: Fraction


@dataclass(frozen=True)
class GroundedTask:
    """Propositional planning task over an indexed fact universe."""

    facts: tuple[str, ...]
    actions: tuple[GroundAction, ...]
    init: frozenset[int]
    goal: frozenset[int]
    fact_index: dict[str, int] = field(init=False, compare=False, repr=False)
    action_index: dict[str, int] = field(init=False, compare=False, repr=False)
    fluents: frozenset[int] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fact_index", {f: i for i, f in enumerate(self.facts)})
        object.__setattr__(self, "action_index", {a.name: i for i, a in enumerate(self.actions)})
        moving: set[int] = set()
        for a in self.actions:
            moving |= a.add
            moving |= a.delete
        object.__setattr__(self, "fluents", frozenset(moving))

    @property
    def statics_true(self) -> frozenset[int]:
        return self.init - self.fluents

    def fact_names(self, ids) -> tuple[str, ...]:
        return tuple(self.facts[i] for i in sorted(ids))


def ground_atom_name(pred: str, args: tuple[str, ...]) -> str:
    return f"({pred} {' '.join(args)})" if args else f"({pred})"


def _substitute(atom: Atom, binding: dict[str, str]) -> str:
    args = tuple(binding[a] if a.startswith("?") else a for a in atom.args)
    return ground_atom_name(atom.pred, args)


class _Grounder:
    def __init__(self, domain: DomainAst, problem: ProblemAst):
        self.domain = domain
        self.problem = problem
        self.objects = problem.objects
        # type -> objects compatible with it, declaration order
        self.by_type: dict[str, list[str]] = {t: [] for t in (*domain.types, "object")}
        for name, otype in problem.objects.items():
            for anc in domain.type_ancestors(otype):
                self.by_type.setdefault(anc, []).append(name)
        self.static_preds = self._static_predicates()
        self.fluent_values = {
            ground_atom_name(ref.pred, ref.args): value
            for ref, value in problem.fluent_init.items()
        }

    def _static_predicates(self) -> frozenset[str]:
        moving = set()
        for act in self.domain.actions:
            moving.update(a.pred for a in act.add)
            moving.update(a.pred for a in act.delete)
        return frozenset(self.domain.predicates) - moving

    def _check_ground_atom(self, atom: Atom, where: str) -> str:
        sig = self.domain.predicates[atom.pred]
        for arg, param in zip(atom.args, sig):
            otype = self.objects.get(arg)
            if otype is None:
                raise UndeclaredObject(f"{where}: object {arg!r} is not declared", atom.pos)
            if param.type not in self.domain.type_ancestors(otype):
                raise GroundingError(
                    f"{where}: {arg!r} of type {otype!r} is not a {param.type!r}", atom.pos
                )
        return ground_atom_name(atom.pred, atom.args)

    def _compatible(self, obj: str, ptype: str) -> bool:
        return ptype in self.domain.type_ancestors(self.objects[obj])

    def _bindings(self, schema: ActionSchema, init_by_pred: dict[str, list[tuple[str, ...]]],
                  join: bool) -> list[tuple[str, ...]]:
        params = schema.params
        ptype = {p.name: p.type for p in params}
        partial: list[dict[str, str]] = [{}]
        if join:
            drivers = [
                lit.atom
                for lit in schema.precondition
                if lit.positive and lit.atom.pred in self.static_preds
            ]
            for atom in drivers:
                facts = init_by_pred.get(atom.pred, [])
                grown: list[dict[str, str]] = []
                for b in partial:
                    for args in facts:
                        nb = dict(b)
                        ok = True
                        for slot, fact_arg in zip(atom.args, args):
                            if slot.startswith("?"):
                                bound = nb.get(slot)
                                if bound is None:
                                    if not self._compatible(fact_arg, ptype[slot]):
                                        ok = False
                                        break
                                    nb[slot] = fact_arg
                                elif bound != fact_arg:
                                    ok = False
                                    break
                            elif slot != fact_arg:
                                ok = False
                                break
                        if ok:
                            grown.append(nb)
                partial = grown
                if not partial:
                    return []
        out: list[tuple[str, ...]] = []
        seen: set[tuple[str, ...]] = set()
        for b in partial:
            free = [p.name for p in params if p.name not in b]
            pools = [self.by_type.get(ptype[v], []) for v in free]
            for combo in itertools.product(*pools):
                full = dict(b)
                full.update(zip(free, combo))
                key = tuple(full[p.name] for p in params)
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out

    def run(self, prune: bool) -> GroundedTask:
        domain, problem = self.domain, self.problem

        init_names: list[str] = []
        init_by_pred: dict[str, list[tuple[str, ...]]] = {}
        for atom in problem.init:
            init_names.append(self._check_ground_atom(atom, "init"))
            init_by_pred.setdefault(atom.pred, []).append(atom.args)
        goal_names = [self._check_ground_atom(atom, "goal") for atom in problem.goal]
        for ref in problem.fluent_init:
            for arg in ref.args:
                if arg not in self.objects:
                    raise UndeclaredObject(f"init fluent: object {arg!r} is not declared", ref.pos)

        candidates: list[tuple[str, set[str], set[str], set[str], set[str], Fraction]] = []
        for schema in domain.actions:
            cost = self._resolve_cost(schema)
            for args in self._bindings(schema, init_by_pred, join=prune):
                binding = {p.name: obj for p, obj in zip(schema.params, args)}
                name = ground_atom_name(schema.name, args)
                pre_pos = {
                    _substitute(l.atom, binding) for l in schema.precondition if l.positive
                }
                pre_neg = {
                    _substitute(l.atom, binding) for l in schema.precondition if not l.positive
                }
                add = {_substitute(a, binding) for a in schema.add}
                delete = {_substitute(a, binding) for a in schema.delete}
                candidates.append((name, pre_pos, pre_neg, add, delete, cost))

        if prune:
            universe, kept = self._relaxed_reachable(init_names, candidates)
            for g in goal_names:
                if g not in universe:
                    universe[g] = len(universe)
        else:
            universe = dict.fromkeys(init_names)
            for pred, sig in domain.predicates.items():
                pools = [self.by_type.get(p.type, []) for p in sig]
                for combo in itertools.product(*pools):
                    universe.setdefault(ground_atom_name(pred, tuple(combo)))
            for name, pre_pos, pre_neg, add, delete, _ in candidates:
                for f in sorted(itertools.chain(pre_pos, pre_neg, add, delete)):
                    universe.setdefault(f)
            for g in goal_names:
                universe.setdefault(g)
            universe = {name: i for i, name in enumerate(universe)}
            kept = list(range(len(candidates)))

        idx = universe
        actions = []
        for k in kept:
            name, pre_pos, pre_neg, add, delete, cost = candidates[k]
            actions.append(
                GroundAction(
                    name=name,
                    pre_pos=frozenset(idx[f] for f in pre_pos),
                    pre_neg=frozenset(idx[f] for f in pre_neg if f in idx),
                    add=frozenset(idx[f] for f in add if f in idx),
                    delete=frozenset(idx[f] for f in delete if f in idx),
                    cost=cost,
                )
            )
        facts = tuple(idx)
        return GroundedTask(
            facts=facts,
            actions=tuple(actions),
            init=frozenset(idx[f] for f in init_names),
            goal=frozenset(idx[f] for f in goal_names),
        )

    def _resolve_cost(self, schema: ActionSchema) -> Fraction:
        if isinstance(schema.cost, CostValue):
            return schema.cost.amount
        assert isinstance(schema.cost, CostFluentRef)
        name = ground_atom_name(schema.cost.ref.pred, schema.cost.ref.args)
        if name not in self.fluent_values:
            raise CostFluentUndefined(
                f"action {schema.name!r}: no init value for cost fluent {name}", schema.pos
            )
        return self.fluent_values[name]

    def _relaxed_reachable(self, init_names, candidates):
        """Delete-relaxation fixpoint; returns (ordered universe, kept action ids)."""
        universe: dict[str, int | None] = dict.fromkeys(init_names)
        consumers: dict[str, list[int]] = {}
        remaining: list[int] = []
        for i, (_, pre_pos, _, _, _, _) in enumerate(candidates):
            remaining.append(len(pre_pos))
            for f in pre_pos:
                consumers.setdefault(f, []).append(i)
        kept: list[int] = []
        queue: deque[str] = deque(universe)

        def enable(i: int) -> None:
            kept.append(i)
            # sorted so the discovery order (hence fact numbering) is stable
            # across processes regardless of str hash randomization
            for f in sorted(candidates[i][3]):
                if f not in universe:
                    universe[f] = None
                    queue.append(f)

        for i, r in enumerate(remaining):
            if r == 0:
                enable(i)
        while queue:
            f = queue.popleft()
            for i in consumers.get(f, []):
                remaining[i] -= 1
                if remaining[i] == 0:
                    enable(i)
        kept.sort()
        return {name: k for k, name in enumerate(universe)}, kept


def ground(domain: DomainAst, problem: ProblemAst, prune: bool = True) -> GroundedTask:
    """Ground ``problem`` over ``domain`` into a :class:`GroundedTask`."""
    return _Grounder(domain, problem).run(prune)
