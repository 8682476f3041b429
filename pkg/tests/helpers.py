"""Shared seeded generators for fields, instances and maps."""

from __future__ import annotations

import random

from harrow.field import FieldModel, TargetSet, WeedMap


def make_map(width: int, height: int, probs, cell_size: float = 1.0) -> WeedMap:
    return WeedMap(width, height, cell_size, (0.0, 0.0), tuple(float(p) for p in probs))


def uniform_map(width: int, height: int, p: float) -> WeedMap:
    return make_map(width, height, [p] * (width * height))


def field_with_targets(
    width: int,
    height: int,
    targets,
    blocked=(),
    home: int = 0,
) -> tuple[FieldModel, TargetSet]:
    """Field whose map is 1.0 exactly on the wanted targets."""
    probs = [1.0 if c in set(targets) else 0.0 for c in range(width * height)]
    fm = FieldModel(map=make_map(width, height, probs), blocked=frozenset(blocked), home=home)
    return fm, TargetSet(0.5, tuple(sorted(targets)))


def random_field(
    rng: random.Random,
    width: int,
    height: int,
    p_blocked: float = 0.15,
) -> FieldModel:
    n = width * height
    blocked = {c for c in range(n) if rng.random() < p_blocked}
    passable = [c for c in range(n) if c not in blocked]
    if not passable:
        blocked = set()
        passable = list(range(n))
    home = rng.choice(passable)
    probs = [0.0 if c in blocked else round(rng.random(), 3) for c in range(n)]
    return FieldModel(
        map=make_map(width, height, probs), blocked=frozenset(blocked), home=home
    )


def random_reachable_targets(
    rng: random.Random, field: FieldModel, max_targets: int
) -> TargetSet:
    reachable = sorted(field.reachable_from_home())
    k = rng.randint(0, min(max_targets, len(reachable)))
    picked = sorted(rng.sample(reachable, k))
    return TargetSet(0.5, tuple(picked))


def random_instance(
    rng: random.Random,
    width: int,
    height: int,
    max_targets: int = 3,
    p_blocked: float = 0.15,
) -> tuple[FieldModel, TargetSet]:
    field = random_field(rng, width, height, p_blocked)
    return field, random_reachable_targets(rng, field, max_targets)
