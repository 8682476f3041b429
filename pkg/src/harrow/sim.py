"""Seeded stochastic simulator of the weeding rover.

Randomness is counter-based (numpy's Philox bit generator) and keyed by
``(seed, stream)``: stream 0 draws the ground-truth weed layout once per
reset, stream 1 draws per-tick weed/damage outcomes at ``counter=tick``.
Nothing is drawn sequentially, so a trace is a pure function of
(seed, field, config, plan) and replays byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field, replace
from enum import Enum

import numpy as np

from .field import FieldModel
from .pddl import Plan, PlanStep

_GROUND_TRUTH_STREAM = 0
_OUTCOME_STREAM = 1


class SimError(Exception):
    pass


class SimStatus(Enum):
    OK = "ok"
    BATTERY_EMPTY = "battery_empty"
    FAULTED = "faulted"


@dataclass(frozen=True)
class RobotConfig:
    mass: float = 250.0  # kg, the platform's design bound
    speed: float = 1.0  # cells per tick, pacing hint for the serve-mode clock
    battery_capacity: float = 500.0
    energy_per_move: float = 1.0
    energy_per_weed: float = 2.0
    p_kill: float = 0.9
    p_crop_damage: float = 0.02

    def __post_init__(self):
        if self.mass <= 0 or self.speed <= 0 or self.battery_capacity <= 0:
            raise ValueError("mass, speed and battery capacity must be positive")
        if self.energy_per_move < 0 or self.energy_per_weed < 0:
            raise ValueError("energies must be nonnegative")
        for p in (self.p_kill, self.p_crop_damage):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")


def _uniforms(seed: int, stream: int, counter: int, n: int) -> np.ndarray:
    key = np.array([seed % (1 << 64), stream], dtype=np.uint64)
    ctr = np.array([counter, 0, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=ctr)).random(n)


@dataclass(frozen=True)
class SimState:
    field: FieldModel
    seed: int
    tick: int
    cell: int
    battery: float
    weedy: frozenset[int]
    cleared: frozenset[int]
    damaged: frozenset[int]
    passes: dict[int, int]
    status: SimStatus = SimStatus.OK
    fault_reason: str | None = None
    energy_used: float = 0.0
    distance: int = 0
    initial_weeds: int = 0

    def snapshot(self) -> dict:
        return {
            "tick": self.tick,
            "cell": self.cell,
            "battery": self.battery,
            "status": self.status.value,
            "fault_reason": self.fault_reason,
            "weedy": sorted(self.weedy),
            "cleared": sorted(self.cleared),
            "damaged": sorted(self.damaged),
        }


@dataclass(frozen=True)
class StepEvent:
    tick: int
    action: str
    result: str  # "applied" | "faulted" | "battery_empty"
    robot_cell: int
    battery: float
    metrics_delta: dict[str, float | int] = dc_field(default_factory=dict)
    detail: str | None = None

    def to_obj(self) -> dict:
        return {
            "tick": self.tick,
            "action": self.action,
            "result": self.result,
            "robot_cell": self.robot_cell,
            "battery": self.battery,
            "metrics_delta": dict(sorted(self.metrics_delta.items())),
            "detail": self.detail,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True)


@dataclass(frozen=True)
class MissionMetrics:
    weeds_present_initially: int
    weeds_removed: int
    crops_damaged: int
    distance_cells: int
    energy_used: float
    max_passes_per_cell: int
    ticks_elapsed: int

    def to_obj(self) -> dict:
        return {
            "weeds_present_initially": self.weeds_present_initially,
            "weeds_removed": self.weeds_removed,
            "crops_damaged": self.crops_damaged,
            "distance_cells": self.distance_cells,
            "energy_used": self.energy_used,
            "max_passes_per_cell": self.max_passes_per_cell,
            "ticks_elapsed": self.ticks_elapsed,
        }


def reset(field: FieldModel, cfg: RobotConfig, seed: int) -> SimState:
    """Fresh mission state; ground-truth weeds sampled i.i.d. per cell."""
    probs = np.asarray(field.map.probs)
    u = _uniforms(seed, _GROUND_TRUTH_STREAM, 0, field.map.size)
    weedy = frozenset(int(c) for c in np.nonzero(u < probs)[0])
    return SimState(
        field=field,
        seed=seed,
        tick=0,
        cell=field.home,
        battery=cfg.battery_capacity,
        weedy=weedy,
        cleared=frozenset(),
        damaged=frozenset(),
        passes={field.home: 1},
        initial_weeds=len(weedy),
    )


def parse_sim_action(name: str) -> tuple[str, tuple[int, ...]]:
    toks = name.strip().strip("()").split()
    try:
        if toks and toks[0] == "move" and len(toks) == 3:
            return "move", (int(toks[1].lstrip("c")), int(toks[2].lstrip("c")))
        if toks and toks[0] == "weed" and len(toks) == 2:
            return "weed", (int(toks[1].lstrip("c")),)
    except ValueError:
        pass
    return "unknown", ()


def step(state: SimState, action: str | PlanStep, cfg: RobotConfig) -> tuple[SimState, StepEvent]:
    """Execute one grounded action; returns the new state and its event."""
    if state.status is not SimStatus.OK:
        raise SimError(f"robot is not operational ({state.status.value})")
    name = action.name if isinstance(action, PlanStep) else str(action)
    tick = state.tick + 1
    kind, args = parse_sim_action(name)

    def fault(reason: str) -> tuple[SimState, StepEvent]:
        out = replace(state, tick=tick, status=SimStatus.FAULTED, fault_reason=reason)
        return out, StepEvent(tick, name, "faulted", out.cell, out.battery, {}, reason)

    def battery_empty() -> tuple[SimState, StepEvent]:
        out = replace(state, tick=tick, status=SimStatus.BATTERY_EMPTY)
        return out, StepEvent(
            tick, name, "battery_empty", out.cell, out.battery, {}, "battery exhausted"
        )

    if kind == "move":
        src, dst = args
        if src != state.cell:
            return fault(f"robot is at cell {state.cell}, not {src}")
        if dst not in state.field.neighbors(state.cell):
            return fault(f"cells {src} and {dst} are not adjacent")
        if dst in state.field.blocked:
            return fault(f"cell {dst} is blocked")
        if state.battery < cfg.energy_per_move:
            return battery_empty()
        passes = dict(state.passes)
        passes[dst] = passes.get(dst, 0) + 1
        out = replace(
            state,
            tick=tick,
            cell=dst,
            battery=state.battery - cfg.energy_per_move,
            passes=passes,
            energy_used=state.energy_used + cfg.energy_per_move,
            distance=state.distance + 1,
        )
        delta = {"distance_cells": 1, "energy_used": cfg.energy_per_move}
        return out, StepEvent(tick, name, "applied", out.cell, out.battery, delta)

    if kind == "weed":
        (target,) = args
        if target != state.cell:
            return fault(f"robot is at cell {state.cell}, cannot weed {target}")
        if state.battery < cfg.energy_per_weed:
            return battery_empty()
        u_kill, u_damage = _uniforms(state.seed, _OUTCOME_STREAM, tick, 2)
        weedy, cleared, damaged = state.weedy, state.cleared, state.damaged
        removed = 0
        if target in weedy and u_kill < cfg.p_kill:
            weedy = weedy - {target}
            cleared = cleared | {target}
            removed = 1
        newly_damaged = 0
        if u_damage < cfg.p_crop_damage and target not in damaged:
            damaged = damaged | {target}
            newly_damaged = 1
        out = replace(
            state,
            tick=tick,
            battery=state.battery - cfg.energy_per_weed,
            weedy=weedy,
            cleared=cleared,
            damaged=damaged,
            energy_used=state.energy_used + cfg.energy_per_weed,
        )
        delta = {
            "weeds_removed": removed,
            "crops_damaged": newly_damaged,
            "energy_used": cfg.energy_per_weed,
        }
        return out, StepEvent(tick, name, "applied", out.cell, out.battery, delta)

    return fault(f"unknown action {name}")


def metrics_of(state: SimState) -> MissionMetrics:
    return MissionMetrics(
        weeds_present_initially=state.initial_weeds,
        weeds_removed=len(state.cleared),
        crops_damaged=len(state.damaged),
        distance_cells=state.distance,
        energy_used=state.energy_used,
        max_passes_per_cell=max(state.passes.values(), default=0),
        ticks_elapsed=state.tick,
    )


def run_mission(
    state: SimState, plan: "Plan | list[str] | tuple[str, ...]", cfg: RobotConfig
) -> tuple[SimState, MissionMetrics, list[StepEvent]]:
    """Execute a whole plan, halting early if the robot leaves status Ok.

    Accepts a Plan or a bare sequence of grounded action names (the CLI
    feeds plan files straight through without re-grounding the task).
    """
    steps = plan.steps if isinstance(plan, Plan) else plan
    trace: list[StepEvent] = []
    for step_ in steps:
        state, event = step(state, step_, cfg)
        trace.append(event)
        if state.status is not SimStatus.OK:
            break
    return state, metrics_of(state), trace


def simulate(
    field: FieldModel,
    plan: "Plan | list[str] | tuple[str, ...]",
    cfg: RobotConfig,
    seed: int,
) -> tuple[SimState, MissionMetrics, list[StepEvent]]:
    return run_mission(reset(field, cfg, seed), plan, cfg)


def trace_to_jsonl(trace: list[StepEvent]) -> str:
    return "".join(ev.to_json() + "\n" for ev in trace)


def metrics_from_trace(
    trace: list[StepEvent], initial_weeds: int, home: int
) -> MissionMetrics:
    """Recompute mission totals from a trace (consistency oracle)."""
    sums: dict[str, float] = {}
    passes: dict[int, int] = {home: 1}
    prev_cell = home
    for ev in trace:
        for k, v in ev.metrics_delta.items():
            sums[k] = sums.get(k, 0) + v
        if ev.result == "applied" and ev.robot_cell != prev_cell:
            passes[ev.robot_cell] = passes.get(ev.robot_cell, 0) + 1
        prev_cell = ev.robot_cell
    return MissionMetrics(
        weeds_present_initially=initial_weeds,
        weeds_removed=int(sums.get("weeds_removed", 0)),
        crops_damaged=int(sums.get("crops_damaged", 0)),
        distance_cells=int(sums.get("distance_cells", 0)),
        energy_used=float(sums.get("energy_used", 0.0)),
        max_passes_per_cell=max(passes.values(), default=0),
        ticks_elapsed=trace[-1].tick if trace else 0,
    )
