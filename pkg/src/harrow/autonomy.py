"""Trust-ladder session state machine.

A session owns one mission: a field, a compiled task, and whichever plan
artifacts its trust level allows the human or the planner to author.
All state changes flow through explicit events; the manager serializes
accepted events to an append-only JSONL log that replays deterministically
after a crash (planning, explanation and simulation are all deterministic
functions of the logged inputs).

Trust levels:
  low     - the human composes the plan action by action, each step checked
  partial - the planner proposes, the human challenges/accepts/rejects
  full    - the planner's plan executes immediately, no approval event
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

from .explain import (
    ContrastiveQuery,
    ExplainError,
    Explanation,
    describe_query,
    explain as run_explain,
    parse_foil,
)
from .field import FieldModel, RowAxis, TargetSet, WeedMap, cells_from_spec, select_targets
from .pddl import (
    ForeignAction,
    GroundedTask,
    Plan,
    PlanStep,
    ValidationReport,
    applicable,
    apply_action,
    normalize_action_name,
    resolve_step,
    unsatisfied_preconditions,
    validate_plan,
)
from .planner import (
    NoPlan,
    PlannerError,
    SearchConfig,
    SearchMode,
    WeedingProblemConfig,
    as_cost,
    compile_task,
    plan as run_planner,
)
from .sim import RobotConfig, SimState, SimStatus, StepEvent, metrics_of, reset as sim_reset, step as sim_step


class TrustLevel(Enum):
    LOW = "low"
    PARTIAL = "partial"
    FULL = "full"

    @property
    def rank(self) -> int:
        return ("low", "partial", "full").index(self.value)


class Phase(Enum):
    IDLE = "idle"
    DRAFTING = "drafting"
    PROPOSED = "proposed"
    CHALLENGING = "challenging"
    COMMITTED = "committed"
    EXECUTING = "executing"
    PAUSED = "paused"
    DONE = "done"
    ABORTED = "aborted"


_CONFIG_PHASES = frozenset({Phase.IDLE, Phase.DONE, Phase.ABORTED})


def event_allowed(event: str, trust: TrustLevel, phase: Phase) -> bool:
    """The full transition table; anything not allowed raises IllegalPhase."""
    if event in ("set_trust_level", "configure"):
        return phase in _CONFIG_PHASES
    if event == "append_action":
        return trust is TrustLevel.LOW and phase in (Phase.IDLE, Phase.DRAFTING)
    if event in ("undo_last", "commit_draft"):
        return trust is TrustLevel.LOW and phase is Phase.DRAFTING
    if event == "propose":
        return trust is TrustLevel.PARTIAL and phase is Phase.IDLE
    if event in ("challenge", "resolve"):
        return phase in (Phase.PROPOSED, Phase.CHALLENGING)
    if event == "start":
        if trust is TrustLevel.FULL:
            return phase is Phase.IDLE
        return phase is Phase.COMMITTED
    if event == "pause":
        return phase is Phase.EXECUTING
    if event == "resume":
        return phase is Phase.PAUSED
    if event == "abort":
        return phase in (Phase.EXECUTING, Phase.PAUSED)
    if event == "tick":
        return phase is Phase.EXECUTING
    raise ValueError(f"unknown event {event!r}")


SESSION_EVENTS = (
    "set_trust_level",
    "configure",
    "append_action",
    "undo_last",
    "commit_draft",
    "propose",
    "challenge",
    "resolve",
    "start",
    "pause",
    "resume",
    "abort",
    "tick",
)


class AutonomyError(Exception):
    pass


class IllegalPhase(AutonomyError):
    pass


class EmptyDraft(AutonomyError):
    pass


class GoalNotSatisfied(AutonomyError):
    def __init__(self, missing: tuple[str, ...]):
        super().__init__(f"draft does not satisfy the goal; missing {', '.join(missing)}")
        self.missing = missing


class PreconditionUnsatisfied(AutonomyError):
    def __init__(self, action: str, literals: tuple[str, ...]):
        super().__init__(f"{action} is not applicable: {', '.join(literals)}")
        self.literals = literals


class FoilIndexInvalid(AutonomyError):
    pass


class FoilWasInfeasible(AutonomyError):
    pass


class UnknownSession(AutonomyError):
    pass


@dataclass
class ChallengeRecord:
    query: ContrastiveQuery
    explanation: Explanation
    generation: int  # which proposal this challenge was raised against

    def to_payload(self) -> dict:
        return {"generation": self.generation, **self.explanation.to_payload()}


def plan_payload(plan: Plan | None) -> dict | None:
    if plan is None:
        return None
    return {"steps": list(plan.step_names), "cost": str(plan.total_cost)}


def validation_payload(report: ValidationReport | None) -> dict | None:
    if report is None:
        return None
    return {
        "valid": report.valid,
        "steps_ok": report.steps_ok,
        "total_cost": str(report.total_cost),
        "first_failing_step": report.first_failing_step,
        "unsatisfied": list(report.unsatisfied),
        "missing_goals": list(report.missing_goals),
    }


@dataclass
class Session:
    """One mission's state machine; mutate only through event methods."""

    id: str
    field: FieldModel
    threshold: float = 0.5
    problem_cfg: WeedingProblemConfig = WeedingProblemConfig()
    search_cfg: SearchConfig = SearchConfig()
    robot_cfg: RobotConfig = RobotConfig()
    seed: int = 0
    trust: TrustLevel = TrustLevel.LOW
    phase: Phase = Phase.IDLE

    targets: TargetSet = dc_field(init=False)
    task: GroundedTask = dc_field(init=False)
    draft: list[PlanStep] = dc_field(default_factory=list)
    proposal: Plan | None = None
    committed: Plan | None = None
    partial_commit: bool = False
    validation: ValidationReport | None = None
    challenge_log: list[ChallengeRecord] = dc_field(default_factory=list)
    proposal_generation: int = 0
    sim: SimState | None = None
    trace: list[StepEvent] = dc_field(default_factory=list)
    cursor: int = 0
    approvals: int = 0
    last_error: str | None = None

    def __post_init__(self):
        self._recompile()

    # -- helpers -----------------------------------------------------------

    def _recompile(self) -> None:
        self.targets = select_targets(self.field, self.threshold)
        self.task = compile_task(self.field, self.targets, self.problem_cfg)
        self._draft_state = self.task.init

    def _guard(self, event: str) -> None:
        if not event_allowed(event, self.trust, self.phase):
            raise IllegalPhase(
                f"{event} is not allowed in phase {self.phase.value} at trust {self.trust.value}"
            )

    def _clear_mission_artifacts(self) -> None:
        self.draft.clear()
        self._draft_state = self.task.init
        self.proposal = None
        self.committed = None
        self.partial_commit = False
        self.validation = None
        self.sim = None
        self.trace = []
        self.cursor = 0

    def _record_error(self, exc: Exception) -> None:
        self.last_error = f"{type(exc).__name__}: {exc}"

    # -- configuration events ---------------------------------------------

    def set_trust_level(self, level: TrustLevel) -> "Session":
        self._guard("set_trust_level")
        self.trust = level
        self._clear_mission_artifacts()
        self.phase = Phase.IDLE
        return self

    def configure(
        self,
        *,
        weed_map: WeedMap | None = None,
        blocked=None,
        home: int | None = None,
        row_axis: RowAxis | None = None,
        threshold: float | None = None,
        problem_cfg: WeedingProblemConfig | None = None,
    ) -> "Session":
        """Swap the map or target selection; only between missions."""
        self._guard("configure")
        fm = self.field
        self.field = FieldModel(
            map=weed_map if weed_map is not None else fm.map,
            row_axis=row_axis if row_axis is not None else fm.row_axis,
            blocked=frozenset(blocked) if blocked is not None else fm.blocked,
            home=home if home is not None else fm.home,
        )
        if threshold is not None:
            self.threshold = threshold
        if problem_cfg is not None:
            self.problem_cfg = problem_cfg
        self._recompile()
        self._clear_mission_artifacts()
        self.phase = Phase.IDLE
        return self

    # -- low-trust drafting -------------------------------------------------

    def append_action(self, action: str) -> "Session":
        self._guard("append_action")
        name = normalize_action_name(action)
        idx = self.task.action_index.get(name)
        if idx is None:
            raise ForeignAction(f"{name} is not an action of this mission")
        act = self.task.actions[idx]
        if not applicable(act, self._draft_state):
            raise PreconditionUnsatisfied(
                name, unsatisfied_preconditions(self.task, act, self._draft_state)
            )
        self.draft.append(PlanStep(idx, name, act.cost))
        self._draft_state = apply_action(act, self._draft_state)
        self.phase = Phase.DRAFTING
        return self

    def undo_last(self) -> "Session":
        self._guard("undo_last")
        if not self.draft:
            raise EmptyDraft("draft is empty")
        self.draft.pop()
        state = self.task.init
        for step in self.draft:
            state = apply_action(resolve_step(self.task, step), state)
        self._draft_state = state
        return self

    def draft_plan(self) -> Plan:
        steps = tuple(self.draft)
        return Plan(steps, sum((s.cost for s in steps), Fraction(0)))

    def commit_draft(self, partial: bool = False) -> "Session":
        self._guard("commit_draft")
        candidate = self.draft_plan()
        report = validate_plan(self.task, candidate)
        if not report.steps_ok:  # appends are checked, so this is defensive
            raise AutonomyError("draft no longer validates step-by-step")
        if not report.valid and not partial:
            raise GoalNotSatisfied(report.missing_goals)
        self.committed = candidate
        self.partial_commit = not report.valid
        self.validation = report
        self.phase = Phase.COMMITTED
        self.approvals += 1
        return self

    # -- partial-trust proposal loop ----------------------------------------

    def propose(self) -> "Session":
        self._guard("propose")
        try:
            self.proposal = run_planner(self.task, self.search_cfg)
        except PlannerError as exc:
            self._record_error(exc)
            self.phase = Phase.IDLE
            raise
        self.proposal_generation += 1
        self.phase = Phase.PROPOSED
        return self

    def challenge(self, query: ContrastiveQuery | str) -> "Session":
        self._guard("challenge")
        if isinstance(query, str):
            query = parse_foil(query)
        assert self.proposal is not None
        try:
            explanation = run_explain(self.task, self.proposal, query, self.search_cfg)
        except (ExplainError, PlannerError) as exc:
            self._record_error(exc)
            raise
        self.challenge_log.append(
            ChallengeRecord(query, explanation, generation=self.proposal_generation)
        )
        self.phase = Phase.CHALLENGING
        return self

    def resolve(self, decision: str, index: int | None = None) -> "Session":
        self._guard("resolve")
        decision = decision.lower()
        if decision == "reject":
            self.proposal = None
            self.phase = Phase.IDLE
            return self
        if decision == "accept":
            assert self.proposal is not None
            self.committed = self.proposal
        elif decision == "adopt":
            if index is None or not 0 <= index < len(self.challenge_log):
                raise FoilIndexInvalid(f"no challenge at index {index}")
            record = self.challenge_log[index]
            if record.generation != self.proposal_generation:
                raise FoilIndexInvalid(f"challenge {index} refers to an earlier proposal")
            if not record.explanation.feasible:
                raise FoilWasInfeasible(describe_query(record.query))
            # adopting a foil adopts its (possibly re-goaled) task as the mission
            self.task = record.explanation.foil_task
            self.committed = record.explanation.foil_plan
        else:
            raise AutonomyError(f"unknown decision {decision!r}")
        report = validate_plan(self.task, self.committed)
        if not report.valid:
            raise AutonomyError("resolved plan unexpectedly fails validation")
        self.validation = report
        self.partial_commit = False
        self.phase = Phase.COMMITTED
        self.approvals += 1
        return self

    # -- execution ------------------------------------------------------------

    def start(self) -> "Session":
        self._guard("start")
        if self.trust is TrustLevel.FULL:
            try:
                self.committed = run_planner(self.task, self.search_cfg)
            except PlannerError as exc:
                self._record_error(exc)
                self.phase = Phase.IDLE
                raise
            report = validate_plan(self.task, self.committed)
            if not report.valid:
                raise AutonomyError("planned mission unexpectedly fails validation")
            self.validation = report
            self.partial_commit = False
        if self.validation is None or not self.validation.steps_ok:
            raise AutonomyError("no validation recorded for the committed plan")
        if not self.validation.valid and not self.partial_commit:
            raise AutonomyError("committed plan does not satisfy the goal")
        self.sim = sim_reset(self.field, self.robot_cfg, self.seed)
        self.trace = []
        self.cursor = 0
        self.phase = Phase.EXECUTING
        return self

    def tick(self) -> StepEvent | None:
        """Advance execution by one plan step; None when there was nothing left."""
        self._guard("tick")
        assert self.committed is not None and self.sim is not None
        if self.cursor >= len(self.committed.steps):
            self.phase = Phase.DONE
            return None
        step = self.committed.steps[self.cursor]
        self.sim, event = sim_step(self.sim, step, self.robot_cfg)
        self.trace.append(event)
        self.cursor += 1
        if self.sim.status is not SimStatus.OK or self.cursor >= len(self.committed.steps):
            self.phase = Phase.DONE
        return event

    def run_to_completion(self) -> list[StepEvent]:
        events = []
        while self.phase is Phase.EXECUTING:
            event = self.tick()
            if event is not None:
                events.append(event)
        return events

    def pause(self) -> "Session":
        self._guard("pause")
        self.phase = Phase.PAUSED
        return self

    def resume(self) -> "Session":
        self._guard("resume")
        self.phase = Phase.EXECUTING
        return self

    def abort(self) -> "Session":
        """Stop in place; the sim keeps the robot where it halted."""
        self._guard("abort")
        self.phase = Phase.ABORTED
        return self

    # -- introspection -----------------------------------------------------

    def legal_actions(self) -> list[str]:
        """Actions applicable from the current draft state (LowTrust palette)."""
        return [
            a.name for a in self.task.actions if applicable(a, self._draft_state)
        ]

    def snapshot(self) -> dict:
        m = self.field.map
        return {
            "schema_version": "1",
            "session_id": self.id,
            "phase": self.phase.value,
            "trust": self.trust.value,
            "threshold": self.threshold,
            "seed": self.seed,
            "search_mode": self.search_cfg.mode.value,
            "map": {
                "width": m.width,
                "height": m.height,
                "cell_size": m.cell_size,
                "origin_e": m.origin[0],
                "origin_n": m.origin[1],
                "probs": list(m.probs),
            },
            "home": self.field.home,
            "blocked": sorted(self.field.blocked),
            "targets": list(self.targets.targets),
            "draft": plan_payload(self.draft_plan()),
            "proposal": plan_payload(self.proposal),
            "committed": plan_payload(self.committed),
            "partial_commit": self.partial_commit,
            "validation": validation_payload(self.validation),
            "challenges": [rec.to_payload() for rec in self.challenge_log],
            "proposal_generation": self.proposal_generation,
            "legal_actions": (
                self.legal_actions()
                if self.trust is TrustLevel.LOW and self.phase in (Phase.IDLE, Phase.DRAFTING)
                else None
            ),
            "cursor": self.cursor,
            "approvals": self.approvals,
            "sim": self.sim.snapshot() if self.sim else None,
            "metrics": metrics_of(self.sim).to_obj() if self.sim else None,
            "last_error": self.last_error,
        }


# -- session manager and event log -------------------------------------------


def _field_from_payload(payload: dict) -> FieldModel:
    doc = payload.get("map")
    if doc is None:
        raise ValueError("create_session payload needs a 'map'")
    if isinstance(doc, str):
        from .field import MapFormat, load_weed_map

        weed_map = load_weed_map(doc, MapFormat.GRID_CSV)
    else:
        from .field import MapFormat, load_weed_map

        weed_map = load_weed_map(json.dumps(doc), MapFormat.GRID_JSON)
    axis = RowAxis(payload.get("row_axis", "by_row"))
    return FieldModel(
        map=weed_map,
        row_axis=axis,
        blocked=cells_from_spec(payload.get("blocked", ())),
        home=int(payload.get("home", 0)),
    )


def session_from_payload(sid: str, payload: dict) -> Session:
    field_model = _field_from_payload(payload)
    problem_cfg = WeedingProblemConfig(
        weed_cost=as_cost(payload.get("weed_cost", 1)),
        move_cost_per_cell=as_cost(payload.get("move_cost", 1)),
        require_return_home=bool(payload.get("return_home", False)),
    )
    search_cfg = SearchConfig(
        mode=SearchMode(payload.get("search_mode", "optimal")),
        node_limit=int(payload.get("node_limit", SearchConfig().node_limit)),
        time_limit=float(payload.get("time_limit", SearchConfig().time_limit)),
    )
    robot_kwargs = {
        k: payload[k]
        for k in (
            "mass",
            "speed",
            "battery_capacity",
            "energy_per_move",
            "energy_per_weed",
            "p_kill",
            "p_crop_damage",
        )
        if k in payload
    }
    return Session(
        id=sid,
        field=field_model,
        threshold=float(payload.get("threshold", 0.5)),
        problem_cfg=problem_cfg,
        search_cfg=search_cfg,
        robot_cfg=RobotConfig(**robot_kwargs),
        seed=int(payload.get("seed", 0)),
        trust=TrustLevel(payload.get("trust", "low")),
    )


class SessionManager:
    """Owns sessions, applies events in order, persists an append-only log."""

    def __init__(self, store_path: str | Path | None = None):
        self.sessions: dict[str, Session] = {}
        self._next_id = 1
        self.store_path = Path(store_path) if store_path else None
        if self.store_path and self.store_path.exists():
            self._replay(self.store_path)

    def _log(self, sid: str, event: str, payload: dict) -> None:
        if self.store_path is None:
            return
        line = json.dumps({"session": sid, "event": event, "payload": payload}, sort_keys=True)
        with self.store_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def _replay(self, path: Path) -> None:
        for raw in path.read_text(encoding="utf-8").splitlines():
            if not raw.strip():
                continue
            entry = json.loads(raw)
            sid, event, payload = entry["session"], entry["event"], entry["payload"]
            if event == "create_session":
                self._create(sid, payload)
            else:
                self._dispatch(self.get(sid), event, payload)

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise UnknownSession(f"no session {sid!r}")
        return session

    def _create(self, sid: str, payload: dict) -> Session:
        session = session_from_payload(sid, payload)
        self.sessions[sid] = session
        n = int(sid[1:]) if sid.startswith("s") and sid[1:].isdigit() else 0
        self._next_id = max(self._next_id, n + 1)
        return session

    def create_session(self, payload: dict) -> Session:
        sid = f"s{self._next_id}"
        self._next_id += 1
        session = self._create(sid, payload)
        self._log(sid, "create_session", payload)
        return session

    def _dispatch(self, session: Session, event: str, payload: dict) -> Any:
        if event == "set_trust_level":
            return session.set_trust_level(TrustLevel(payload["level"]))
        if event == "configure":
            kwargs: dict[str, Any] = {}
            if "map" in payload:
                kwargs["weed_map"] = _field_from_payload(payload).map
            if "blocked" in payload:
                kwargs["blocked"] = cells_from_spec(payload["blocked"])
            if "home" in payload:
                kwargs["home"] = int(payload["home"])
            if "threshold" in payload:
                kwargs["threshold"] = float(payload["threshold"])
            return session.configure(**kwargs)
        if event == "append_action":
            return session.append_action(payload["action"])
        if event == "undo_last":
            return session.undo_last()
        if event == "commit_draft":
            return session.commit_draft(partial=bool(payload.get("partial", False)))
        if event == "propose":
            return session.propose()
        if event == "challenge":
            return session.challenge(payload["foil"])
        if event == "resolve":
            return session.resolve(payload["decision"], payload.get("index"))
        if event == "start":
            return session.start()
        if event == "pause":
            return session.pause()
        if event == "resume":
            return session.resume()
        if event == "abort":
            return session.abort()
        if event == "tick":
            return session.tick()
        raise AutonomyError(f"unknown event {event!r}")

    def apply(self, sid: str, event: str, payload: dict | None = None) -> Any:
        payload = payload or {}
        session = self.get(sid)
        result = self._dispatch(session, event, payload)
        self._log(sid, event, payload)
        return result
