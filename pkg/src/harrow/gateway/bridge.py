"""Message bridge between clients and sessions.

The wire protocol is a rosbridge-inspired JSON envelope:

    {"op": "call", "id": "7", "service": "propose", "payload": {...}}
    {"op": "reply", "id": "7", "service": "propose", "payload": {...}}
    {"op": "error", "id": "7", "payload": {"code": "...", "message": "..."}}
    {"op": "subscribe" | "unsubscribe", "topic": "/session/s1/state"}
    {"op": "publish", "topic": "...", "payload": {...}}
    {"op": "event", "topic": "...", "payload": {...}}

Topics latch: a new subscriber immediately receives the most recent
message of each topic it joins. Session topics are
``/session/{id}/state``, ``/session/{id}/plan``,
``/session/{id}/telemetry`` and ``/session/{id}/metrics``.

The bridge itself is transport-agnostic and synchronous; the ASGI layer
in :mod:`harrow.gateway.app` pumps messages between it and websockets.
All handling for one process runs on one thread, so events for a session
are totally ordered.
"""

from __future__ import annotations

from collections import deque
from typing import Any, Callable

from .. import autonomy, explain, field, planner
from ..autonomy import Phase, SessionManager
from ..pddl.errors import PddlError
from ..sim import metrics_of

SCHEMA_VERSION = "1"

SERVICES = (
    "create_session",
    "load_map",
    "select_targets",
    "get_state",
    "set_trust_level",
    "append_action",
    "undo_last",
    "commit_draft",
    "propose",
    "challenge",
    "challenge_plan",  # alias kept for clients speaking the older name
    "resolve",
    "start",
    "pause",
    "resume",
    "abort",
)

_ERROR_CODES: tuple[tuple[type, str], ...] = (
    (autonomy.IllegalPhase, "illegal_phase"),
    (autonomy.PreconditionUnsatisfied, "precondition_unsatisfied"),
    (autonomy.EmptyDraft, "empty_draft"),
    (autonomy.GoalNotSatisfied, "goal_not_satisfied"),
    (autonomy.FoilIndexInvalid, "foil_index_invalid"),
    (autonomy.FoilWasInfeasible, "foil_infeasible"),
    (autonomy.UnknownSession, "unknown_session"),
    (explain.UnknownAction, "unknown_action"),
    (explain.UnknownLiteral, "unknown_literal"),
    (explain.LiteralNotInGoal, "literal_not_in_goal"),
    (explain.FoilSyntaxError, "foil_syntax"),
    (planner.NoPlan, "no_plan"),
    (planner.ResourceLimit, "resource_limit"),
    (planner.TargetUnreachable, "target_unreachable"),
    (field.ProbabilityOutOfRange, "probability_out_of_range"),
    (field.DimensionMismatch, "dimension_mismatch"),
    (field.MalformedHeader, "malformed_header"),
    (field.MalformedValue, "malformed_value"),
    (field.FieldError, "field_error"),
    (PddlError, "pddl_error"),  # ForeignAction and parse errors
    (autonomy.AutonomyError, "autonomy_error"),
    (ValueError, "bad_payload"),
    (KeyError, "bad_payload"),
    (TypeError, "bad_payload"),
)


def error_code(exc: Exception) -> str:
    from ..pddl.errors import ForeignAction

    if isinstance(exc, ForeignAction):
        return "foreign_action"
    for etype, code in _ERROR_CODES:
        if isinstance(exc, etype):
            return code
    return "internal_error"


class Outbox:
    """Per-connection outbound buffer with slow-subscriber compaction.

    When the backlog exceeds ``soft_limit``, older topic events collapse
    to the newest one per topic; replies and errors are never dropped.
    """

    def __init__(self, soft_limit: int = 512):
        self.items: deque[dict] = deque()
        self.soft_limit = soft_limit
        self.on_push: Callable[[], None] | None = None

    def push(self, msg: dict) -> None:
        self.items.append(msg)
        if len(self.items) > self.soft_limit:
            self._compact()
        if self.on_push is not None:
            self.on_push()

    def _compact(self) -> None:
        newest: dict[str, dict] = {}
        for m in self.items:
            if m.get("op") == "event":
                newest[m["topic"]] = m
        kept = [
            m
            for m in self.items
            if m.get("op") != "event" or newest.get(m["topic"]) is m
        ]
        self.items = deque(kept)

    def drain(self) -> list[dict]:
        out = list(self.items)
        self.items.clear()
        return out


class Bridge:
    def __init__(self, manager: SessionManager, tick_rate: float = 0.0):
        self.manager = manager
        self.tick_rate = tick_rate
        self.outboxes: dict[str, Outbox] = {}
        self.subs: dict[str, list[str]] = {}  # topic -> conn ids, join order
        self.latched: dict[str, dict] = {}

    # -- connection lifecycle ------------------------------------------------

    def attach(self, conn_id: str) -> Outbox:
        outbox = Outbox()
        self.outboxes[conn_id] = outbox
        return outbox

    def detach(self, conn_id: str) -> None:
        self.outboxes.pop(conn_id, None)
        for conns in self.subs.values():
            if conn_id in conns:
                conns.remove(conn_id)

    # -- pub/sub ---------------------------------------------------------------

    def _topic(self, sid: str, kind: str) -> str:
        return f"/session/{sid}/{kind}"

    def publish(self, topic: str, payload: dict) -> None:
        msg = {"op": "event", "topic": topic, "payload": payload}
        self.latched[topic] = msg
        for conn_id in self.subs.get(topic, ()):
            outbox = self.outboxes.get(conn_id)
            if outbox is not None:
                outbox.push(msg)

    def _publish_state(self, sid: str) -> None:
        self.publish(self._topic(sid, "state"), self.manager.get(sid).snapshot())

    def _publish_plan(self, sid: str) -> None:
        session = self.manager.get(sid)
        plan = session.proposal if session.phase in (Phase.PROPOSED, Phase.CHALLENGING) else session.committed
        payload = autonomy.plan_payload(plan) or {"steps": [], "cost": "0"}
        self.publish(self._topic(sid, "plan"), {"schema_version": SCHEMA_VERSION, **payload})

    def _publish_tick(self, sid: str, event) -> None:
        if event is None:
            return
        session = self.manager.get(sid)
        self.publish(
            self._topic(sid, "telemetry"),
            {"schema_version": SCHEMA_VERSION, **event.to_obj()},
        )
        if session.sim is not None:
            self.publish(
                self._topic(sid, "metrics"),
                {"schema_version": SCHEMA_VERSION, **metrics_of(session.sim).to_obj()},
            )

    # -- inbound handling -------------------------------------------------------

    def handle(self, conn_id: str, msg: Any) -> None:
        outbox = self.outboxes[conn_id]
        if not isinstance(msg, dict):
            outbox.push(_error_msg(None, None, "bad_message", "message must be a JSON object"))
            return
        op = msg.get("op")
        call_id = msg.get("id")
        if op == "subscribe" or op == "unsubscribe":
            topic = msg.get("topic")
            if not isinstance(topic, str) or not topic:
                outbox.push(_error_msg(call_id, None, "bad_topic", "subscribe needs a topic"))
                return
            conns = self.subs.setdefault(topic, [])
            if op == "subscribe":
                if conn_id not in conns:
                    conns.append(conn_id)
                if call_id is not None:
                    outbox.push(_reply_msg(call_id, None, {"subscribed": topic}))
                latched = self.latched.get(topic)
                if latched is not None:
                    outbox.push(latched)
            else:
                if conn_id in conns:
                    conns.remove(conn_id)
                if call_id is not None:
                    outbox.push(_reply_msg(call_id, None, {"unsubscribed": topic}))
            return
        if op == "publish":
            topic = msg.get("topic")
            payload = msg.get("payload")
            if not isinstance(topic, str) or not isinstance(payload, dict):
                outbox.push(_error_msg(call_id, None, "bad_topic", "publish needs topic and payload"))
                return
            self.publish(topic, payload)
            return
        if op == "call":
            self._call(conn_id, outbox, msg)
            return
        outbox.push(
            _error_msg(call_id, None, "bad_op", f"unsupported op {op!r}")
        )

    def _call(self, conn_id: str, outbox: Outbox, msg: dict) -> None:
        call_id = msg.get("id")
        service = msg.get("service")
        payload = msg.get("payload") or {}
        if not isinstance(payload, dict):
            outbox.push(_error_msg(call_id, service, "bad_payload", "payload must be an object"))
            return
        if str(payload.get("schema_version", SCHEMA_VERSION)) != SCHEMA_VERSION:
            outbox.push(
                _error_msg(call_id, service, "unsupported_schema", "this gateway speaks schema 1")
            )
            return
        if service not in SERVICES:
            outbox.push(
                _error_msg(call_id, service, "unknown_service", f"no service {service!r}")
            )
            return
        if service == "challenge_plan":
            service = "challenge"
        try:
            reply = self._dispatch(service, payload)
        except Exception as exc:  # noqa: BLE001 - every error becomes a coded reply
            sid = payload.get("session_id")
            if isinstance(sid, str) and sid in self.manager.sessions:
                self._publish_state(sid)  # phase unchanged, but last_error may have
            outbox.push(_error_msg(call_id, service, error_code(exc), str(exc)))
            return
        outbox.push(_reply_msg(call_id, service, reply))

    def _dispatch(self, service: str, payload: dict) -> dict:
        if service == "create_session":
            session = self.manager.create_session(payload)
            self._publish_state(session.id)
            return {"session_id": session.id, "state": session.snapshot()}

        sid = payload.get("session_id")
        if not isinstance(sid, str):
            raise autonomy.UnknownSession("payload needs a session_id")
        if service == "get_state":
            return {"state": self.manager.get(sid).snapshot()}

        if service == "load_map":
            event_payload = {k: payload[k] for k in ("map", "home", "blocked", "threshold") if k in payload}
            self.manager.apply(sid, "configure", event_payload)
        elif service == "select_targets":
            self.manager.apply(sid, "configure", {"threshold": payload["threshold"]})
        elif service == "set_trust_level":
            self.manager.apply(sid, "set_trust_level", {"level": payload["level"]})
        elif service == "append_action":
            self.manager.apply(sid, "append_action", {"action": payload["action"]})
        elif service == "undo_last":
            self.manager.apply(sid, "undo_last", {})
        elif service == "commit_draft":
            self.manager.apply(sid, "commit_draft", {"partial": bool(payload.get("partial", False))})
        elif service == "propose":
            self.manager.apply(sid, "propose", {})
            self._publish_plan(sid)
        elif service == "challenge":
            self.manager.apply(sid, "challenge", {"foil": payload["foil"]})
        elif service == "resolve":
            event_payload = {"decision": payload["decision"]}
            if "index" in payload:
                event_payload["index"] = payload["index"]
            self.manager.apply(sid, "resolve", event_payload)
            self._publish_plan(sid)
        elif service == "start":
            self.manager.apply(sid, "start", {})
            self._publish_plan(sid)
            if self.tick_rate <= 0:
                # headless mode: run the whole mission now, streaming events
                session = self.manager.get(sid)
                while session.phase is Phase.EXECUTING:
                    event = self.manager.apply(sid, "tick", {})
                    self._publish_tick(sid, event)
        elif service in ("pause", "resume", "abort"):
            self.manager.apply(sid, service, {})
        else:  # pragma: no cover - SERVICES gate keeps this unreachable
            raise ValueError(f"unhandled service {service}")

        self._publish_state(sid)
        reply: dict[str, Any] = {"state": self.manager.get(sid).snapshot()}
        if service == "challenge":
            session = self.manager.get(sid)
            reply["explanation"] = session.challenge_log[-1].to_payload()
        return reply

    # -- timed execution (serve mode) -----------------------------------------

    def tick_all(self) -> None:
        """One pacing-clock tick: advance every executing session one step."""
        for sid, session in list(self.manager.sessions.items()):
            if session.phase is Phase.EXECUTING:
                event = self.manager.apply(sid, "tick", {})
                self._publish_tick(sid, event)
                self._publish_state(sid)


def _reply_msg(call_id, service, payload: dict) -> dict:
    out = {"op": "reply", "payload": {"schema_version": SCHEMA_VERSION, **payload}}
    if call_id is not None:
        out["id"] = call_id
    if service is not None:
        out["service"] = service
    return out


def _error_msg(call_id, service, code: str, message: str) -> dict:
    out = {
        "op": "error",
        "payload": {"schema_version": SCHEMA_VERSION, "code": code, "message": message},
    }
    if call_id is not None:
        out["id"] = call_id
    if service is not None:
        out["service"] = service
    return out
