"""Scripted wire sessions shared by the gateway tests, the golden-file
recorder and the console replay fixture."""

from __future__ import annotations

import json
import re
from pathlib import Path

GOLDEN_PATH = Path(__file__).parent / "data" / "golden_partial_trust.jsonl"

GOLDEN_MAP = {
    "width": 3,
    "height": 1,
    "cell_size": 1.0,
    "origin_e": 0.0,
    "origin_n": 0.0,
    "probs": [0.0, 0.0, 1.0],
}

GOLDEN_SEED = 424242


def partial_trust_script(sid: str) -> list[dict]:
    """The scripted PartialTrust session: create → set_trust → propose →
    challenge → resolve(accept) → start. The create call is first so the
    later messages can reference the session id."""
    return [
        {"op": "subscribe", "id": "sub-state", "topic": f"/session/{sid}/state"},
        {"op": "subscribe", "id": "sub-plan", "topic": f"/session/{sid}/plan"},
        {"op": "subscribe", "id": "sub-telemetry", "topic": f"/session/{sid}/telemetry"},
        {"op": "subscribe", "id": "sub-metrics", "topic": f"/session/{sid}/metrics"},
        {
            "op": "call",
            "id": "2",
            "service": "set_trust_level",
            "payload": {"session_id": sid, "level": "partial"},
        },
        {"op": "call", "id": "3", "service": "propose", "payload": {"session_id": sid}},
        {
            "op": "call",
            "id": "4",
            "service": "challenge",
            "payload": {"session_id": sid, "foil": "forbid (move c2 c1)"},
        },
        {
            "op": "call",
            "id": "5",
            "service": "resolve",
            "payload": {"session_id": sid, "decision": "accept"},
        },
        {"op": "call", "id": "6", "service": "start", "payload": {"session_id": sid}},
    ]


CREATE_MSG = {
    "op": "call",
    "id": "1",
    "service": "create_session",
    "payload": {"map": GOLDEN_MAP, "seed": GOLDEN_SEED, "threshold": 0.5},
}


def run_partial_trust_session(client) -> list[dict]:
    """Drive the script through a live test client; returns every message
    the server sent, in order."""
    received: list[dict] = []
    with client.websocket_connect("/bridge") as ws:
        ws.send_json(CREATE_MSG)
        reply = ws.receive_json()
        received.append(reply)
        sid = reply["payload"]["session_id"]
        expect = {
            "subscribe": 1,  # reply (+1 latched state event for the state topic)
            "set_trust_level": 2,
            "propose": 3,
            "challenge": 2,
            "resolve": 3,
        }
        for msg in partial_trust_script(sid):
            ws.send_json(msg)
            if msg["op"] == "subscribe":
                count = 2 if msg["topic"].endswith("/state") else 1
            elif msg["service"] == "start":
                steps = 3  # the golden plan is move, move, weed
                count = 1 + 2 * steps + 1 + 1  # plan + (telemetry+metrics)*steps + state + reply
            else:
                count = expect[msg["service"]]
            for _ in range(count):
                received.append(ws.receive_json())
    return received


def normalize_transcript(messages: list[dict]) -> list[dict]:
    """Stable form: session ids replaced, nothing else (no timestamps exist)."""
    text = json.dumps(messages, sort_keys=True)
    text = re.sub(r"s\d+", "<SID>", text)
    return json.loads(text)


def load_golden() -> list[dict]:
    return [
        json.loads(line)
        for line in GOLDEN_PATH.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def dump_golden(messages: list[dict]) -> None:
    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    with GOLDEN_PATH.open("w", encoding="utf-8") as fh:
        for msg in normalize_transcript(messages):
            fh.write(json.dumps(msg, sort_keys=True) + "\n")
