// Pure view model. State is derived exclusively from gateway messages plus
// the local pending-input buffer; nothing here computes plans, validates
// actions or advances phases on its own.

import type {
  BridgeMessage,
  MetricsPayload,
  PlanPayload,
  SessionSnapshot,
  TelemetryEvent,
} from "./protocol.js";

export type Connection = "idle" | "connecting" | "open" | "closed";

export interface ViewState {
  connection: Connection;
  sessionId: string | null;
  session: SessionSnapshot | null;
  // the phase the operator sees; set only by /state events
  displayedPhase: string | null;
  phaseLog: string[];
  plan: PlanPayload | null;
  telemetry: TelemetryEvent[];
  metrics: MetricsPayload | null;
  lastError: { code: string; message: string } | null;
  pendingInputs: string[];
}

export const TELEMETRY_KEEP = 200;

export function initialState(): ViewState {
  return {
    connection: "idle",
    sessionId: null,
    session: null,
    displayedPhase: null,
    phaseLog: [],
    plan: null,
    telemetry: [],
    metrics: null,
    lastError: null,
    pendingInputs: [],
  };
}

function isStateTopic(topic: string | undefined): boolean {
  return topic !== undefined && topic.endsWith("/state");
}

function topicKind(topic: string): string {
  const parts = topic.split("/");
  return parts[parts.length - 1] ?? "";
}

export function reduceConnection(state: ViewState, connection: Connection): ViewState {
  return { ...state, connection };
}

export function reduceInput(state: ViewState, description: string): ViewState {
  return { ...state, pendingInputs: [...state.pendingInputs, description] };
}

export function reduceInputSettled(state: ViewState, description: string): ViewState {
  const pendingInputs = [...state.pendingInputs];
  const at = pendingInputs.indexOf(description);
  if (at >= 0) pendingInputs.splice(at, 1);
  return { ...state, pendingInputs };
}

export function reduceSession(state: ViewState, sessionId: string): ViewState {
  return { ...state, sessionId };
}

export function reduce(state: ViewState, msg: BridgeMessage): ViewState {
  if (msg.op === "error") {
    return {
      ...state,
      lastError: { code: msg.payload?.code ?? "error", message: msg.payload?.message ?? "" },
    };
  }
  if (msg.op !== "event" || msg.topic === undefined) {
    return state; // replies never move the displayed phase
  }
  const kind = topicKind(msg.topic);
  if (isStateTopic(msg.topic)) {
    const snapshot = msg.payload as SessionSnapshot;
    const phaseChanged = snapshot.phase !== state.displayedPhase;
    return {
      ...state,
      session: snapshot,
      displayedPhase: snapshot.phase,
      phaseLog: phaseChanged ? [...state.phaseLog, snapshot.phase] : state.phaseLog,
      metrics: snapshot.metrics ?? state.metrics,
      lastError: snapshot.last_error
        ? { code: "session_error", message: snapshot.last_error }
        : state.lastError,
    };
  }
  if (kind === "plan") {
    return { ...state, plan: msg.payload as PlanPayload };
  }
  if (kind === "telemetry") {
    const telemetry = [...state.telemetry, msg.payload as TelemetryEvent];
    if (telemetry.length > TELEMETRY_KEEP) telemetry.splice(0, telemetry.length - TELEMETRY_KEEP);
    return { ...state, telemetry };
  }
  if (kind === "metrics") {
    return { ...state, metrics: msg.payload as MetricsPayload };
  }
  return state;
}

export function activePlan(state: ViewState): PlanPayload | null {
  const s = state.session;
  if (s === null) return state.plan;
  if (s.phase === "proposed" || s.phase === "challenging") return s.proposal ?? state.plan;
  if (s.trust === "low" && (s.phase === "drafting" || s.phase === "idle") && s.draft?.steps.length)
    return s.draft;
  return s.committed ?? state.plan;
}

export function currentStepIndex(state: ViewState): number | null {
  const s = state.session;
  if (s === null || (s.phase !== "executing" && s.phase !== "paused")) return null;
  return s.cursor;
}
