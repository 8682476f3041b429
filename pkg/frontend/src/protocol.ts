// Wire protocol types mirrored from the gateway's JSON envelope (schema 1).

export type Op = "subscribe" | "unsubscribe" | "publish" | "call" | "reply" | "event" | "error";

export interface BridgeMessage {
  op: Op;
  id?: string;
  service?: string;
  topic?: string;
  payload?: any;
}

export interface PlanPayload {
  steps: string[];
  cost: string;
}

export interface ValidationPayload {
  valid: boolean;
  steps_ok: boolean;
  total_cost: string;
  first_failing_step: number | null;
  unsatisfied: string[];
  missing_goals: string[];
}

export interface ExplanationPayload {
  generation: number;
  query: string;
  original_cost: string;
  feasible: boolean;
  foil_cost: string | null;
  cost_delta: string | null;
  foil_steps: string[] | null;
  infeasible_reason: string | null;
  diff: { op: "keep" | "remove" | "add"; step: string }[];
}

export interface MapPayload {
  width: number;
  height: number;
  cell_size: number;
  origin_e: number;
  origin_n: number;
  probs: number[];
}

export interface SimSnapshot {
  tick: number;
  cell: number;
  battery: number;
  status: string;
  fault_reason: string | null;
  weedy: number[];
  cleared: number[];
  damaged: number[];
}

export interface MetricsPayload {
  weeds_present_initially: number;
  weeds_removed: number;
  crops_damaged: number;
  distance_cells: number;
  energy_used: number;
  max_passes_per_cell: number;
  ticks_elapsed: number;
}

export interface SessionSnapshot {
  schema_version: string;
  session_id: string;
  phase: string;
  trust: "low" | "partial" | "full";
  threshold: number;
  seed: number;
  search_mode: string;
  map: MapPayload;
  home: number;
  blocked: number[];
  targets: number[];
  draft: PlanPayload | null;
  proposal: PlanPayload | null;
  committed: PlanPayload | null;
  partial_commit: boolean;
  validation: ValidationPayload | null;
  challenges: ExplanationPayload[];
  proposal_generation: number;
  legal_actions: string[] | null;
  cursor: number;
  approvals: number;
  sim: SimSnapshot | null;
  metrics: MetricsPayload | null;
  last_error: string | null;
}

export interface TelemetryEvent {
  schema_version: string;
  tick: number;
  action: string;
  result: string;
  robot_cell: number;
  battery: number;
  metrics_delta: Record<string, number>;
  detail: string | null;
}

export function sessionTopic(sid: string, kind: "state" | "plan" | "telemetry" | "metrics"): string {
  return `/session/${sid}/${kind}`;
}
