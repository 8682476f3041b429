// Editable resource: the operator-facing description of each autonomy level.

export interface TrustLevelInfo {
  id: "low" | "partial" | "full";
  label: string;
  description: string;
}

export const TRUST_LEVELS: TrustLevelInfo[] = [
  {
    id: "low",
    label: "Low trust (manual)",
    description:
      "You compose the mission action by action. Every step is checked before it " +
      "joins the draft, and nothing moves until you commit and press start.",
  },
  {
    id: "partial",
    label: "Partial trust (propose & challenge)",
    description:
      "The planner proposes a mission. Challenge it with what-if questions, compare " +
      "the answers, then accept it, adopt an alternative, or reject it.",
  },
  {
    id: "full",
    label: "Full trust (autonomous)",
    description:
      "The planner plans and executes immediately. You watch live telemetry and can " +
      "pause or abort at any time.",
  },
];
