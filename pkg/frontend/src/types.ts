/**
 * Payload shapes of the control-plane API consumed by the UI.
 *
 * The UI renders these values verbatim: gate satisfaction, coverage sets,
 * and recall metrics all arrive computed from the server and are never
 * re-derived client-side.
 */

export interface MissingEntry {
  kind: string;
  reason: "no_artifact" | "not_approved" | "stale";
}

export interface GateStatus {
  phase: string;
  required: string[];
  satisfied: boolean;
  missing: MissingEntry[];
}

export interface PhaseRung {
  phase: string;
  required: string[];
  gate: GateStatus;
  current: boolean;
}

export interface ProjectDetail {
  project_id: string;
  name: string;
  current_phase: string;
  history: { from_phase: string; to_phase: string; cause: string; timestamp: string }[];
  phases: PhaseRung[];
}

export interface ProjectSummary {
  project_id: string;
  name: string;
  current_phase: string;
}

export interface ApprovalRecord {
  artifact_id: string;
  version: number;
  role: string;
  actor: string;
  verdict: string;
  note: string;
  timestamp: string;
}

export interface Artifact {
  artifact_id: string;
  project_id: string;
  phase: string;
  kind: string;
  version: number;
  status: string;
  authored_by: string;
  parent_version: number | null;
  approvals: ApprovalRecord[];
  content?: string;
}

export interface Proposal {
  proposal_id: string;
  project_id: string;
  artifact_id: string;
  base_version: number;
  diff: string;
  rationale: string;
  proposed_by: string;
  status: "pending" | "accepted" | "rejected" | "stale";
  result_version: number | null;
}

export interface PendingQuestion {
  entry_id: string;
  dimension_id: string;
  text: string;
}

export interface NextQuestions {
  session_id: string;
  phase: string;
  pending: PendingQuestion[];
  answered_dimensions: string[];
  unanswered_dimensions: string[];
}

export interface MetricValue {
  exact: string;
  value: number;
}

export interface Report {
  agent_name: string;
  benchmark_name: string;
  gate: string;
  n: number;
  mean_recall: Record<string, MetricValue>;
  per_query: unknown[];
  config_hash?: string | null;
  pre_gate?: boolean;
}

export interface GoldOutcome {
  primary_metric: number;
  care_value: MetricValue;
  baseline_value: MetricValue;
  care_better: boolean;
}

export interface TwoGateDecision {
  synthetic_outcome: "proceed_to_gold" | "revisit_design";
  gold_outcome: GoldOutcome | null;
}

export interface TwoGateResponse {
  decision: TwoGateDecision;
  table: string;
  reports: {
    synthetic: { care: Report; baseline: Report };
    gold?: { care: Report; baseline: Report };
  };
}

export interface RunSummary {
  run_id: string;
  agent_name: string;
  benchmark_name: string;
  gate: string;
  n: number;
}
