/**
 * Pure view-model builders: API payloads in, display structures out.
 *
 * All state shown to reviewers derives from control-plane responses. These
 * builders reshape and format; they never re-derive gate satisfaction,
 * dimension coverage, or recall values, and diff display works from the
 * server's unified-diff text verbatim.
 */

import { ApiError } from "./api.js";
import type {
  GateStatus,
  NextQuestions,
  PendingQuestion,
  ProjectDetail,
  Proposal,
  Report,
  TwoGateResponse,
} from "./types.js";

// -- project board -------------------------------------------------------------

export type BadgeState = "satisfied" | "stale" | "missing" | "not_approved";

export interface PhaseBadge {
  phase: string;
  required: string[];
  current: boolean;
  satisfied: boolean;
  state: BadgeState;
  missing: { kind: string; reason: string }[];
}

export interface ProjectBoard {
  projectId: string;
  name: string;
  currentPhase: string;
  rungs: PhaseBadge[];
}

export function badgeState(gate: GateStatus): BadgeState {
  if (gate.satisfied) return "satisfied";
  const reasons = gate.missing.map((m) => m.reason);
  if (reasons.includes("stale")) return "stale";
  if (reasons.includes("not_approved")) return "not_approved";
  return "missing";
}

export function buildProjectBoard(detail: ProjectDetail): ProjectBoard {
  return {
    projectId: detail.project_id,
    name: detail.name,
    currentPhase: detail.current_phase,
    rungs: detail.phases.map((rung) => ({
      phase: rung.phase,
      required: rung.required,
      current: rung.current,
      satisfied: rung.gate.satisfied,
      state: badgeState(rung.gate),
      missing: rung.gate.missing,
    })),
  };
}

// -- elicitation ----------------------------------------------------------------

export interface DimensionGroup {
  dimension: string;
  questions: PendingQuestion[];
}

export interface ElicitationView {
  sessionId: string;
  phase: string;
  groups: DimensionGroup[];
  answeredDimensions: string[];
  unansweredDimensions: string[];
  coverageLabel: string;
}

export function buildElicitationView(payload: NextQuestions): ElicitationView {
  const groups = new Map<string, PendingQuestion[]>();
  for (const question of payload.pending) {
    const bucket = groups.get(question.dimension_id) ?? [];
    bucket.push(question);
    groups.set(question.dimension_id, bucket);
  }
  const total = payload.answered_dimensions.length + payload.unanswered_dimensions.length;
  return {
    sessionId: payload.session_id,
    phase: payload.phase,
    groups: [...groups.entries()].map(([dimension, questions]) => ({ dimension, questions })),
    answeredDimensions: payload.answered_dimensions,
    unansweredDimensions: payload.unanswered_dimensions,
    coverageLabel: `${payload.answered_dimensions.length}/${total} dimensions answered`,
  };
}

// -- diff review -----------------------------------------------------------------

export type DiffRowKind = "meta" | "context" | "removed" | "added";

export interface DiffRow {
  kind: DiffRowKind;
  left: string;
  right: string;
}

/**
 * Arrange the server's unified-diff text into side-by-side rows.
 * Pure presentation: line content is shown exactly as it appears in the
 * diff; nothing is re-diffed client-side.
 */
export function buildDiffRows(diffText: string): DiffRow[] {
  const rows: DiffRow[] = [];
  for (const line of diffText.split("\n")) {
    if (line === "") continue;
    if (line.startsWith("+++") || line.startsWith("---") || line.startsWith("@@")) {
      rows.push({ kind: "meta", left: line, right: line });
    } else if (line.startsWith("+")) {
      rows.push({ kind: "added", left: "", right: line.slice(1) });
    } else if (line.startsWith("-")) {
      rows.push({ kind: "removed", left: line.slice(1), right: "" });
    } else {
      const content = line.startsWith(" ") ? line.slice(1) : line;
      rows.push({ kind: "context", left: content, right: content });
    }
  }
  return rows;
}

export interface DiffReview {
  proposalId: string;
  artifactId: string;
  baseVersion: number;
  rationale: string;
  status: Proposal["status"];
  rows: DiffRow[];
  rawDiff: string;
  reloadRequired: boolean;
  notice: string | null;
}

export const STALE_NOTICE = "Artifact changed — reload diff";

export function buildDiffReview(proposal: Proposal, error?: unknown): DiffReview {
  const stale =
    proposal.status === "stale" || (error instanceof ApiError && error.code === "stale_base");
  return {
    proposalId: proposal.proposal_id,
    artifactId: proposal.artifact_id,
    baseVersion: proposal.base_version,
    rationale: proposal.rationale,
    status: proposal.status,
    rows: buildDiffRows(proposal.diff),
    rawDiff: proposal.diff,
    reloadRequired: stale,
    notice: stale ? STALE_NOTICE : null,
  };
}

// -- benchmark dashboard -------------------------------------------------------------

export interface DashboardRow {
  gateLabel: string;
  agent: string;
  cells: string[];
}

export interface BenchDashboard {
  banner: {
    outcome: "proceed_to_gold" | "revisit_design";
    label: string;
    goldSummary: string | null;
  };
  header: string[];
  rows: DashboardRow[];
  tableText: string;
}

export function formatPercent(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

const K_COLUMNS = ["1", "3", "5"];

function reportCells(report: Report): string[] {
  return K_COLUMNS.map((k) => {
    const metric = report.mean_recall[k];
    return metric ? formatPercent(metric.value) : "—";
  });
}

export function buildBenchDashboard(payload: TwoGateResponse): BenchDashboard {
  const rows: DashboardRow[] = [];
  const synth = payload.reports.synthetic;
  const synthLabel = `Synthetic (n=${synth.care.n})`;
  rows.push({ gateLabel: synthLabel, agent: synth.care.agent_name, cells: reportCells(synth.care) });
  rows.push({ gateLabel: "", agent: synth.baseline.agent_name, cells: reportCells(synth.baseline) });
  if (payload.reports.gold) {
    const gold = payload.reports.gold;
    rows.push({
      gateLabel: `Gold (n=${gold.care.n})`,
      agent: gold.care.agent_name,
      cells: reportCells(gold.care),
    });
    rows.push({ gateLabel: "", agent: gold.baseline.agent_name, cells: reportCells(gold.baseline) });
  }
  const outcome = payload.decision.synthetic_outcome;
  const gold = payload.decision.gold_outcome;
  return {
    banner: {
      outcome,
      label: outcome === "proceed_to_gold" ? "Proceed to gold" : "Revisit design",
      goldSummary: gold
        ? `Gold Recall@${gold.primary_metric}: ${formatPercent(gold.care_value.value)} vs ` +
          `${formatPercent(gold.baseline_value.value)} — ` +
          (gold.care_better ? "designed agent ahead" : "baseline ahead")
        : null,
    },
    header: ["Gate", "Agent", ...K_COLUMNS.map((k) => `Recall@${k}`)],
    rows,
    tableText: payload.table,
  };
}
