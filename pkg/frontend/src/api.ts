/**
 * Thin typed client for the control-plane API.
 *
 * Every non-2xx response becomes an ApiError carrying the server's stable
 * machine code (for example `stale_base` or `gate_not_satisfied`), so view
 * code can branch on codes instead of status numbers or message text.
 */

import type {
  Artifact,
  NextQuestions,
  ProjectDetail,
  ProjectSummary,
  Proposal,
  Report,
  RunSummary,
  TwoGateResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: Record<string, unknown>;

  constructor(code: string, message: string, status: number, details: Record<string, unknown>) {
    super(message);
    this.code = code;
    this.status = status;
    this.details = details;
  }
}

export function isStaleBase(error: unknown): boolean {
  return error instanceof ApiError && error.code === "stale_base";
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly token: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await response.text();
    let payload: Record<string, unknown> = {};
    if (text) {
      try {
        payload = JSON.parse(text) as Record<string, unknown>;
      } catch {
        payload = { message: text };
      }
    }
    if (!response.ok) {
      throw new ApiError(
        typeof payload.code === "string" ? payload.code : "error",
        typeof payload.message === "string" ? payload.message : response.statusText,
        response.status,
        (payload.details as Record<string, unknown>) ?? {},
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  // -- projects -----------------------------------------------------------

  createProject(projectId: string, name = ""): Promise<ProjectDetail> {
    return this.request("POST", "/projects", { project_id: projectId, name });
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.request("GET", "/projects");
  }

  getProject(projectId: string): Promise<ProjectDetail> {
    return this.request("GET", `/projects/${projectId}`);
  }

  // -- artifacts and revisions ----------------------------------------------

  createArtifact(projectId: string, phase: string, kind: string, content: string): Promise<Artifact> {
    return this.request("POST", `/projects/${projectId}/artifacts`, { phase, kind, content });
  }

  getArtifact(projectId: string, artifactId: string): Promise<Artifact> {
    return this.request("GET", `/projects/${projectId}/artifacts/${artifactId}`);
  }

  listArtifacts(projectId: string): Promise<Artifact[]> {
    return this.request("GET", `/projects/${projectId}/artifacts`);
  }

  listProposals(projectId: string, artifactId?: string): Promise<Proposal[]> {
    const suffix = artifactId ? `?artifact_id=${encodeURIComponent(artifactId)}` : "";
    return this.request("GET", `/projects/${projectId}/revisions${suffix}`);
  }

  proposeRevision(
    projectId: string,
    artifactId: string,
    baseVersion: number,
    diff: string,
    rationale: string,
  ): Promise<Proposal> {
    return this.request("POST", `/projects/${projectId}/revisions`, {
      artifact_id: artifactId,
      base_version: baseVersion,
      diff,
      rationale,
    });
  }

  decideRevision(projectId: string, proposalId: string, decision: "accept" | "reject"): Promise<Artifact> {
    return this.request("POST", `/projects/${projectId}/revisions/${proposalId}/decision`, {
      decision,
    });
  }

  /** Ask the helper agent to turn reviewer feedback into a fresh proposal. */
  proposeFeedbackDiff(projectId: string, artifactId: string, feedback: string): Promise<Proposal> {
    return this.request("POST", `/projects/${projectId}/diff-proposals`, {
      artifact_id: artifactId,
      feedback,
    });
  }

  approve(
    projectId: string,
    artifactId: string,
    version: number,
    verdict: "approve" | "reject",
    note = "",
  ): Promise<{ approval: unknown; artifact_status: string }> {
    return this.request("POST", `/projects/${projectId}/approvals`, {
      artifact_id: artifactId,
      version,
      verdict,
      note,
    });
  }

  // -- gates ------------------------------------------------------------------

  gateStatus(projectId: string, phase?: string): Promise<import("./types.js").GateStatus> {
    const suffix = phase ? `?phase=${encodeURIComponent(phase)}` : "";
    return this.request("GET", `/projects/${projectId}/gate-status${suffix}`);
  }

  advance(projectId: string, idempotencyKey?: string): Promise<unknown> {
    return this.request("POST", `/projects/${projectId}/advance`, {
      idempotency_key: idempotencyKey ?? null,
    });
  }

  revisit(projectId: string, targetPhase: string, idempotencyKey?: string): Promise<unknown> {
    return this.request("POST", `/projects/${projectId}/revisit`, {
      target_phase: targetPhase,
      idempotency_key: idempotencyKey ?? null,
    });
  }

  // -- elicitation ----------------------------------------------------------------

  createSession(projectId: string, phase: string): Promise<{ session_id: string }> {
    return this.request("POST", `/projects/${projectId}/sessions`, { phase });
  }

  nextQuestions(projectId: string, sessionId: string): Promise<NextQuestions> {
    return this.request("GET", `/projects/${projectId}/sessions/${sessionId}/next-questions`);
  }

  answerQuestion(
    projectId: string,
    sessionId: string,
    entryId: string,
    text: string,
  ): Promise<unknown> {
    return this.request("POST", `/projects/${projectId}/sessions/${sessionId}/answers`, {
      entry_id: entryId,
      text,
    });
  }

  draft(projectId: string, sessionId: string): Promise<Record<string, unknown>> {
    return this.request("POST", `/projects/${projectId}/sessions/${sessionId}/draft`, {});
  }

  // -- runs ----------------------------------------------------------------------

  importReport(report: Report, runId?: string): Promise<{ run_id: string }> {
    return this.request("POST", "/runs/import", { report, run_id: runId ?? null });
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request("GET", "/runs");
  }

  twoGate(care: string, base: string, careGold?: string, baseGold?: string): Promise<TwoGateResponse> {
    const params = new URLSearchParams({ care, base });
    if (careGold) params.set("care_gold", careGold);
    if (baseGold) params.set("base_gold", baseGold);
    return this.request("GET", `/runs/two-gate?${params.toString()}`);
  }
}
