/**
 * Round-trip tests against a live local control plane (see global-setup).
 *
 * These cover the review flows end to end: dual-role approval flipping the
 * gate badge, elicitation coverage mirroring the server, the stale-base
 * reload flow during diff review, edit-and-resubmit, and the two-gate
 * dashboard rendering published fixture values served by the API.
 */

import { beforeAll, describe, expect, inject, it } from "vitest";

import { ApiClient, ApiError, isStaleBase } from "../src/api.js";
import {
  STALE_NOTICE,
  buildBenchDashboard,
  buildDiffReview,
  buildElicitationView,
  buildProjectBoard,
} from "../src/viewmodels.js";
import { renderBenchDashboard, renderProjectBoard } from "../src/render.js";
import type { Report } from "../src/types.js";

let base: string;
let sme: ApiClient;
let developer: ApiClient;
let helper: ApiClient;

beforeAll(() => {
  base = inject("apiBase");
  sme = new ApiClient(base, "sme-token");
  developer = new ApiClient(base, "developer-token");
  helper = new ApiClient(base, "helper-token");
});

const SCOPE = "kind: scope_spec\nphase: P1_scope\nversion: 1\n\n# Scope\n\n- helps analysts\n";

function uniqueId(prefix: string): string {
  return `${prefix}-${Date.now()}-${Math.floor(Math.random() * 10000)}`;
}

describe("gate badge flow", () => {
  it("sme then developer approval flips the badge to satisfied", async () => {
    const projectId = uniqueId("ui-gate");
    await developer.createProject(projectId, "UI gate demo");
    const artifact = await helper.createArtifact(projectId, "P1_scope", "scope_spec", SCOPE);

    let board = buildProjectBoard(await sme.getProject(projectId));
    expect(board.rungs[0]?.state).toBe("not_approved");

    await sme.approve(projectId, artifact.artifact_id, 1, "approve");
    board = buildProjectBoard(await sme.getProject(projectId));
    expect(board.rungs[0]?.satisfied).toBe(false); // one role is not a quorum

    await developer.approve(projectId, artifact.artifact_id, 1, "approve");
    board = buildProjectBoard(await sme.getProject(projectId));
    expect(board.rungs[0]?.satisfied).toBe(true);
    expect(board.rungs[0]?.state).toBe("satisfied");
    expect(renderProjectBoard(board)).toContain("gate-satisfied");
  });

  it("the helper token cannot approve; the API refuses", async () => {
    const projectId = uniqueId("ui-helper");
    await developer.createProject(projectId);
    const artifact = await helper.createArtifact(projectId, "P1_scope", "scope_spec", SCOPE);
    try {
      await helper.approve(projectId, artifact.artifact_id, 1, "approve");
      expect.unreachable("helper approval must be rejected");
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).code).toBe("helper_agent_cannot_approve");
      expect((error as ApiError).status).toBe(403);
    }
  });
});

describe("elicitation flow", () => {
  it("answers update the server-computed coverage the view mirrors", async () => {
    const projectId = uniqueId("ui-elicit");
    await developer.createProject(projectId);
    const session = await sme.createSession(projectId, "P2_2_context");
    let payload = await sme.nextQuestions(projectId, session.session_id);
    let view = buildElicitationView(payload);
    expect(view.unansweredDimensions.length).toBeGreaterThanOrEqual(4);
    expect(view.groups.length).toBe(payload.unanswered_dimensions.length);

    const first = payload.pending[0]!;
    await sme.answerQuestion(projectId, session.session_id, first.entry_id, "metadata search only");
    payload = await sme.nextQuestions(projectId, session.session_id);
    view = buildElicitationView(payload);
    expect(view.answeredDimensions).toContain(first.dimension_id);
    expect(view.unansweredDimensions).not.toContain(first.dimension_id);
    expect(view.unansweredDimensions).toEqual(payload.unanswered_dimensions);
  });
});

describe("diff review flow", () => {
  it("stale base during review surfaces the reload flow", async () => {
    const projectId = uniqueId("ui-stale");
    await developer.createProject(projectId);
    const artifact = await helper.createArtifact(projectId, "P1_scope", "scope_spec", SCOPE);

    const fresh = await sme.getArtifact(projectId, artifact.artifact_id);
    const content = fresh.content ?? "";
    const diffA = unifiedAppend(content, "- reviewed by ops\n");
    const diffB = unifiedAppend(content, "- reviewed by science\n");
    const proposalA = await developer.proposeRevision(projectId, artifact.artifact_id, 1, diffA, "ops pass");
    const proposalB = await sme.proposeRevision(projectId, artifact.artifact_id, 1, diffB, "science pass");

    await developer.decideRevision(projectId, proposalA.proposal_id, "accept");

    let caught: unknown = null;
    try {
      await developer.decideRevision(projectId, proposalB.proposal_id, "accept");
    } catch (error) {
      caught = error;
    }
    expect(isStaleBase(caught)).toBe(true);

    const review = buildDiffReview(proposalB, caught);
    expect(review.reloadRequired).toBe(true);
    expect(review.notice).toBe(STALE_NOTICE);

    // Reloading shows the proposal now closed as stale on the server.
    const proposals = await sme.listProposals(projectId, artifact.artifact_id);
    const reloaded = proposals.find((p) => p.proposal_id === proposalB.proposal_id)!;
    expect(reloaded.status).toBe("stale");
    expect(buildDiffReview(reloaded).reloadRequired).toBe(true);
  });

  it("edit-and-resubmit closes the old proposal and opens a new one", async () => {
    const projectId = uniqueId("ui-edit");
    await developer.createProject(projectId);
    const artifact = await helper.createArtifact(projectId, "P1_scope", "scope_spec", SCOPE);
    const fresh = await sme.getArtifact(projectId, artifact.artifact_id);
    const diff = unifiedAppend(fresh.content ?? "", "- needs narrowing\n");
    const original = await helper.proposeRevision(projectId, artifact.artifact_id, 1, diff, "draft");

    await developer.decideRevision(projectId, original.proposal_id, "reject");
    const resubmitted = await developer.proposeFeedbackDiff(
      projectId,
      artifact.artifact_id,
      "replace: helps analysts => helps Earth scientists",
    );

    const proposals = await sme.listProposals(projectId, artifact.artifact_id);
    const byId = new Map(proposals.map((p) => [p.proposal_id, p.status]));
    expect(byId.get(original.proposal_id)).toBe("rejected");
    expect(byId.get(resubmitted.proposal_id)).toBe("pending");

    const accepted = await developer.decideRevision(projectId, resubmitted.proposal_id, "accept");
    expect(accepted.version).toBe(2);
    expect(accepted.content).toContain("helps Earth scientists");
  });
});

describe("two-gate dashboard", () => {
  function publishedReport(agent: string, gateName: string, n: number, means: Record<string, number>): Report {
    const mean_recall: Report["mean_recall"] = {};
    for (const [k, value] of Object.entries(means)) {
      mean_recall[k] = { exact: `${Math.round(value * 1000)}/1000`, value };
    }
    return {
      agent_name: agent,
      benchmark_name: gateName === "synthetic" ? "synthetic-fixture" : "gold-fixture",
      gate: gateName,
      n,
      mean_recall,
      per_query: [],
    };
  }

  it("renders the published fixture values from server reports", async () => {
    const runs = {
      care: uniqueId("run-care"),
      base: uniqueId("run-base"),
      careGold: uniqueId("run-care-gold"),
      baseGold: uniqueId("run-base-gold"),
    };
    await developer.importReport(
      publishedReport("cmr_care_v1", "synthetic", 621, { "1": 0.717, "3": 0.836, "5": 0.852 }),
      runs.care,
    );
    await developer.importReport(
      publishedReport("cmr_simple", "synthetic", 621, { "1": 0.691, "3": 0.823, "5": 0.824 }),
      runs.base,
    );
    await developer.importReport(
      publishedReport("cmr_care_v1", "gold", 43, { "1": 0.078, "3": 0.226, "5": 0.272 }),
      runs.careGold,
    );
    await developer.importReport(
      publishedReport("cmr_simple", "gold", 43, { "1": 0.097, "3": 0.156, "5": 0.202 }),
      runs.baseGold,
    );

    const payload = await sme.twoGate(runs.care, runs.base, runs.careGold, runs.baseGold);
    const dashboard = buildBenchDashboard(payload);

    expect(dashboard.banner.outcome).toBe("proceed_to_gold");
    expect(dashboard.rows.map((r) => [r.gateLabel, r.agent, ...r.cells])).toEqual([
      ["Synthetic (n=621)", "cmr_care_v1", "71.7%", "83.6%", "85.2%"],
      ["", "cmr_simple", "69.1%", "82.3%", "82.4%"],
      ["Gold (n=43)", "cmr_care_v1", "7.8%", "22.6%", "27.2%"],
      ["", "cmr_simple", "9.7%", "15.6%", "20.2%"],
    ]);
    const html = renderBenchDashboard(dashboard);
    expect(html).toContain("27.2%");
    expect(html).toContain("outcome-proceed_to_gold");
    // The server's rendered table travels with the payload untouched.
    expect(payload.table).toContain("71.7%");
  });
});

/** Build a unified diff appending one line; mirrors the API's diff format. */
function unifiedAppend(content: string, line: string): string {
  const lines = content.split("\n").filter((_l, i, arr) => i < arr.length - 1 || arr[i] !== "");
  const count = lines.length;
  const start = Math.max(1, count - 2);
  const context = lines.slice(start - 1);
  const header = `@@ -${start},${context.length} +${start},${context.length + 1} @@`;
  return [
    "--- a",
    "+++ b",
    header,
    ...context.map((l) => ` ${l}`),
    `+${line.replace(/\n$/, "")}`,
    "",
  ].join("\n");
}
