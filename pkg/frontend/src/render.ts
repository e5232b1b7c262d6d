/**
 * HTML renderers for the view models. Pure string builders so they are
 * testable without a DOM; the app layer mounts the strings and wires events
 * through data attributes.
 */

import type {
  BenchDashboard,
  DiffReview,
  ElicitationView,
  ProjectBoard,
} from "./viewmodels.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const BADGE_GLYPH: Record<string, string> = {
  satisfied: "✓",
  stale: "↻",
  not_approved: "…",
  missing: "∅",
};

export function renderProjectBoard(board: ProjectBoard): string {
  const rungs = board.rungs
    .map((rung) => {
      const classes = ["rung", `gate-${rung.state}`, rung.current ? "current" : ""]
        .filter(Boolean)
        .join(" ");
      const missing = rung.missing
        .map((m) => `<li>${escapeHtml(m.kind)}: ${escapeHtml(m.reason)}</li>`)
        .join("");
      return (
        `<li class="${classes}" data-phase="${escapeHtml(rung.phase)}">` +
        `<span class="badge">${BADGE_GLYPH[rung.state] ?? "?"}</span>` +
        `<span class="phase">${escapeHtml(rung.phase)}</span>` +
        `<span class="state">${escapeHtml(rung.state)}</span>` +
        (missing ? `<ul class="missing">${missing}</ul>` : "") +
        `</li>`
      );
    })
    .join("");
  return (
    `<section class="project-board" data-project="${escapeHtml(board.projectId)}">` +
    `<h2>${escapeHtml(board.name || board.projectId)}</h2>` +
    `<p>Current phase: <strong>${escapeHtml(board.currentPhase)}</strong></p>` +
    `<ol class="ladder">${rungs}</ol>` +
    `</section>`
  );
}

export function renderElicitation(view: ElicitationView): string {
  const groups = view.groups
    .map((group) => {
      const questions = group.questions
        .map(
          (q) =>
            `<li data-entry="${escapeHtml(q.entry_id)}">` +
            `<label>${escapeHtml(q.text)}</label>` +
            `<input type="text" class="answer-box" data-entry="${escapeHtml(q.entry_id)}" ` +
            `placeholder="Your answer" />` +
            `<button class="send-answer" data-entry="${escapeHtml(q.entry_id)}">Answer</button>` +
            `</li>`,
        )
        .join("");
      return (
        `<section class="dimension" data-dimension="${escapeHtml(group.dimension)}">` +
        `<h4>${escapeHtml(group.dimension)}</h4><ul>${questions}</ul></section>`
      );
    })
    .join("");
  const unanswered = view.unansweredDimensions.map((d) => escapeHtml(d)).join(", ");
  return (
    `<section class="elicitation" data-session="${escapeHtml(view.sessionId)}">` +
    `<p class="coverage">${escapeHtml(view.coverageLabel)}` +
    (unanswered ? ` — open: ${unanswered}` : " — all dimensions covered") +
    `</p>${groups}</section>`
  );
}

export function renderDiffReview(review: DiffReview, role: string): string {
  const rows = review.rows
    .map(
      (row) =>
        `<tr class="diff-${row.kind}">` +
        `<td class="left">${escapeHtml(row.left)}</td>` +
        `<td class="right">${escapeHtml(row.right)}</td>` +
        `</tr>`,
    )
    .join("");
  const notice = review.notice
    ? `<p class="notice stale-base">${escapeHtml(review.notice)} ` +
      `<button class="reload-diff" data-proposal="${escapeHtml(review.proposalId)}">Reload</button></p>`
    : "";
  // Acceptance authority is human-only; the control is simply absent for
  // helper tokens (the API would refuse anyway).
  const controls =
    role === "helper_agent"
      ? ""
      : `<div class="verdict">` +
        `<button class="accept" data-proposal="${escapeHtml(review.proposalId)}">Accept</button>` +
        `<button class="reject" data-proposal="${escapeHtml(review.proposalId)}">Reject</button>` +
        `<button class="edit-resubmit" data-proposal="${escapeHtml(review.proposalId)}" ` +
        `data-artifact="${escapeHtml(review.artifactId)}">Edit and resubmit</button>` +
        `</div>`;
  return (
    `<section class="diff-review" data-proposal="${escapeHtml(review.proposalId)}">` +
    notice +
    `<p class="rationale">${escapeHtml(review.rationale)}</p>` +
    `<table class="diff"><tbody>${rows}</tbody></table>` +
    controls +
    `</section>`
  );
}

export function renderBenchDashboard(dashboard: BenchDashboard): string {
  const header = dashboard.header.map((h) => `<th>${escapeHtml(h)}</th>`).join("");
  const rows = dashboard.rows
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.gateLabel)}</td><td>${escapeHtml(row.agent)}</td>` +
        row.cells.map((cell) => `<td class="metric">${escapeHtml(cell)}</td>`).join("") +
        `</tr>`,
    )
    .join("");
  const banner =
    `<p class="banner outcome-${dashboard.banner.outcome}">` +
    `${escapeHtml(dashboard.banner.label)}` +
    (dashboard.banner.goldSummary ? ` — ${escapeHtml(dashboard.banner.goldSummary)}` : "") +
    `</p>`;
  return (
    `<section class="bench-dashboard">` +
    banner +
    `<table class="results"><thead><tr>${header}</tr></thead><tbody>${rows}</tbody></table>` +
    `</section>`
  );
}
