/**
 * Browser glue: configuration, polling, and event wiring.
 *
 * Gate events are low-frequency, so the app polls the API rather than
 * holding a connection open. Optimistic updates are avoided entirely: every
 * mutation is followed by a re-fetch, and a stale-base rejection surfaces
 * the reload flow instead of retrying blindly.
 */

import { ApiClient, ApiError, isStaleBase } from "./api.js";
import {
  buildBenchDashboard,
  buildDiffReview,
  buildElicitationView,
  buildProjectBoard,
} from "./viewmodels.js";
import {
  renderBenchDashboard,
  renderDiffReview,
  renderElicitation,
  renderProjectBoard,
  escapeHtml,
} from "./render.js";
import type { Proposal } from "./types.js";

const POLL_INTERVAL_MS = 4000;

interface AppConfig {
  baseUrl: string;
  token: string;
  role: string;
  projectId: string;
  sessionId: string | null;
  runs: { care: string; base: string; careGold?: string; baseGold?: string } | null;
}

function loadConfig(): AppConfig {
  const stored = localStorage.getItem("care-ui-config");
  const defaults: AppConfig = {
    baseUrl: "http://127.0.0.1:8756",
    token: "developer-token",
    role: "developer",
    projectId: "",
    sessionId: null,
    runs: null,
  };
  if (!stored) return defaults;
  try {
    return { ...defaults, ...(JSON.parse(stored) as Partial<AppConfig>) };
  } catch {
    return defaults;
  }
}

class App {
  config = loadConfig();
  client = new ApiClient(this.config.baseUrl, this.config.token);
  private timer: number | null = null;

  start(): void {
    this.bindConfigForm();
    this.bindActions();
    void this.refresh();
    this.timer = window.setInterval(() => void this.refresh(), POLL_INTERVAL_MS);
  }

  private bindConfigForm(): void {
    const form = document.querySelector<HTMLFormElement>("#config-form");
    if (!form) return;
    (form.elements.namedItem("baseUrl") as HTMLInputElement).value = this.config.baseUrl;
    (form.elements.namedItem("token") as HTMLInputElement).value = this.config.token;
    (form.elements.namedItem("role") as HTMLSelectElement).value = this.config.role;
    (form.elements.namedItem("projectId") as HTMLInputElement).value = this.config.projectId;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.config.baseUrl = (form.elements.namedItem("baseUrl") as HTMLInputElement).value;
      this.config.token = (form.elements.namedItem("token") as HTMLInputElement).value;
      this.config.role = (form.elements.namedItem("role") as HTMLSelectElement).value;
      this.config.projectId = (form.elements.namedItem("projectId") as HTMLInputElement).value;
      localStorage.setItem("care-ui-config", JSON.stringify(this.config));
      this.client = new ApiClient(this.config.baseUrl, this.config.token);
      void this.refresh();
    });
  }

  private bindActions(): void {
    document.body.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.matches("button.send-answer")) void this.onAnswer(target);
      else if (target.matches("button.accept")) void this.onDecision(target, "accept");
      else if (target.matches("button.reject")) void this.onDecision(target, "reject");
      else if (target.matches("button.edit-resubmit")) void this.onEditResubmit(target);
      else if (target.matches("button.reload-diff")) void this.refresh();
    });
  }

  private async refresh(): Promise<void> {
    if (!this.config.projectId) return;
    try {
      await Promise.all([this.refreshBoard(), this.refreshElicitation(), this.refreshReview(), this.refreshBench()]);
      this.setStatus("");
    } catch (error) {
      this.setStatus(describe(error));
    }
  }

  private async refreshBoard(): Promise<void> {
    const detail = await this.client.getProject(this.config.projectId);
    mount("#board", renderProjectBoard(buildProjectBoard(detail)));
  }

  private async refreshElicitation(): Promise<void> {
    if (!this.config.sessionId) return;
    const payload = await this.client.nextQuestions(this.config.projectId, this.config.sessionId);
    mount("#elicitation", renderElicitation(buildElicitationView(payload)));
  }

  private async refreshReview(): Promise<void> {
    const proposals = await this.client.listProposals(this.config.projectId);
    const pending = proposals.filter((p) => p.status === "pending" || p.status === "stale");
    mount(
      "#review",
      pending.map((p) => renderDiffReview(buildDiffReview(p), this.config.role)).join("") ||
        `<p class="empty">No pending revision proposals.</p>`,
    );
  }

  private async refreshBench(): Promise<void> {
    if (!this.config.runs) return;
    const { care, base, careGold, baseGold } = this.config.runs;
    const payload = await this.client.twoGate(care, base, careGold, baseGold);
    mount("#bench", renderBenchDashboard(buildBenchDashboard(payload)));
  }

  private async onAnswer(button: HTMLElement): Promise<void> {
    const entryId = button.dataset.entry;
    const input = document.querySelector<HTMLInputElement>(`input.answer-box[data-entry="${entryId}"]`);
    if (!entryId || !input || !input.value.trim() || !this.config.sessionId) return;
    await this.client.answerQuestion(this.config.projectId, this.config.sessionId, entryId, input.value);
    await this.refreshElicitation();
  }

  private async onDecision(button: HTMLElement, decision: "accept" | "reject"): Promise<void> {
    const proposalId = button.dataset.proposal;
    if (!proposalId) return;
    try {
      await this.client.decideRevision(this.config.projectId, proposalId, decision);
    } catch (error) {
      if (isStaleBase(error)) {
        // Re-render the stale proposal with the reload flow visible.
        const proposals = await this.client.listProposals(this.config.projectId);
        const proposal = proposals.find((p) => p.proposal_id === proposalId);
        if (proposal) {
          mount("#review", renderDiffReview(buildDiffReview(proposal, error), this.config.role));
        }
        return;
      }
      throw error;
    }
    await this.refresh();
  }

  private async onEditResubmit(button: HTMLElement): Promise<void> {
    const proposalId = button.dataset.proposal;
    const artifactId = button.dataset.artifact;
    if (!proposalId || !artifactId) return;
    const feedback = window.prompt("Describe the change to request:");
    if (!feedback) return;
    // Close the current proposal, then have the helper draft a fresh diff.
    await this.client.decideRevision(this.config.projectId, proposalId, "reject");
    await this.client.proposeFeedbackDiff(this.config.projectId, artifactId, feedback);
    await this.refreshReview();
  }

  private setStatus(message: string): void {
    mount("#status", message ? `<p class="error">${escapeHtml(message)}</p>` : "");
  }
}

function mount(selector: string, html: string): void {
  const node = document.querySelector(selector);
  if (node) node.innerHTML = html;
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return String(error);
}

declare global {
  interface Window {
    careApp: App;
  }
}

if (typeof document !== "undefined" && document.querySelector("#board")) {
  window.careApp = new App();
  window.careApp.start();
}

export { App };
