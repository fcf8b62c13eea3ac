// Page wiring: join (or resume) a session, drive the vote flow, and keep
// the map and report views fresh on a fixed polling interval.

import { HttpApi } from "./api.js";
import { renderBeeswarm } from "./beeswarm.js";
import { renderOpinionMap } from "./opinionmap.js";
import { ReportExplorer } from "./report.js";
import type { SwarmPoint } from "./viewmodel.js";
import { beeswarmPoints, mapPoints, statementTextById } from "./viewmodel.js";
import { VoteFlow } from "./voteflow.js";

const POLL_MS = 5000;

function requireEl<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const deliberationId = params.get("d") ?? "d1";
  const api = new HttpApi(params.get("api") ?? "");

  // session participant id only; rankings are never cached client-side
  const storageKey = `plaza-participant-${deliberationId}`;
  let participantId = window.localStorage.getItem(storageKey);
  if (!participantId) {
    const joined = await api.join(deliberationId);
    participantId = joined.participant.id;
    window.localStorage.setItem(storageKey, participantId);
  }

  const summary = await api.deliberation(deliberationId);
  requireEl("prompt").textContent = summary.prompt;
  requireEl("state").textContent = summary.state;

  const flow = new VoteFlow(api, deliberationId, participantId);
  const card = requireEl("vote-card");
  const tooltip = requireEl("tooltip");
  const explorer = new ReportExplorer(
    api,
    deliberationId,
    participantId,
    requireEl("report-table"),
    requireEl("layer-filters"),
    requireEl<HTMLButtonElement>("endorse"),
  );

  function renderFlow(): void {
    const state = flow.state;
    if (state.kind === "card") {
      card.replaceChildren();
      const text = document.createElement("p");
      text.className = "statement-text";
      text.textContent = state.statement.text;
      const remaining = document.createElement("p");
      remaining.className = "remaining";
      remaining.textContent = `${state.remaining} left`;
      const buttons = document.createElement("div");
      for (const value of ["Agree", "Disagree", "Pass"] as const) {
        const button = document.createElement("button");
        button.textContent = value;
        button.className = `vote vote-${value.toLowerCase()}`;
        button.addEventListener("click", async () => {
          await flow.submit(value);
          renderFlow();
          void refreshViews();
        });
        buttons.appendChild(button);
      }
      card.append(text, remaining, buttons);
    } else if (state.kind === "done") {
      card.textContent = "All caught up - check back for new statements.";
    } else if (state.kind === "concluded") {
      card.replaceChildren();
      const note = document.createElement("p");
      note.textContent = "This deliberation has concluded.";
      const link = document.createElement("a");
      link.href = "#report";
      link.textContent = "See the final report";
      card.append(note, link);
    } else {
      card.textContent = "Loading...";
    }
  }

  function showTooltip(point: SwarmPoint | null): void {
    if (!point) {
      tooltip.hidden = true;
      return;
    }
    const rates = Object.entries(point.entry.gic.per_group)
      .map(([g, rate]) => `group ${g}: ${(rate.smoothed_rate * 100).toFixed(0)}%`)
      .join(", ");
    tooltip.textContent =
      `${point.statement}  consensus ${point.score.toFixed(3)}  (${rates})`;
    tooltip.hidden = false;
  }

  async function refreshViews(): Promise<void> {
    const [mapResponse, reportResponse, statementsResponse] = await Promise.all([
      api.map(deliberationId),
      api.report(deliberationId),
      api.statements(deliberationId),
    ]);
    requireEl("state").textContent = mapResponse.state;
    renderOpinionMap(requireEl("map"), mapPoints(mapResponse, participantId));
    const texts = statementTextById(statementsResponse.statements);
    renderBeeswarm(requireEl("beeswarm"), beeswarmPoints(reportResponse.report), showTooltip);
    explorer.render(reportResponse.report, reportResponse.report_id, texts);
  }

  await flow.refresh();
  renderFlow();
  await refreshViews();
  window.setInterval(() => {
    void refreshViews();
  }, POLL_MS);
}

void start();
