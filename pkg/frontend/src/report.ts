// Report explorer: ranked table with a layer filter, plus the endorse
// button. The layer view re-renders from the per-layer API endpoint; the
// endorse button posts once and then stays settled (the API treats
// duplicates as no-ops anyway).

import type { PlazaApi } from "./api.js";
import type { LayerEntry, ReportDoc } from "./types.js";
import { hasEndorsed, layerNames } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  text?: string,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (text !== undefined) node.textContent = text;
  if (className) node.className = className;
  return node;
}

export function renderReportTable(
  container: HTMLElement,
  report: ReportDoc,
  statementText: Map<string, string>,
): void {
  const doc = container.ownerDocument;
  const table = el(doc, "table", undefined, "report-table");
  const head = el(doc, "tr");
  for (const column of ["#", "statement", "consensus", "bridging", "per-group agreement"]) {
    head.appendChild(el(doc, "th", column));
  }
  table.appendChild(head);
  report.entries.forEach((entry, i) => {
    const row = el(doc, "tr");
    row.setAttribute("data-statement", entry.statement);
    row.appendChild(el(doc, "td", String(i + 1)));
    row.appendChild(el(doc, "td", statementText.get(entry.statement) ?? entry.statement));
    row.appendChild(el(doc, "td", entry.gic.score.toFixed(3)));
    row.appendChild(el(doc, "td", entry.intercept.toFixed(3)));
    const rates = Object.entries(entry.gic.per_group)
      .map(([g, rate]) => `g${g}: ${(rate.smoothed_rate * 100).toFixed(0)}%`)
      .join("  ");
    row.appendChild(el(doc, "td", rates));
    table.appendChild(row);
  });
  container.replaceChildren(table);
}

export function renderLayerTable(container: HTMLElement, entries: LayerEntry[]): void {
  const doc = container.ownerDocument;
  const table = el(doc, "table", undefined, "report-table layer-table");
  const head = el(doc, "tr");
  for (const column of ["statement", "agrees", "disagrees", "passes", "seen"]) {
    head.appendChild(el(doc, "th", column));
  }
  table.appendChild(head);
  for (const entry of entries) {
    const row = el(doc, "tr");
    row.setAttribute("data-statement", entry.statement);
    row.appendChild(el(doc, "td", entry.statement));
    row.appendChild(el(doc, "td", String(entry.agrees)));
    row.appendChild(el(doc, "td", String(entry.disagrees)));
    row.appendChild(el(doc, "td", String(entry.passes)));
    row.appendChild(el(doc, "td", String(entry.seen)));
    table.appendChild(row);
  }
  container.replaceChildren(table);
}

export class ReportExplorer {
  private activeLayer: string | null = null;
  private endorsing = false;

  constructor(
    private readonly api: PlazaApi,
    private readonly deliberationId: string,
    private readonly participantId: string,
    private readonly tableHost: HTMLElement,
    private readonly filterHost: HTMLElement,
    private readonly endorseButton: HTMLButtonElement,
  ) {}

  render(report: ReportDoc, reportId: string, statementText: Map<string, string>): void {
    this.renderFilters(report, reportId, statementText);
    if (this.activeLayer === null) {
      renderReportTable(this.tableHost, report, statementText);
    }
    this.renderEndorse(report, reportId);
  }

  private renderFilters(
    report: ReportDoc,
    reportId: string,
    statementText: Map<string, string>,
  ): void {
    const doc = this.filterHost.ownerDocument;
    const buttons: HTMLButtonElement[] = [];
    const allButton = el(doc, "button", "all layers", "layer-filter");
    allButton.addEventListener("click", () => {
      this.activeLayer = null;
      renderReportTable(this.tableHost, report, statementText);
    });
    buttons.push(allButton);
    for (const layer of layerNames(report)) {
      const button = el(doc, "button", layer, "layer-filter");
      button.setAttribute("data-layer", layer);
      button.addEventListener("click", async () => {
        this.activeLayer = layer;
        const response = await this.api.reportLayer(this.deliberationId, layer);
        renderLayerTable(this.tableHost, response.entries);
      });
      buttons.push(button);
    }
    this.filterHost.replaceChildren(...buttons);
  }

  private renderEndorse(report: ReportDoc, reportId: string): void {
    const endorsed = hasEndorsed(report, this.participantId);
    this.endorseButton.textContent = endorsed
      ? `endorsed (${report.endorsements.length})`
      : "endorse this report";
    this.endorseButton.disabled = endorsed;
    this.endorseButton.onclick = async () => {
      if (this.endorsing || this.endorseButton.disabled) {
        return;
      }
      this.endorsing = true;
      this.endorseButton.disabled = true;
      try {
        const response = await this.api.endorse(reportId, this.participantId);
        this.endorseButton.textContent = `endorsed (${response.endorsements})`;
      } finally {
        this.endorsing = false;
      }
    };
  }
}
