// Pure projections of API payloads into render-ready shapes. Nothing here
// recomputes scores: every number is lifted from a response field.

import type { MapResponse, ReportDoc, ReportEntry, StatementItem } from "./types.js";

export function nextUnvoted(statements: StatementItem[]): StatementItem | null {
  return statements.find((s) => s.voted === false) ?? null;
}

export function unvotedCount(statements: StatementItem[]): number {
  return statements.filter((s) => s.voted === false).length;
}

export interface MapPoint {
  id: string;
  x: number;
  y: number;
  group: number;
  self: boolean;
}

export function mapPoints(map: MapResponse, selfId: string | null): MapPoint[] {
  return Object.entries(map.projections).map(([id, [x, y]]) => ({
    id,
    x,
    y,
    group: map.groups[id] ?? 0,
    self: id === selfId,
  }));
}

export interface SwarmPoint {
  statement: string;
  x: number;
  extremity: number;
  score: number;
  entry: ReportEntry;
}

export function beeswarmPoints(report: ReportDoc): SwarmPoint[] {
  return report.entries.map((entry) => ({
    statement: entry.statement,
    x: entry.beeswarm_x,
    extremity: entry.beeswarm_extremity,
    score: entry.gic.score,
    entry,
  }));
}

export function layerNames(report: ReportDoc): string[] {
  const names = new Set<string>();
  for (const entry of report.entries) {
    for (const layer of Object.keys(entry.per_layer_stats)) {
      names.add(layer);
    }
  }
  return [...names].sort();
}

export function hasEndorsed(report: ReportDoc, participantId: string): boolean {
  return report.endorsements.some(([pid]) => pid === participantId);
}

export function statementTextById(statements: StatementItem[]): Map<string, string> {
  return new Map(statements.map((s) => [s.id, s.text]));
}
