// Mirrors of the HTTP API payloads. The client renders these verbatim and
// never derives rankings of its own.

export type DeliberationState = "Proposed" | "Active" | "Concluded" | "Published";
export type VoteValue = "Agree" | "Disagree" | "Pass";
export type Layer = "Base" | "Expert" | "PoliticalPower" | "AffectedParty" | "Open";

export interface Envelope {
  deliberation_id: string;
  state: DeliberationState;
  snapshot_at: number;
}

export interface DeliberationSummary extends Envelope {
  prompt: string;
  locale: string;
  activated_at: number | null;
  concludes_at: number | null;
  participants: number;
  statements: number;
  votes: number;
}

export interface StatementItem {
  id: string;
  author: string;
  text: string;
  submitted_at: number;
  voted?: boolean;
}

export interface StatementsResponse extends Envelope {
  statements: StatementItem[];
}

export interface MapResponse extends Envelope {
  projections: Record<string, [number, number]>;
  groups: Record<string, number>;
  k: number;
  silhouette: number;
  explained_variance: number[];
}

export interface GroupRate {
  agrees: number;
  seen: number;
  smoothed_rate: number;
}

export interface LayerStats {
  agrees: number;
  disagrees: number;
  passes: number;
}

export interface ReportEntry {
  statement: string;
  gic: { score: number; per_group: Record<string, GroupRate> };
  intercept: number;
  beeswarm_x: number;
  beeswarm_extremity: number;
  per_layer_stats: Record<string, LayerStats>;
}

export interface ReportDoc {
  deliberation: string;
  generated_at: number;
  snapshot: boolean;
  entries: ReportEntry[];
  themes: { id: string; members: string[] }[];
  endorsements: [string, number][];
}

export interface ReportResponse extends Envelope {
  report_id: string;
  report: ReportDoc;
}

export interface LayerEntry {
  statement: string;
  agrees: number;
  disagrees: number;
  passes: number;
  seen: number;
}

export interface LayerResponse extends Envelope {
  report_id: string;
  layer: string;
  entries: LayerEntry[];
}

export interface VoteResponse extends Envelope {
  recorded: boolean;
}

export interface EndorseResponse extends Envelope {
  report_id: string;
  endorsements: number;
  noop: boolean;
}

export interface JoinResponse extends Envelope {
  participant: { id: string; layer: Layer; attributes: Record<string, string>; verified: boolean };
}
