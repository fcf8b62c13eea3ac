// Scripted in-memory backend implementing the same surface as the HTTP
// client: votes update the statement queue, conclusion flips writes to
// errors, and endorsements are idempotent.

import { ApiError, type PlazaApi } from "../src/api.js";
import type {
  DeliberationState,
  DeliberationSummary,
  EndorseResponse,
  JoinResponse,
  Layer,
  LayerEntry,
  LayerResponse,
  MapResponse,
  ReportDoc,
  ReportResponse,
  StatementItem,
  StatementsResponse,
  VoteResponse,
  VoteValue,
} from "../src/types.js";

export function emptyReport(): ReportDoc {
  return {
    deliberation: "d1",
    generated_at: 1,
    snapshot: true,
    entries: [],
    themes: [],
    endorsements: [],
  };
}

export class FakeApi implements PlazaApi {
  state: DeliberationState = "Active";
  statementsList: StatementItem[];
  votes = new Map<string, Map<string, VoteValue>>();
  reportDoc: ReportDoc;
  reportId = "d1-r1";
  endorseCalls = 0;
  voteCalls = 0;
  layerEntries: Record<string, LayerEntry[]> = {};
  projections: Record<string, [number, number]> = {};
  groups: Record<string, number> = {};

  constructor(statements: { id: string; text: string }[], report?: ReportDoc) {
    this.statementsList = statements.map((s) => ({
      id: s.id,
      author: "system",
      text: s.text,
      submitted_at: 0,
    }));
    this.reportDoc = report ?? emptyReport();
  }

  private envelope() {
    return { deliberation_id: "d1", state: this.state, snapshot_at: 99 };
  }

  async deliberation(): Promise<DeliberationSummary> {
    return {
      ...this.envelope(),
      prompt: "What are your thoughts on transit topic?",
      locale: "sf",
      activated_at: 0,
      concludes_at: 10_000,
      participants: 3,
      statements: this.statementsList.length,
      votes: this.voteCalls,
    };
  }

  async join(_id: string, layer: Layer = "Open"): Promise<JoinResponse> {
    return {
      ...this.envelope(),
      participant: { id: "p1", layer, attributes: {}, verified: false },
    };
  }

  async statements(_id: string, participant?: string): Promise<StatementsResponse> {
    const voted = participant ? this.votes.get(participant) : undefined;
    return {
      ...this.envelope(),
      statements: this.statementsList.map((s) => ({
        ...s,
        ...(participant !== undefined ? { voted: voted?.has(s.id) ?? false } : {}),
      })),
    };
  }

  async castVote(
    _id: string,
    participantId: string,
    statementId: string,
    value: VoteValue,
  ): Promise<VoteResponse> {
    if (this.state !== "Active") {
      throw new ApiError(409, "StateNotActive", "deliberation is not live");
    }
    this.voteCalls += 1;
    if (!this.votes.has(participantId)) {
      this.votes.set(participantId, new Map());
    }
    this.votes.get(participantId)!.set(statementId, value);
    return { ...this.envelope(), recorded: true };
  }

  async map(): Promise<MapResponse> {
    return {
      ...this.envelope(),
      projections: this.projections,
      groups: this.groups,
      k: new Set(Object.values(this.groups)).size,
      silhouette: 0.5,
      explained_variance: [1, 0.5],
    };
  }

  async report(): Promise<ReportResponse> {
    return { ...this.envelope(), report_id: this.reportId, report: this.reportDoc };
  }

  async reportLayer(_id: string, layer: string): Promise<LayerResponse> {
    return {
      ...this.envelope(),
      report_id: this.reportId,
      layer,
      entries: this.layerEntries[layer] ?? [],
    };
  }

  async endorse(_reportId: string, participantId: string): Promise<EndorseResponse> {
    this.endorseCalls += 1;
    const already = this.reportDoc.endorsements.some(([pid]) => pid === participantId);
    if (!already) {
      this.reportDoc.endorsements.push([participantId, 123]);
    }
    return {
      ...this.envelope(),
      report_id: this.reportId,
      endorsements: this.reportDoc.endorsements.length,
      noop: already,
    };
  }
}
