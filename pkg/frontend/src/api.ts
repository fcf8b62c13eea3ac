import type {
  DeliberationSummary,
  EndorseResponse,
  JoinResponse,
  Layer,
  LayerResponse,
  MapResponse,
  ReportResponse,
  StatementsResponse,
  VoteResponse,
  VoteValue,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

/** Everything the UI is allowed to know about the backend. */
export interface PlazaApi {
  deliberation(id: string): Promise<DeliberationSummary>;
  join(id: string, layer?: Layer): Promise<JoinResponse>;
  statements(id: string, participant?: string): Promise<StatementsResponse>;
  castVote(
    id: string,
    participantId: string,
    statementId: string,
    value: VoteValue,
  ): Promise<VoteResponse>;
  map(id: string): Promise<MapResponse>;
  report(id: string): Promise<ReportResponse>;
  reportLayer(id: string, layer: string): Promise<LayerResponse>;
  endorse(reportId: string, participantId: string): Promise<EndorseResponse>;
}

export class HttpApi implements PlazaApi {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const doc = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, doc.error ?? "Unknown", doc.detail ?? "");
    }
    return doc as T;
  }

  deliberation(id: string) {
    return this.request<DeliberationSummary>("GET", `/deliberations/${id}`);
  }

  join(id: string, layer: Layer = "Open") {
    return this.request<JoinResponse>("POST", `/deliberations/${id}/participants`, { layer });
  }

  statements(id: string, participant?: string) {
    const query = participant ? `?participant=${encodeURIComponent(participant)}` : "";
    return this.request<StatementsResponse>("GET", `/deliberations/${id}/statements${query}`);
  }

  castVote(id: string, participantId: string, statementId: string, value: VoteValue) {
    return this.request<VoteResponse>("POST", `/deliberations/${id}/votes`, {
      participant_id: participantId,
      statement_id: statementId,
      value,
    });
  }

  map(id: string) {
    return this.request<MapResponse>("GET", `/deliberations/${id}/map`);
  }

  report(id: string) {
    return this.request<ReportResponse>("GET", `/deliberations/${id}/report`);
  }

  reportLayer(id: string, layer: string) {
    return this.request<LayerResponse>("GET", `/deliberations/${id}/report/layers/${layer}`);
  }

  endorse(reportId: string, participantId: string) {
    return this.request<EndorseResponse>("POST", `/reports/${reportId}/endorse`, {
      participant_id: participantId,
    });
  }
}
