// One-statement-at-a-time voting: show a card, post the vote, fetch the
// next unvoted statement. A rejected write (concluded or expired
// deliberation) switches to the concluded screen instead of surfacing an
// error.

import { ApiError, type PlazaApi } from "./api.js";
import type { StatementItem, VoteValue } from "./types.js";
import { nextUnvoted, unvotedCount } from "./viewmodel.js";

export type FlowState =
  | { kind: "loading" }
  | { kind: "card"; statement: StatementItem; remaining: number }
  | { kind: "done" }
  | { kind: "concluded"; reportPath: string };

const CONCLUDED_ERRORS = new Set(["StateNotActive", "Expired"]);

export class VoteFlow {
  state: FlowState = { kind: "loading" };

  constructor(
    private readonly api: PlazaApi,
    private readonly deliberationId: string,
    private readonly participantId: string,
  ) {}

  private concluded(): FlowState {
    return {
      kind: "concluded",
      reportPath: `/deliberations/${this.deliberationId}/report`,
    };
  }

  async refresh(): Promise<FlowState> {
    const response = await this.api.statements(this.deliberationId, this.participantId);
    if (response.state !== "Active") {
      this.state = this.concluded();
      return this.state;
    }
    const next = nextUnvoted(response.statements);
    this.state = next
      ? { kind: "card", statement: next, remaining: unvotedCount(response.statements) }
      : { kind: "done" };
    return this.state;
  }

  /** Post the participant's response to the current card and advance. */
  async submit(value: VoteValue): Promise<FlowState> {
    if (this.state.kind !== "card") {
      return this.state;
    }
    try {
      await this.api.castVote(
        this.deliberationId,
        this.participantId,
        this.state.statement.id,
        value,
      );
    } catch (error) {
      if (error instanceof ApiError && CONCLUDED_ERRORS.has(error.errorName)) {
        this.state = this.concluded();
        return this.state;
      }
      throw error;
    }
    return this.refresh();
  }
}
