"""Activation proposals, the deliberation state machine, and write guards.

A deliberation only ever moves forward: Proposed -> Active -> Concluded ->
Published. Statements and votes are accepted in the half-open window
[activated_at, concludes_at) while the state is Active; everything else is
rejected with a reason rather than an exception so callers can surface it.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from .errors import LifecycleViolation, TooEarly, WindowExpired
from .model import Participant, Statement, Vote, VoteMatrix
from .ranking import BridgingConfig

DAY_MS = 24 * 60 * 60 * 1000
HOUR_MS = 60 * 60 * 1000

DEFAULT_DURATION_MS = 7 * DAY_MS
DEFAULT_UPVOTE_THRESHOLD = 25
DEFAULT_UPVOTE_WINDOW_MS = 72 * HOUR_MS


class DeliberationState(str, Enum):
    PROPOSED = "Proposed"
    ACTIVE = "Active"
    CONCLUDED = "Concluded"
    PUBLISHED = "Published"


#: forward-only state order, used for monotonicity checks
STATE_ORDER = {
    DeliberationState.PROPOSED: 0,
    DeliberationState.ACTIVE: 1,
    DeliberationState.CONCLUDED: 2,
    DeliberationState.PUBLISHED: 3,
}


class TransitionEvent(str, Enum):
    ACTIVATE = "Activate"
    CONCLUDE = "Conclude"
    PUBLISH = "Publish"


_LEGAL = {
    (DeliberationState.PROPOSED, TransitionEvent.ACTIVATE): DeliberationState.ACTIVE,
    (DeliberationState.ACTIVE, TransitionEvent.CONCLUDE): DeliberationState.CONCLUDED,
    (DeliberationState.CONCLUDED, TransitionEvent.PUBLISH): DeliberationState.PUBLISHED,
}


@dataclass(frozen=True)
class ActivationProposal:
    id: str
    topic_text: str
    locale: str
    proposed_at: int
    upvoters: frozenset[str] = frozenset()
    threshold: int = DEFAULT_UPVOTE_THRESHOLD
    window_ms: int = DEFAULT_UPVOTE_WINDOW_MS

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")


@dataclass(frozen=True)
class DeliberationConfig:
    bridging: BridgingConfig = field(default_factory=BridgingConfig)
    k_min: int = 2
    k_max: int = 5
    duration_ms: int = DEFAULT_DURATION_MS
    cluster_seed: int = 0
    manual_conclude: bool = False
    invites_per_category: int = 1
    theme_threshold: float = 0.5

    def to_dict(self) -> dict:
        return {
            "bridging": self.bridging.to_dict(),
            "k_min": self.k_min,
            "k_max": self.k_max,
            "duration_ms": self.duration_ms,
            "cluster_seed": self.cluster_seed,
            "manual_conclude": self.manual_conclude,
            "invites_per_category": self.invites_per_category,
            "theme_threshold": self.theme_threshold,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DeliberationConfig":
        kwargs = {k: data[k] for k in cls().to_dict() if k in data}
        if "bridging" in kwargs:
            kwargs["bridging"] = BridgingConfig.from_dict(kwargs["bridging"])
        return cls(**kwargs)


def default_prompt(topic_text: str) -> str:
    return f"What are your thoughts on {topic_text} topic?"


@dataclass(frozen=True)
class Deliberation:
    id: str
    prompt: str
    locale: str
    config: DeliberationConfig
    state: DeliberationState = DeliberationState.PROPOSED
    activated_at: int | None = None
    concludes_at: int | None = None
    participants: Mapping[str, Participant] = field(default_factory=dict)
    statements: Mapping[str, Statement] = field(default_factory=dict)
    matrix: VoteMatrix = field(default_factory=VoteMatrix.empty)


def record_upvote(
    proposal: ActivationProposal, account: str, now: int
) -> tuple[ActivationProposal, bool]:
    """Add an upvote; returns (proposal, activation_triggered).

    Upvoters form a set, so re-upvoting is a no-op. The activation flag is
    returned exactly once: on the upvote that crosses the threshold.
    """
    if now > proposal.proposed_at + proposal.window_ms:
        raise WindowExpired(
            f"upvote window for {proposal.id} closed at "
            f"{proposal.proposed_at + proposal.window_ms}"
        )
    if account in proposal.upvoters:
        return proposal, False
    before = len(proposal.upvoters)
    updated = replace(proposal, upvoters=proposal.upvoters | {account})
    crossed = before < proposal.threshold <= len(updated.upvoters)
    return updated, crossed


def transition(
    deliberation: Deliberation, event: TransitionEvent, now: int
) -> Deliberation:
    """Advance the state machine; timestamps recorded, other fields kept."""
    key = (deliberation.state, event)
    if key not in _LEGAL:
        raise LifecycleViolation(
            f"cannot {event.value} a {deliberation.state.value} deliberation"
        )
    if event is TransitionEvent.ACTIVATE:
        return replace(
            deliberation,
            state=DeliberationState.ACTIVE,
            activated_at=now,
            concludes_at=now + deliberation.config.duration_ms,
        )
    if event is TransitionEvent.CONCLUDE:
        if now < (deliberation.concludes_at or 0) and not deliberation.config.manual_conclude:
            raise TooEarly(
                f"deliberation {deliberation.id} concludes at {deliberation.concludes_at}"
            )
        return replace(deliberation, state=DeliberationState.CONCLUDED)
    return replace(deliberation, state=DeliberationState.PUBLISHED)


REJECT_STATE_NOT_ACTIVE = "StateNotActive"
REJECT_EXPIRED = "Expired"


@dataclass(frozen=True)
class WriteDecision:
    accepted: bool
    reason: str | None = None


def guard_write(
    deliberation: Deliberation, write: Statement | Vote, now: int
) -> WriteDecision:
    """Accept a statement or vote iff the deliberation is live right now."""
    if deliberation.state is not DeliberationState.ACTIVE:
        return WriteDecision(False, REJECT_STATE_NOT_ACTIVE)
    if deliberation.concludes_at is not None and now >= deliberation.concludes_at:
        return WriteDecision(False, REJECT_EXPIRED)
    return WriteDecision(True)
