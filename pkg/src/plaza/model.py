"""Domain types and the sparse vote matrix every other module consumes.

Votes are encoded symmetrically (Agree=+1, Disagree=-1, Pass=0) so that
column-centering treats a Pass as neutral. Matrices are immutable
snapshots: mutating operations return new values and never touch the
input, which makes them safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import UnknownParticipant, UnknownStatement

MAX_STATEMENT_CHARS = 2000

SYSTEM_AUTHOR = "system"


class Layer(str, Enum):
    BASE = "Base"
    EXPERT = "Expert"
    POLITICAL_POWER = "PoliticalPower"
    AFFECTED_PARTY = "AffectedParty"
    OPEN = "Open"


#: layers that are filled through categorized invites rather than sampling
INVITE_LAYERS = (Layer.EXPERT, Layer.POLITICAL_POWER, Layer.AFFECTED_PARTY)


class VoteValue(str, Enum):
    AGREE = "Agree"
    DISAGREE = "Disagree"
    PASS = "Pass"


class Moderation(str, Enum):
    VISIBLE = "Visible"
    HIDDEN = "Hidden"


_ENCODING = {VoteValue.AGREE: 1.0, VoteValue.DISAGREE: -1.0, VoteValue.PASS: 0.0}
_DECODING = {v: k for k, v in _ENCODING.items()}


def encode_vote(value: VoteValue) -> float:
    return _ENCODING[value]


def decode_vote(encoded: float) -> VoteValue:
    try:
        return _DECODING[encoded]
    except KeyError:
        raise ValueError(f"not a vote encoding: {encoded!r}") from None


@dataclass(frozen=True)
class Participant:
    id: str
    layer: Layer = Layer.OPEN
    attributes: Mapping[str, str] = field(default_factory=dict)
    verified: bool = False


@dataclass(frozen=True)
class Statement:
    id: str
    author: str  # participant id, or "system" for seeded/anonymous statements
    text: str
    submitted_at: int  # ms since epoch, UTC
    moderation: Moderation = Moderation.VISIBLE

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("statement text must be non-empty after trimming")
        if len(self.text) > MAX_STATEMENT_CHARS:
            raise ValueError(f"statement text exceeds {MAX_STATEMENT_CHARS} chars")


@dataclass(frozen=True)
class Vote:
    participant: str
    statement: str
    value: VoteValue
    cast_at: int


@dataclass(frozen=True)
class StatementStats:
    agrees: int
    disagrees: int
    passes: int

    @property
    def seen(self) -> int:
        return self.agrees + self.disagrees + self.passes


@dataclass(frozen=True)
class VoteMatrix:
    """Sparse participant x statement matrix of encoded votes.

    Row and column orderings are insertion order and are stable; ``entries``
    maps (participant index, statement index) to the numeric encoding.
    """

    participants: tuple[str, ...]
    statements: tuple[str, ...]
    entries: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.participants)) != len(self.participants):
            raise ValueError("duplicate participant ids")
        if len(set(self.statements)) != len(self.statements):
            raise ValueError("duplicate statement ids")
        for (pi, si) in self.entries:
            if not (0 <= pi < len(self.participants)):
                raise ValueError(f"participant index {pi} out of bounds")
            if not (0 <= si < len(self.statements)):
                raise ValueError(f"statement index {si} out of bounds")
        object.__setattr__(self, "_pindex", {p: i for i, p in enumerate(self.participants)})
        object.__setattr__(self, "_sindex", {s: i for i, s in enumerate(self.statements)})

    # -- construction -------------------------------------------------------

    @classmethod
    def empty(cls, participants: Iterable[str] = (), statements: Iterable[str] = ()) -> "VoteMatrix":
        return cls(tuple(participants), tuple(statements), {})

    def with_participant(self, participant_id: str) -> "VoteMatrix":
        if participant_id in self._pindex:
            return self
        return VoteMatrix(self.participants + (participant_id,), self.statements, dict(self.entries))

    def with_statement(self, statement_id: str) -> "VoteMatrix":
        if statement_id in self._sindex:
            return self
        return VoteMatrix(self.participants, self.statements + (statement_id,), dict(self.entries))

    # -- lookups ------------------------------------------------------------

    def participant_index(self, participant_id: str) -> int:
        try:
            return self._pindex[participant_id]
        except KeyError:
            raise UnknownParticipant(participant_id) from None

    def statement_index(self, statement_id: str) -> int:
        try:
            return self._sindex[statement_id]
        except KeyError:
            raise UnknownStatement(statement_id) from None

    def value(self, participant_id: str, statement_id: str) -> float | None:
        key = (self.participant_index(participant_id), self.statement_index(statement_id))
        return self.entries.get(key)

    def row_entries(self, participant_id: str) -> dict[str, float]:
        pi = self.participant_index(participant_id)
        return {self.statements[si]: v for (ri, si), v in self.entries.items() if ri == pi}

    def voting_participants(self) -> tuple[str, ...]:
        """Participants with at least one entry (a Pass counts as a vote)."""
        seen = {pi for (pi, _si) in self.entries}
        return tuple(p for i, p in enumerate(self.participants) if i in seen)

    def voted_statements(self) -> tuple[str, ...]:
        seen = {si for (_pi, si) in self.entries}
        return tuple(s for i, s in enumerate(self.statements) if i in seen)

    # -- numeric views ------------------------------------------------------

    def to_coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Entries as (rows, cols, values) arrays sorted by (row, col)."""
        items = sorted(self.entries.items())
        rows = np.array([k[0] for k, _ in items], dtype=np.int64)
        cols = np.array([k[1] for k, _ in items], dtype=np.int64)
        vals = np.array([v for _, v in items], dtype=np.float64)
        return rows, cols, vals

    def to_dense(self, fill: float = np.nan) -> np.ndarray:
        dense = np.full((len(self.participants), len(self.statements)), fill, dtype=np.float64)
        for (pi, si), v in self.entries.items():
            dense[pi, si] = v
        return dense

    # -- derived matrices ----------------------------------------------------

    def select_statements(self, statement_ids: Iterable[str]) -> "VoteMatrix":
        """Matrix restricted to the given statement columns (order preserved)."""
        keep = set(statement_ids)
        kept = [(i, s) for i, s in enumerate(self.statements) if s in keep]
        remap = {old: new for new, (old, _s) in enumerate(kept)}
        entries = {
            (pi, remap[si]): v for (pi, si), v in self.entries.items() if si in remap
        }
        return VoteMatrix(self.participants, tuple(s for _i, s in kept), entries)

    def select_participants(self, participant_ids: Iterable[str]) -> "VoteMatrix":
        keep = set(participant_ids)
        kept = [(i, p) for i, p in enumerate(self.participants) if p in keep]
        remap = {old: new for new, (old, _p) in enumerate(kept)}
        entries = {
            (remap[pi], si): v for (pi, si), v in self.entries.items() if pi in remap
        }
        return VoteMatrix(tuple(p for _i, p in kept), self.statements, entries)


def apply_vote(matrix: VoteMatrix, vote: Vote) -> VoteMatrix:
    """Return a new matrix with the vote applied; a later vote overwrites."""
    pi = matrix.participant_index(vote.participant)
    si = matrix.statement_index(vote.statement)
    entries = dict(matrix.entries)
    entries[(pi, si)] = encode_vote(vote.value)
    return VoteMatrix(matrix.participants, matrix.statements, entries)


def slice_by_layer(
    matrix: VoteMatrix, participants: Iterable[Participant], layer: Layer
) -> VoteMatrix:
    """Rows of participants in the given layer; statement columns unchanged."""
    by_id = {p.id: p for p in participants}
    keep = [
        p for p in matrix.participants if p in by_id and by_id[p].layer == layer
    ]
    return matrix.select_participants(keep)


def vote_statistics(matrix: VoteMatrix, statement_id: str) -> StatementStats:
    si = matrix.statement_index(statement_id)
    agrees = disagrees = passes = 0
    for (_pi, col), v in matrix.entries.items():
        if col != si:
            continue
        if v > 0:
            agrees += 1
        elif v < 0:
            disagrees += 1
        else:
            passes += 1
    return StatementStats(agrees, disagrees, passes)


# -- vote-event interchange ---------------------------------------------------
#
# Canonical interchange for votes is one JSON object per line with fields
# (type, deliberation_id, participant_id, statement_id, value, timestamp).
# The service event log reuses this schema, adding a sequence number and
# further event types; see docs/SCHEMAS.md.

VOTE_EVENT_TYPE = "VoteCast"


def vote_to_event(deliberation_id: str, vote: Vote) -> dict:
    return {
        "type": VOTE_EVENT_TYPE,
        "deliberation_id": deliberation_id,
        "participant_id": vote.participant,
        "statement_id": vote.statement,
        "value": vote.value.value,
        "timestamp": vote.cast_at,
    }


def vote_from_event(event: Mapping) -> Vote:
    if event.get("type") != VOTE_EVENT_TYPE:
        raise ValueError(f"not a vote event: {event.get('type')!r}")
    return Vote(
        participant=event["participant_id"],
        statement=event["statement_id"],
        value=VoteValue(event["value"]),
        cast_at=int(event["timestamp"]),
    )


def read_vote_events(lines: Iterable[str]) -> Iterator[dict]:
    """Parse line-delimited vote events, skipping blank lines."""
    for line in lines:
        line = line.strip()
        if not line:
            continue
        yield json.loads(line)


def matrix_from_vote_events(events: Iterable[Mapping]) -> VoteMatrix:
    """Build a matrix from vote events; ids are registered in first-seen order.

    Non-vote event types are ignored so a full service log can be fed in
    directly. Later votes for the same (participant, statement) overwrite.
    """
    participants: list[str] = []
    statements: list[str] = []
    pindex: dict[str, int] = {}
    sindex: dict[str, int] = {}
    entries: dict[tuple[int, int], float] = {}
    for event in events:
        if event.get("type") != VOTE_EVENT_TYPE:
            continue
        pid = event["participant_id"]
        sid = event["statement_id"]
        if pid not in pindex:
            pindex[pid] = len(participants)
            participants.append(pid)
        if sid not in sindex:
            sindex[sid] = len(statements)
            statements.append(sid)
        entries[(pindex[pid], sindex[sid])] = encode_vote(VoteValue(event["value"]))
    return VoteMatrix(tuple(participants), tuple(statements), entries)
