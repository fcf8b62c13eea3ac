"""Append-only event log and the fold that rebuilds deliberation state.

The log is the ground truth: one JSONL file per deliberation, each line an
event with a per-deliberation sequence number that increases by exactly 1.
The live in-memory record is maintained by folding each event as it is
appended, so replaying a log reproduces the live record bit-for-bit. Vote
events keep the canonical vote-event field names, which means a raw log
can be fed straight into offline ranking.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping

from ..consensus import ConsensusReport, report_from_dict
from ..errors import CorruptLog, NotFound, StorageFailure
from ..lifecycle import (
    ActivationProposal,
    Deliberation,
    DeliberationConfig,
    TransitionEvent,
    default_prompt,
    transition,
)
from ..model import (
    INVITE_LAYERS,
    Layer,
    Moderation,
    Participant,
    Statement,
    apply_vote,
    vote_from_event,
)
from ..panel import InviteBudget

_ID_PATTERN = re.compile(r"^[A-Za-z0-9_-]+$")


class EventKind(str, Enum):
    PROPOSAL_CREATED = "ProposalCreated"
    UPVOTED = "Upvoted"
    ACTIVATED = "Activated"
    PARTICIPANT_JOINED = "ParticipantJoined"
    INVITE_ISSUED = "InviteIssued"
    STATEMENT_SUBMITTED = "StatementSubmitted"
    VOTE_CAST = "VoteCast"
    MODERATION_SET = "ModerationSet"
    CONCLUDED = "Concluded"
    REPORT_GENERATED = "ReportGenerated"
    ENDORSED = "Endorsed"
    PUBLISHED = "Published"


_ENVELOPE_KEYS = ("seq", "type", "deliberation_id", "at")


@dataclass(frozen=True)
class EventRecord:
    sequence_number: int
    deliberation_id: str
    kind: EventKind
    at: int
    payload: Mapping = field(default_factory=dict)

    def to_line(self) -> str:
        doc = {
            "seq": self.sequence_number,
            "type": self.kind.value,
            "deliberation_id": self.deliberation_id,
            "at": self.at,
            **self.payload,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def parse_event_line(line: str) -> EventRecord:
    doc = json.loads(line)
    payload = {k: v for k, v in doc.items() if k not in _ENVELOPE_KEYS}
    return EventRecord(
        sequence_number=int(doc["seq"]),
        deliberation_id=doc["deliberation_id"],
        kind=EventKind(doc["type"]),
        at=int(doc["at"]),
        payload=payload,
    )


def validate_deliberation_id(deliberation_id: str) -> None:
    if not _ID_PATTERN.match(deliberation_id):
        raise ValueError(
            f"deliberation id {deliberation_id!r} must match {_ID_PATTERN.pattern}"
        )


class EventLog:
    """Directory of per-deliberation JSONL logs with durable appends."""

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)

    def _path(self, deliberation_id: str) -> str:
        validate_deliberation_id(deliberation_id)
        return os.path.join(self.directory, f"{deliberation_id}.jsonl")

    def deliberation_ids(self) -> list[str]:
        ids = [
            name[: -len(".jsonl")]
            for name in os.listdir(self.directory)
            if name.endswith(".jsonl")
        ]
        return sorted(ids)

    def exists(self, deliberation_id: str) -> bool:
        return os.path.exists(self._path(deliberation_id))

    def next_sequence(self, deliberation_id: str) -> int:
        events = list(self.read(deliberation_id)) if self.exists(deliberation_id) else []
        return (events[-1].sequence_number + 1) if events else 1

    def append(self, record: EventRecord) -> int:
        """Durable append: the event survives a crash once this returns."""
        path = self._path(record.deliberation_id)
        line = record.to_line()
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"append to {path} failed: {exc}") from exc
        return record.sequence_number

    def read(self, deliberation_id: str) -> Iterator[EventRecord]:
        """Events in order; raises CorruptLog on gaps or undecodable lines."""
        path = self._path(deliberation_id)
        if not os.path.exists(path):
            raise NotFound(deliberation_id)
        expected = 1
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = parse_event_line(line)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise CorruptLog(
                        f"{path}:{line_no}: undecodable event: {exc}",
                        sequence_number=expected,
                    ) from exc
                if record.sequence_number != expected:
                    raise CorruptLog(
                        f"{path}: expected sequence {expected}, "
                        f"found {record.sequence_number}",
                        sequence_number=expected,
                    )
                expected += 1
                yield record


# -- fold -----------------------------------------------------------------------


@dataclass(frozen=True)
class ServiceRecord:
    """Everything the service knows about one deliberation."""

    proposal: ActivationProposal
    deliberation: Deliberation
    budgets: Mapping[str, InviteBudget] = field(default_factory=dict)
    reports: Mapping[str, ConsensusReport] = field(default_factory=dict)
    endorsements: Mapping[str, tuple[tuple[str, int], ...]] = field(default_factory=dict)
    last_sequence: int = 0


def _participant_from_payload(data: Mapping) -> Participant:
    return Participant(
        id=data["id"],
        layer=Layer(data["layer"]),
        attributes=dict(data.get("attributes", {})),
        verified=bool(data.get("verified", False)),
    )


def participant_to_payload(p: Participant) -> dict:
    return {
        "id": p.id,
        "layer": p.layer.value,
        "attributes": dict(p.attributes),
        "verified": p.verified,
    }


def fold_event(record: ServiceRecord | None, event: EventRecord) -> ServiceRecord:
    """Apply one event; the only place deliberation state ever changes."""
    if event.kind is EventKind.PROPOSAL_CREATED:
        if record is not None:
            raise CorruptLog(
                f"duplicate ProposalCreated for {event.deliberation_id}",
                sequence_number=event.sequence_number,
            )
        payload = event.payload
        config = DeliberationConfig.from_dict(payload.get("config", {}))
        proposal = ActivationProposal(
            id=event.deliberation_id,
            topic_text=payload["topic_text"],
            locale=payload["locale"],
            proposed_at=event.at,
            threshold=int(payload["threshold"]),
            window_ms=int(payload["window_ms"]),
        )
        deliberation = Deliberation(
            id=event.deliberation_id,
            prompt=payload.get("prompt") or default_prompt(payload["topic_text"]),
            locale=payload["locale"],
            config=config,
        )
        return ServiceRecord(
            proposal=proposal,
            deliberation=deliberation,
            last_sequence=event.sequence_number,
        )

    if record is None:
        raise CorruptLog(
            f"log for {event.deliberation_id} does not start with ProposalCreated",
            sequence_number=event.sequence_number,
        )

    proposal = record.proposal
    deliberation = record.deliberation
    budgets = record.budgets
    reports = record.reports
    endorsements = record.endorsements

    if event.kind is EventKind.UPVOTED:
        proposal = replace(
            proposal, upvoters=proposal.upvoters | {event.payload["account"]}
        )
    elif event.kind is EventKind.ACTIVATED:
        deliberation = transition(deliberation, TransitionEvent.ACTIVATE, event.at)
    elif event.kind is EventKind.PARTICIPANT_JOINED:
        participant = _participant_from_payload(event.payload["participant"])
        participants = dict(deliberation.participants)
        participants[participant.id] = participant
        matrix = deliberation.matrix.with_participant(participant.id)
        deliberation = replace(deliberation, participants=participants, matrix=matrix)
        if participant.layer is Layer.BASE:
            per_category = deliberation.config.invites_per_category
            budgets = dict(budgets)
            budgets[participant.id] = InviteBudget(
                holder=participant.id,
                remaining={layer: per_category for layer in INVITE_LAYERS},
            )
    elif event.kind is EventKind.INVITE_ISSUED:
        holder = event.payload["holder"]
        category = Layer(event.payload["category"])
        participant = _participant_from_payload(event.payload["participant"])
        budgets = dict(budgets)
        budget = budgets[holder]
        remaining = dict(budget.remaining)
        remaining[category] = remaining[category] - 1
        budgets[holder] = replace(budget, remaining=remaining)
        participants = dict(deliberation.participants)
        participants[participant.id] = participant
        matrix = deliberation.matrix.with_participant(participant.id)
        deliberation = replace(deliberation, participants=participants, matrix=matrix)
    elif event.kind is EventKind.STATEMENT_SUBMITTED:
        data = event.payload["statement"]
        statement = Statement(
            id=data["id"],
            author=data["author"],
            text=data["text"],
            submitted_at=int(data["submitted_at"]),
            moderation=Moderation(data.get("moderation", "Visible")),
        )
        statements = dict(deliberation.statements)
        statements[statement.id] = statement
        matrix = deliberation.matrix.with_statement(statement.id)
        deliberation = replace(deliberation, statements=statements, matrix=matrix)
    elif event.kind is EventKind.VOTE_CAST:
        vote = vote_from_event({"type": "VoteCast", **event.payload})
        deliberation = replace(
            deliberation, matrix=apply_vote(deliberation.matrix, vote)
        )
    elif event.kind is EventKind.MODERATION_SET:
        statements = dict(deliberation.statements)
        sid = event.payload["statement_id"]
        statements[sid] = replace(
            statements[sid], moderation=Moderation(event.payload["moderation"])
        )
        deliberation = replace(deliberation, statements=statements)
    elif event.kind is EventKind.CONCLUDED:
        deliberation = transition(deliberation, TransitionEvent.CONCLUDE, event.at)
    elif event.kind is EventKind.REPORT_GENERATED:
        reports = dict(reports)
        reports[event.payload["report_id"]] = report_from_dict(event.payload["report"])
    elif event.kind is EventKind.ENDORSED:
        rid = event.payload["report_id"]
        endorsements = dict(endorsements)
        endorsements[rid] = endorsements.get(rid, ()) + (
            (event.payload["participant_id"], event.at),
        )
    elif event.kind is EventKind.PUBLISHED:
        deliberation = transition(deliberation, TransitionEvent.PUBLISH, event.at)
    else:  # pragma: no cover - enum is exhaustive
        raise CorruptLog(f"unknown event kind {event.kind}", event.sequence_number)

    return ServiceRecord(
        proposal=proposal,
        deliberation=deliberation,
        budgets=budgets,
        reports=reports,
        endorsements=endorsements,
        last_sequence=event.sequence_number,
    )


def replay(log: EventLog, deliberation_id: str) -> ServiceRecord:
    """Fold the full on-disk log into a snapshot."""
    record: ServiceRecord | None = None
    for event in log.read(deliberation_id):
        record = fold_event(record, event)
    if record is None:
        raise NotFound(deliberation_id)
    return record
