"""Command layer: validate, append to the log, fold into the live record.

One writer per deliberation (a per-id lock); readers get immutable
snapshots. Commands never mutate state directly - every change goes
through an appended event and the same fold used for replay, which is what
makes replay reproduce the live record exactly.
"""
from __future__ import annotations

import threading
import time
from dataclasses import replace
from typing import Callable, Mapping

from .. import consensus
from ..errors import (
    DegenerateInput,
    DuplicateParticipant,
    GuardRejected,
    LifecycleViolation,
    NotFound,
    UnknownParticipant,
    UnknownStatement,
)
from ..lifecycle import (
    DeliberationConfig,
    DeliberationState,
    TransitionEvent,
    guard_write,
    record_upvote,
    transition,
)
from ..model import Layer, Moderation, Participant, Statement, Vote, VoteValue, vote_to_event
from ..panel import issue_invite
from .config import ServiceConfig
from .events import (
    EventKind,
    EventLog,
    EventRecord,
    ServiceRecord,
    fold_event,
    participant_to_payload,
    replay,
    validate_deliberation_id,
)


def _wall_clock_ms() -> int:
    return int(time.time() * 1000)


class DeliberationStore:
    """Event-sourced store for proposals and deliberations."""

    def __init__(
        self,
        storage_dir: str,
        config: ServiceConfig | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self.config = config or ServiceConfig()
        self.log = EventLog(storage_dir)
        self.clock = clock or _wall_clock_ms
        self._records: dict[str, ServiceRecord] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for deliberation_id in self.log.deliberation_ids():
            self._records[deliberation_id] = replay(self.log, deliberation_id)

    # -- plumbing ----------------------------------------------------------

    def _lock(self, deliberation_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(deliberation_id, threading.Lock())

    def _append(self, deliberation_id: str, kind: EventKind, payload: Mapping, at: int) -> ServiceRecord:
        record = self._records.get(deliberation_id)
        seq = (record.last_sequence if record else 0) + 1
        event = EventRecord(
            sequence_number=seq,
            deliberation_id=deliberation_id,
            kind=kind,
            at=at,
            payload=dict(payload),
        )
        folded = fold_event(record, event)  # validate the fold before touching disk
        self.log.append(event)
        self._records[deliberation_id] = folded
        return folded

    def record(self, deliberation_id: str) -> ServiceRecord:
        record = self._records.get(deliberation_id)
        if record is None:
            raise NotFound(deliberation_id)
        return record

    def deliberation_ids(self) -> list[str]:
        return sorted(self._records)

    def replay_from_disk(self, deliberation_id: str) -> ServiceRecord:
        return replay(self.log, deliberation_id)

    # -- proposals -----------------------------------------------------------

    def create_proposal(
        self,
        topic_text: str,
        locale: str,
        proposal_id: str | None = None,
        threshold: int | None = None,
        window_ms: int | None = None,
        config: DeliberationConfig | None = None,
        prompt: str | None = None,
    ) -> ServiceRecord:
        with self._registry_lock:
            if proposal_id is None:
                proposal_id = f"d{len(self._records) + 1}"
            validate_deliberation_id(proposal_id)
            if proposal_id in self._records:
                raise DuplicateParticipant(f"deliberation id {proposal_id} taken")
        with self._lock(proposal_id):
            payload = {
                "topic_text": topic_text,
                "locale": locale,
                "threshold": threshold if threshold is not None else self.config.upvote_threshold,
                "window_ms": window_ms if window_ms is not None else self.config.upvote_window_ms,
                "config": (config or self.config.deliberation).to_dict(),
            }
            if prompt is not None:
                payload["prompt"] = prompt
            return self._append(
                proposal_id, EventKind.PROPOSAL_CREATED, payload, self.clock()
            )

    def upvote(self, deliberation_id: str, account: str) -> tuple[ServiceRecord, bool]:
        """Idempotent: a repeated upvote by the same account is a no-op."""
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            updated, crossed = record_upvote(record.proposal, account, now)
            if updated.upvoters == record.proposal.upvoters:
                return record, False
            folded = self._append(
                deliberation_id, EventKind.UPVOTED, {"account": account}, now
            )
            if crossed and folded.deliberation.state is DeliberationState.PROPOSED:
                folded = self._append(deliberation_id, EventKind.ACTIVATED, {}, now)
            return folded, crossed

    def activate(self, deliberation_id: str) -> ServiceRecord:
        """Operator override: activate without reaching the upvote threshold."""
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            transition(record.deliberation, TransitionEvent.ACTIVATE, now)
            return self._append(deliberation_id, EventKind.ACTIVATED, {}, now)

    # -- participants ----------------------------------------------------------

    def join(
        self,
        deliberation_id: str,
        participant_id: str | None = None,
        layer: Layer = Layer.OPEN,
        attributes: Mapping[str, str] | None = None,
        verified: bool = False,
    ) -> tuple[ServiceRecord, Participant]:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            state = record.deliberation.state
            if state not in (DeliberationState.PROPOSED, DeliberationState.ACTIVE):
                raise LifecycleViolation(f"cannot join a {state.value} deliberation")
            if participant_id is None:
                participant_id = f"p{len(record.deliberation.participants) + 1}"
            if participant_id in record.deliberation.participants:
                raise DuplicateParticipant(participant_id)
            participant = Participant(
                id=participant_id,
                layer=layer,
                attributes=dict(attributes or {}),
                verified=verified,
            )
            folded = self._append(
                deliberation_id,
                EventKind.PARTICIPANT_JOINED,
                {"participant": participant_to_payload(participant)},
                self.clock(),
            )
            return folded, participant

    def invite(
        self,
        deliberation_id: str,
        holder_id: str,
        category: Layer,
        invitee_id: str,
        attributes: Mapping[str, str] | None = None,
    ) -> tuple[ServiceRecord, Participant]:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            state = record.deliberation.state
            if state not in (DeliberationState.PROPOSED, DeliberationState.ACTIVE):
                raise LifecycleViolation(f"cannot invite into a {state.value} deliberation")
            budget = record.budgets.get(holder_id)
            if budget is None:
                raise UnknownParticipant(f"{holder_id} holds no invite budget")
            _budget, participant = issue_invite(
                budget, category, invitee_id, record.deliberation.participants, attributes
            )
            folded = self._append(
                deliberation_id,
                EventKind.INVITE_ISSUED,
                {
                    "holder": holder_id,
                    "category": category.value,
                    "participant": participant_to_payload(participant),
                },
                self.clock(),
            )
            return folded, participant

    # -- statements and votes ---------------------------------------------------

    def submit_statement(
        self, deliberation_id: str, author: str, text: str
    ) -> tuple[ServiceRecord, Statement]:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            statement_id = f"s{len(record.deliberation.statements) + 1}"
            statement = Statement(
                id=statement_id, author=author, text=text, submitted_at=now
            )
            decision = guard_write(record.deliberation, statement, now)
            if not decision.accepted:
                raise GuardRejected(decision.reason)
            if author != "system" and author not in record.deliberation.participants:
                raise UnknownParticipant(author)
            folded = self._append(
                deliberation_id,
                EventKind.STATEMENT_SUBMITTED,
                {
                    "statement": {
                        "id": statement.id,
                        "author": statement.author,
                        "text": statement.text,
                        "submitted_at": statement.submitted_at,
                        "moderation": statement.moderation.value,
                    }
                },
                now,
            )
            return folded, statement

    def cast_vote(
        self,
        deliberation_id: str,
        participant_id: str,
        statement_id: str,
        value: VoteValue,
    ) -> ServiceRecord:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            vote = Vote(
                participant=participant_id,
                statement=statement_id,
                value=value,
                cast_at=now,
            )
            decision = guard_write(record.deliberation, vote, now)
            if not decision.accepted:
                raise GuardRejected(decision.reason)
            if participant_id not in record.deliberation.participants:
                raise UnknownParticipant(participant_id)
            if statement_id not in record.deliberation.statements:
                raise UnknownStatement(statement_id)
            event = vote_to_event(deliberation_id, vote)
            payload = {k: v for k, v in event.items() if k not in ("type", "deliberation_id")}
            return self._append(deliberation_id, EventKind.VOTE_CAST, payload, now)

    def set_moderation(
        self, deliberation_id: str, statement_id: str, moderation: Moderation
    ) -> ServiceRecord:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            if statement_id not in record.deliberation.statements:
                raise UnknownStatement(statement_id)
            return self._append(
                deliberation_id,
                EventKind.MODERATION_SET,
                {"statement_id": statement_id, "moderation": moderation.value},
                self.clock(),
            )

    # -- lifecycle ---------------------------------------------------------------

    def conclude(self, deliberation_id: str) -> ServiceRecord:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            transition(record.deliberation, TransitionEvent.CONCLUDE, now)
            return self._append(deliberation_id, EventKind.CONCLUDED, {}, now)

    def publish(self, deliberation_id: str) -> ServiceRecord:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            transition(record.deliberation, TransitionEvent.PUBLISH, now)
            return self._append(deliberation_id, EventKind.PUBLISHED, {}, now)

    # -- analysis ---------------------------------------------------------------

    def opinion_map(self, deliberation_id: str) -> consensus.OpinionMap | None:
        """Current opinion map, or None while there is too little data.

        While there are too few voters to find groups, everyone is shown as
        one group so the live map still renders; below two voters there is
        no projection at all and None is returned.
        """
        record = self.record(deliberation_id)
        matrix = consensus.visible_matrix(record.deliberation)
        cfg = record.deliberation.config
        try:
            projection = consensus.project_participants(matrix)
        except DegenerateInput:
            return None
        try:
            clustering = consensus.cluster_groups(
                projection.coordinates, (cfg.k_min, cfg.k_max), cfg.cluster_seed
            )
            assignment, k, silhouette = (
                clustering.assignment,
                clustering.k,
                clustering.silhouette,
            )
        except DegenerateInput:
            assignment, k, silhouette = {p: 0 for p in projection.coordinates}, 1, 0.0
        return consensus.OpinionMap(
            projections=projection.coordinates,
            group_assignment=assignment,
            k=k,
            component_loadings=projection.component_loadings,
            explained_variance=projection.explained_variance,
            silhouette=silhouette,
        )

    def generate_report(self, deliberation_id: str) -> tuple[ServiceRecord, str]:
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            now = self.clock()
            report, _model, _map = consensus.analyze(record.deliberation, now)
            report_id = f"{deliberation_id}-r{len(record.reports) + 1}"
            folded = self._append(
                deliberation_id,
                EventKind.REPORT_GENERATED,
                {"report_id": report_id, "report": consensus.report_to_dict(report)},
                now,
            )
            return folded, report_id

    def latest_report_id(self, deliberation_id: str) -> str | None:
        record = self.record(deliberation_id)
        if not record.reports:
            return None
        return list(record.reports)[-1]

    def get_or_create_report(self, deliberation_id: str) -> tuple[ServiceRecord, str]:
        report_id = self.latest_report_id(deliberation_id)
        if report_id is not None:
            return self.record(deliberation_id), report_id
        return self.generate_report(deliberation_id)

    def _find_report(self, report_id: str) -> tuple[str, ServiceRecord]:
        deliberation_id = report_id.rsplit("-r", 1)[0]
        record = self._records.get(deliberation_id)
        if record is None or report_id not in record.reports:
            raise NotFound(f"report {report_id}")
        return deliberation_id, record

    def report_with_endorsements(self, report_id: str) -> consensus.ConsensusReport:
        _deliberation_id, record = self._find_report(report_id)
        report = record.reports[report_id]
        return consensus.with_endorsements(
            report, record.endorsements.get(report_id, ())
        )

    def endorse(self, report_id: str, participant_id: str) -> tuple[ServiceRecord, bool]:
        """Record a sign-off; duplicates are no-ops reported as success."""
        deliberation_id, _record = self._find_report(report_id)
        with self._lock(deliberation_id):
            record = self.record(deliberation_id)
            if participant_id not in record.deliberation.participants:
                raise UnknownParticipant(participant_id)
            existing = record.endorsements.get(report_id, ())
            if any(p == participant_id for p, _at in existing):
                return record, False
            folded = self._append(
                deliberation_id,
                EventKind.ENDORSED,
                {"report_id": report_id, "participant_id": participant_id},
                self.clock(),
            )
            return folded, True

    def export_report(self, report_id: str) -> dict:
        """Report + endorsements bundle for hand-off."""
        report = self.report_with_endorsements(report_id)
        return {
            "report_id": report_id,
            "report": consensus.report_to_dict(replace(report, endorsements=())),
            "endorsements": [[p, at] for p, at in report.endorsements],
        }
