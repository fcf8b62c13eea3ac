"""HTTP surface over the deliberation store.

JSON in, JSON out; every response carries the owning deliberation's
current state and a snapshot timestamp. Domain errors map onto transport
codes by category (validation 400, not found 404, lifecycle conflicts 409,
storage 500) with the error name in the body so clients can branch on it.
"""
from __future__ import annotations

from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..consensus import report_to_dict
from ..errors import NotFound, PlazaError
from ..model import Layer, Moderation, VoteValue
from .store import DeliberationStore, ServiceRecord

_STATUS_BY_CATEGORY = {
    "validation": 400,
    "not_found": 404,
    "conflict": 409,
    "storage": 500,
}


class ProposalBody(BaseModel):
    topic_text: str
    locale: str = "global"
    id: str | None = None
    threshold: int | None = None
    window_ms: int | None = None
    prompt: str | None = None


class UpvoteBody(BaseModel):
    account: str


class JoinBody(BaseModel):
    participant_id: str | None = None
    layer: Layer = Layer.OPEN
    attributes: dict[str, str] = Field(default_factory=dict)
    verified: bool = False


class InviteBody(BaseModel):
    holder: str
    category: Layer
    invitee: str
    attributes: dict[str, str] = Field(default_factory=dict)


class StatementBody(BaseModel):
    author: str
    text: str


class VoteBody(BaseModel):
    participant_id: str
    statement_id: str
    value: VoteValue


class ModerationBody(BaseModel):
    moderation: Moderation


class EndorseBody(BaseModel):
    participant_id: str


def _envelope(record: ServiceRecord, now: int, **payload) -> dict:
    return {
        "deliberation_id": record.deliberation.id,
        "state": record.deliberation.state.value,
        "snapshot_at": now,
        **payload,
    }


def create_app(store: DeliberationStore) -> FastAPI:
    app = FastAPI(title="plaza", version="0.1.0")

    @app.exception_handler(PlazaError)
    async def plaza_error_handler(_request: Request, exc: PlazaError):
        return JSONResponse(
            status_code=_STATUS_BY_CATEGORY.get(exc.category, 400),
            content={"error": exc.name, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(_request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "ValueError", "detail": str(exc)})

    # -- proposals ------------------------------------------------------------

    @app.post("/proposals", status_code=201)
    def create_proposal(body: ProposalBody):
        record = store.create_proposal(
            topic_text=body.topic_text,
            locale=body.locale,
            proposal_id=body.id,
            threshold=body.threshold,
            window_ms=body.window_ms,
            prompt=body.prompt,
        )
        return _envelope(
            record,
            store.clock(),
            prompt=record.deliberation.prompt,
            threshold=record.proposal.threshold,
            window_ms=record.proposal.window_ms,
        )

    @app.get("/proposals")
    def list_proposals():
        now = store.clock()
        proposals = []
        for deliberation_id in store.deliberation_ids():
            record = store.record(deliberation_id)
            proposals.append(
                {
                    "id": deliberation_id,
                    "topic_text": record.proposal.topic_text,
                    "locale": record.proposal.locale,
                    "proposed_at": record.proposal.proposed_at,
                    "upvotes": len(record.proposal.upvoters),
                    "threshold": record.proposal.threshold,
                    "window_ms": record.proposal.window_ms,
                    "state": record.deliberation.state.value,
                }
            )
        return {"proposals": proposals, "snapshot_at": now}

    @app.post("/proposals/{deliberation_id}/upvote")
    def upvote(deliberation_id: str, body: UpvoteBody):
        record, activated = store.upvote(deliberation_id, body.account)
        return _envelope(
            record,
            store.clock(),
            upvotes=len(record.proposal.upvoters),
            threshold=record.proposal.threshold,
            activated=activated,
        )

    # -- deliberations ----------------------------------------------------------

    @app.get("/deliberations/{deliberation_id}")
    def get_deliberation(deliberation_id: str):
        record = store.record(deliberation_id)
        d = record.deliberation
        return _envelope(
            record,
            store.clock(),
            prompt=d.prompt,
            locale=d.locale,
            activated_at=d.activated_at,
            concludes_at=d.concludes_at,
            participants=len(d.participants),
            statements=len(d.statements),
            votes=len(d.matrix.entries),
        )

    @app.post("/deliberations/{deliberation_id}/participants", status_code=201)
    def join(deliberation_id: str, body: JoinBody | InviteBody):
        if isinstance(body, InviteBody):
            record, participant = store.invite(
                deliberation_id, body.holder, body.category, body.invitee, body.attributes
            )
        else:
            record, participant = store.join(
                deliberation_id,
                participant_id=body.participant_id,
                layer=body.layer,
                attributes=body.attributes,
                verified=body.verified,
            )
        return _envelope(
            record,
            store.clock(),
            participant={
                "id": participant.id,
                "layer": participant.layer.value,
                "attributes": dict(participant.attributes),
                "verified": participant.verified,
            },
        )

    @app.post("/deliberations/{deliberation_id}/statements", status_code=201)
    def submit_statement(deliberation_id: str, body: StatementBody):
        record, statement = store.submit_statement(deliberation_id, body.author, body.text)
        return _envelope(record, store.clock(), statement_id=statement.id)

    @app.get("/deliberations/{deliberation_id}/statements")
    def list_statements(deliberation_id: str, participant: str | None = None):
        record = store.record(deliberation_id)
        d = record.deliberation
        voted: set[str] = set()
        if participant is not None:
            if participant not in d.participants:
                raise NotFound(f"participant {participant}")
            voted = set(d.matrix.row_entries(participant))
        statements = [
            {
                "id": s.id,
                "author": s.author,
                "text": s.text,
                "submitted_at": s.submitted_at,
                **({"voted": s.id in voted} if participant is not None else {}),
            }
            for s in d.statements.values()
            if s.moderation is Moderation.VISIBLE
        ]
        return _envelope(record, store.clock(), statements=statements)

    @app.post("/deliberations/{deliberation_id}/votes", status_code=201)
    def cast_vote(deliberation_id: str, body: VoteBody):
        record = store.cast_vote(
            deliberation_id, body.participant_id, body.statement_id, body.value
        )
        return _envelope(record, store.clock(), recorded=True)

    @app.post("/deliberations/{deliberation_id}/statements/{statement_id}/moderation")
    def set_moderation(deliberation_id: str, statement_id: str, body: ModerationBody):
        record = store.set_moderation(deliberation_id, statement_id, body.moderation)
        return _envelope(record, store.clock(), statement_id=statement_id)

    # -- analysis ----------------------------------------------------------------

    @app.get("/deliberations/{deliberation_id}/map")
    def opinion_map(deliberation_id: str):
        record = store.record(deliberation_id)
        built = store.opinion_map(deliberation_id)
        if built is None:
            return _envelope(
                record, store.clock(), projections={}, groups={}, k=0, silhouette=0.0,
                explained_variance=[0.0, 0.0],
            )
        return _envelope(
            record,
            store.clock(),
            projections={p: [x, y] for p, (x, y) in built.projections.items()},
            groups=dict(built.group_assignment),
            k=built.k,
            silhouette=built.silhouette,
            explained_variance=list(built.explained_variance),
        )

    @app.get("/deliberations/{deliberation_id}/report")
    def get_report(deliberation_id: str):
        record, report_id = store.get_or_create_report(deliberation_id)
        report = store.report_with_endorsements(report_id)
        return _envelope(
            record, store.clock(), report_id=report_id, report=report_to_dict(report)
        )

    @app.post("/deliberations/{deliberation_id}/report/refresh")
    def refresh_report(deliberation_id: str):
        record, report_id = store.generate_report(deliberation_id)
        report = store.report_with_endorsements(report_id)
        return _envelope(
            record, store.clock(), report_id=report_id, report=report_to_dict(report)
        )

    @app.get("/deliberations/{deliberation_id}/report/layers/{layer}")
    def report_layer(deliberation_id: str, layer: Layer):
        record, report_id = store.get_or_create_report(deliberation_id)
        report = store.report_with_endorsements(report_id)
        entries = []
        for entry in report.entries:
            stats = entry.per_layer_stats.get(layer.value)
            if stats is None:
                continue
            entries.append(
                {
                    "statement": entry.statement,
                    "agrees": stats.agrees,
                    "disagrees": stats.disagrees,
                    "passes": stats.passes,
                    "seen": stats.seen,
                }
            )
        return _envelope(
            record, store.clock(), report_id=report_id, layer=layer.value, entries=entries
        )

    # -- lifecycle -----------------------------------------------------------------

    @app.post("/deliberations/{deliberation_id}/activate")
    def activate(deliberation_id: str):
        record = store.activate(deliberation_id)
        return _envelope(record, store.clock())

    @app.post("/deliberations/{deliberation_id}/conclude")
    def conclude(deliberation_id: str):
        record = store.conclude(deliberation_id)
        return _envelope(record, store.clock())

    @app.post("/deliberations/{deliberation_id}/publish")
    def publish(deliberation_id: str):
        record = store.publish(deliberation_id)
        return _envelope(record, store.clock())

    # -- reports ------------------------------------------------------------------

    @app.post("/reports/{report_id}/endorse")
    def endorse(report_id: str, body: EndorseBody):
        record, added = store.endorse(report_id, body.participant_id)
        endorsements = record.endorsements.get(report_id, ())
        return _envelope(
            record,
            store.clock(),
            report_id=report_id,
            endorsements=len(endorsements),
            noop=not added,
        )

    @app.get("/reports/{report_id}/export")
    def export(report_id: str):
        deliberation_id = report_id.rsplit("-r", 1)[0]
        record = store.record(deliberation_id)
        bundle = store.export_report(report_id)
        return _envelope(record, store.clock(), **bundle)

    return app


def serve(store: DeliberationStore, host: str = "127.0.0.1", port: int | None = None):
    """Run the API under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(store), host=host, port=port or store.config.port)
