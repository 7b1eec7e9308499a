"""HTTP adjudication service: review queue, verdicts, progress, export.

Wraps an AdjudicationStore in a small FastAPI app and optionally serves
the review UI as static assets from the same origin.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .adjudication import AdjudicationStore, UnknownPair, Verdict, utc_now_iso
from .pairs import pair_to_dict


class CandidateOut(BaseModel):
    pair_id: str
    topic_a: str
    topic_b: str
    source: str
    context: str
    status: Literal["pending", "accepted", "rejected"]


class VerdictIn(BaseModel):
    pair_id: str
    annotator: str
    decision: Literal["accept", "reject", "skip"]
    note: Optional[str] = None


class VerdictOut(BaseModel):
    status: Literal["pending", "accepted", "rejected"]


class ProgressOut(BaseModel):
    pending: int
    accepted: int
    rejected: int
    total: int


def create_app(store: AdjudicationStore, *, static_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="topicrel adjudication", docs_url=None, redoc_url=None)

    @app.get("/api/queue/next", response_model=CandidateOut, responses={204: {"model": None}})
    def queue_next(annotator: str = Query(min_length=1)):
        candidate = store.next_pending(annotator)
        if candidate is None:
            return Response(status_code=204)
        return CandidateOut(
            pair_id=candidate.pair_id,
            topic_a=candidate.topic_a,
            topic_b=candidate.topic_b,
            source=candidate.source,
            context=candidate.context,
            status=store.status_of(candidate.pair_id),
        )

    @app.post("/api/verdicts", response_model=VerdictOut)
    def post_verdict(body: VerdictIn):
        verdict = Verdict(
            pair_id=body.pair_id,
            annotator=body.annotator,
            decision=body.decision,
            timestamp=utc_now_iso(),
            note=body.note,
        )
        try:
            status = store.record_verdict(verdict)
        except UnknownPair as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return VerdictOut(status=status)

    @app.get("/api/progress", response_model=ProgressOut)
    def progress():
        return ProgressOut(**store.progress())

    @app.get("/api/export")
    def export():
        lines = [
            json.dumps(pair_to_dict(pair), ensure_ascii=False)
            for pair in store.finalize()
        ]
        text = "\n".join(lines) + ("\n" if lines else "")
        return PlainTextResponse(text, media_type="application/x-ndjson")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
