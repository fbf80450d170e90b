"""FastAPI application exposing conversations, feedback, traces, and benchmarks."""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException, Response

from ..config import EngineConfig, load_config
from ..engine import Engine, MessageResult
from ..errors import (
    EmptySuite,
    MissingContext,
    NoUsableSubAnswers,
    UnknownCorrelation,
    UnknownMessage,
    Unparseable,
    UnresolvedEntity,
)
from ..evaluation import priority
from ..runtime import trace_to_canonical_json
from .schemas import (
    AnswerModel,
    BenchRunRequest,
    ConversationCreated,
    EvalQueueEntry,
    FeedbackAck,
    FeedbackRequest,
    IngestRequest,
    IngestResponse,
    MAX_MESSAGE_CHARS,
    MessageRequest,
    MessageResponse,
)


def _message_response(result: MessageResult) -> MessageResponse:
    answer = result.answer
    return MessageResponse(
        message_id=result.message_id,
        conversation_id=result.conversation_id,
        answer=AnswerModel(
            text=answer.text,
            tables=[t.to_json() for t in answer.tables],
            media_links=[{"play_id": p, "url": u} for p, u in answer.media_links],
            verdict=answer.verdict,
            failures=answer.failures,
        ),
        trace_id=result.trace_id,
        timings_ms=result.timings_ms,
        intent_kind=result.intent_kind,
        inherited=list(result.inherited),
        challenge=result.challenge,
        parse_trace=result.parse_trace,
    )


def create_app(
    config: Optional[EngineConfig] = None, engine: Optional[Engine] = None
) -> FastAPI:
    app = FastAPI(title="gridiron", version="0.1.0")
    app.state.engine = engine or Engine(config or load_config())

    def _engine() -> Engine:
        return app.state.engine

    @app.post("/v1/conversations", response_model=ConversationCreated, status_code=201)
    def create_conversation() -> ConversationCreated:
        return ConversationCreated(conversation_id=_engine().create_conversation())

    @app.post(
        "/v1/conversations/{conversation_id}/messages",
        response_model=MessageResponse,
    )
    def post_message(conversation_id: str, request: MessageRequest) -> MessageResponse:
        engine = _engine()
        if not engine.conversation_exists(conversation_id):
            raise HTTPException(status_code=404, detail="unknown conversation")
        text = request.text
        if not text or not text.strip():
            raise HTTPException(status_code=400, detail="message text is empty")
        if len(text) > MAX_MESSAGE_CHARS:
            raise HTTPException(
                status_code=400,
                detail=f"message text exceeds {MAX_MESSAGE_CHARS} characters",
            )
        try:
            result = engine.post_message(conversation_id, text)
        except Unparseable as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": "unparseable prompt", "hints": exc.nearest_patterns},
            ) from exc
        except UnresolvedEntity as exc:
            raise HTTPException(
                status_code=422,
                detail={
                    "error": f"cannot resolve mention {exc.mention!r}",
                    "hints": exc.nearest,
                },
            ) from exc
        except MissingContext as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": str(exc), "hints": []},
            ) from exc
        except NoUsableSubAnswers as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return _message_response(result)

    @app.post("/v1/messages/{message_id}/feedback", response_model=FeedbackAck)
    def post_feedback(message_id: str, request: FeedbackRequest) -> FeedbackAck:
        try:
            record = _engine().record_feedback(message_id, request.rating, request.comment)
        except UnknownMessage as exc:
            raise HTTPException(status_code=404, detail="unknown message") from exc
        return FeedbackAck(
            message_id=record.message_id, rating=record.rating, comment=record.comment
        )

    @app.get("/v1/traces/{trace_id}")
    def get_trace(trace_id: str) -> Response:
        try:
            trace = _engine().get_trace(trace_id)
        except UnknownCorrelation as exc:
            raise HTTPException(status_code=404, detail="unknown or expired trace") from exc
        return Response(
            content=trace_to_canonical_json(trace), media_type="application/json"
        )

    @app.get("/v1/bench/report")
    def bench_report() -> dict:
        report = _engine().bench_report()
        if report is None:
            raise HTTPException(status_code=404, detail="no benchmark report recorded")
        return report

    @app.post("/v1/bench/run")
    def bench_run(request: BenchRunRequest) -> dict:
        try:
            report = _engine().bench_run(request.suite_path)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except EmptySuite as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return report.to_json()

    @app.get("/v1/eval/queue")
    def eval_queue() -> list[EvalQueueEntry]:
        return [
            EvalQueueEntry(
                prompt=item.prompt,
                challenge=item.challenge,
                thumbs_down_count=item.thumbs_down_count,
                priority=priority(item),
            )
            for item in _engine().eval_queue()
        ]

    @app.post("/v1/ingest/{collection}", response_model=IngestResponse)
    def ingest(collection: str, request: IngestRequest) -> IngestResponse:
        try:
            count = _engine().ingest(collection, request.records)
        except Exception as exc:  # noqa: BLE001 - rejection details go to the client
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return IngestResponse(collection=collection, count=count)

    @app.get("/v1/grammar")
    def grammar() -> dict:
        return _engine().grammar_dump()

    @app.get("/v1/plan")
    def plan_preview(prompt: str, conversation_id: Optional[str] = None) -> dict:
        try:
            return _engine().plan_preview(prompt, conversation_id)
        except Unparseable as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": "unparseable prompt", "hints": exc.nearest_patterns},
            ) from exc

    @app.get("/v1/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    return app
