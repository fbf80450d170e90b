"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

MAX_MESSAGE_CHARS = 4096


class ConversationCreated(BaseModel):
    conversation_id: str


class MessageRequest(BaseModel):
    text: str


class TableModel(BaseModel):
    columns: list[str]
    rows: list[list]
    provenance: str


class MediaLink(BaseModel):
    play_id: str
    url: str


class AnswerModel(BaseModel):
    text: str
    tables: list[TableModel]
    media_links: list[MediaLink]
    verdict: Optional[dict] = None
    failures: list[str] = Field(default_factory=list)


class MessageResponse(BaseModel):
    message_id: str
    conversation_id: str
    answer: AnswerModel
    trace_id: str
    timings_ms: dict[str, float]
    intent_kind: str
    inherited: list[str]
    challenge: float
    parse_trace: str


class FeedbackRequest(BaseModel):
    rating: str = Field(pattern="^(up|down)$")
    comment: Optional[str] = None


class FeedbackAck(BaseModel):
    message_id: str
    rating: str
    comment: Optional[str] = None


class IngestRequest(BaseModel):
    records: list[dict]


class IngestResponse(BaseModel):
    collection: str
    count: int


class BenchRunRequest(BaseModel):
    suite_path: str


class ErrorBody(BaseModel):
    detail: str
    hints: list[str] = Field(default_factory=list)


class EvalQueueEntry(BaseModel):
    prompt: str
    challenge: float
    thumbs_down_count: int
    priority: float
