"""Wires the catalog, stores, interpreter, planner, bus, and synthesis into
the full prompt-to-answer pipeline."""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .agents import (
    Answer,
    StructuredRetrievalAgent,
    Synthesizer,
    TemplateGenerator,
    TrackingRetrievalAgent,
    VectorRetrievalAgent,
    augment,
)
from .catalog import Catalog, load_catalog_file
from .config import EngineConfig
from .errors import EngineError
from .evaluation import (
    EvalQueueItem,
    FeedbackRecord,
    FeedbackStore,
    GoldenReport,
    MessageRecord,
    MessageRegistry,
    TurnOutcome,
    build_eval_queue,
    load_golden_suite,
    run_golden,
)
from .interpreter import EngineClock, Interpreter, ParsedQuery
from .memory import ConversationState, MemoryStore, TurnRecord, record_turn
from .planner import QueryPlan, build_plan, challenge_score, plan_to_json
from .runtime import AgentGraph, Bus, TraceLog
from .structured import DocumentStore
from .tracking import TrackingStore
from .vectors import VectorIndex, build_embedder, load_chunks

logger = logging.getLogger(__name__)

STRUCTURED_FIXTURES = (
    "player_season_stats",
    "game_logs",
    "metric_ranks",
    "cap_table",
    "plays",
)


@dataclass
class MessageResult:
    message_id: str
    conversation_id: str
    answer: Answer
    trace_id: str
    timings_ms: dict[str, float]
    intent_kind: str
    inherited: tuple[str, ...]
    challenge: float
    parse_trace: str


class Engine:
    def __init__(self, config: EngineConfig):
        self.config = config
        self.clock = EngineClock(season=config.season, week=config.week)
        fixtures = Path(config.fixtures_dir)

        self.catalog: Catalog = load_catalog_file(fixtures / "catalog.jsonl")
        self.store = DocumentStore(strict=config.strict_fields)
        for name in STRUCTURED_FIXTURES:
            path = fixtures / f"{name}.jsonl"
            if path.exists():
                self.store.ingest_file(path, name)
            else:
                logger.warning("fixture %s missing; collection starts empty", path)

        traces_path = fixtures / "traces.jsonl"
        self.tracking = (
            TrackingStore.from_file(traces_path) if traces_path.exists() else TrackingStore()
        )

        chunks_path = fixtures / "chunks.jsonl"
        chunks = load_chunks(chunks_path) if chunks_path.exists() else []
        self.index = VectorIndex()
        self.embedder = None
        if chunks:
            self.embedder = build_embedder(chunks)
            for chunk in chunks:
                self.index.add(chunk, self.embedder.embed(chunk.text))

        self.interpreter = Interpreter(
            self.catalog,
            self.clock,
            verdict_metrics=config.verdict_metrics,
            roster_positions=config.roster_positions,
            roster_metric=config.roster_metric,
            team_offense_metrics=config.team_offense_metrics,
            team_defense_metrics=config.team_defense_metrics,
            mismatch_pairs=[tuple(p) for p in config.mismatch_pairs],
            cap_horizon=(config.cap_horizon_past, config.cap_horizon_future),
            context_k=config.context_k,
            grammar_path=config.grammar_path,
            lexicon_path=config.lexicon_path,
        )

        self.graph = AgentGraph()
        self.graph.register_agent(
            "structured_retrieval",
            StructuredRetrievalAgent(self.store),
            ["structured_query", "rank_query"],
        )
        self.graph.register_agent(
            "tracking_retrieval", TrackingRetrievalAgent(self.tracking), ["tracking_query"]
        )
        if self.embedder is not None:
            self.graph.register_agent(
                "vector_retrieval",
                VectorRetrievalAgent(self.embedder, self.index),
                ["vector_query"],
            )
        self.bus = Bus(self.graph, trace_retention=config.trace_retention)

        generator = self._make_generator(config)
        play_ids = {
            doc["play_id"] for doc in self.store.documents("plays")
        } if "plays" in self.store.collections() else set()
        self.synthesizer = Synthesizer(
            generator,
            self.catalog,
            self.clock,
            config.media_url_template,
            play_exists=lambda pid: pid in play_ids,
        )

        self.memory = MemoryStore(config.state_dir)
        self.registry = MessageRegistry(config.state_dir)
        self.feedback_store = FeedbackStore(config.state_dir, self.registry)
        self._message_traces: dict[str, str] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    @staticmethod
    def _make_generator(config: EngineConfig):
        if config.generator == "external":
            from .agents import ExternalGenerator

            if not config.generator_endpoint:
                raise ValueError("generator=external requires generator_endpoint")
            return ExternalGenerator(config.generator_endpoint)
        return TemplateGenerator()

    # --- conversations ---------------------------------------------------------

    def create_conversation(self) -> str:
        conversation_id = uuid.uuid4().hex
        state = ConversationState(conversation_id=conversation_id)
        self.memory.save(state)
        return conversation_id

    def conversation_exists(self, conversation_id: str) -> bool:
        return self.memory.exists(conversation_id)

    def _lock_for(self, conversation_id: str) -> threading.Lock:
        with self._locks_guard:
            if conversation_id not in self._locks:
                self._locks[conversation_id] = threading.Lock()
            return self._locks[conversation_id]

    # --- pipeline ----------------------------------------------------------------

    def _answer(
        self, state: ConversationState, text: str, correlation_id: str
    ) -> tuple[ParsedQuery, QueryPlan, Answer, dict[str, float]]:
        timings: dict[str, float] = {}
        started = time.perf_counter()

        step = time.perf_counter()
        augment(text, state, self.clock, self.catalog)
        timings["augment_ms"] = (time.perf_counter() - step) * 1000.0

        step = time.perf_counter()
        parsed = self.interpreter.parse(text, state)
        timings["parse_ms"] = (time.perf_counter() - step) * 1000.0

        step = time.perf_counter()
        plan = build_plan(parsed)
        timings["plan_ms"] = (time.perf_counter() - step) * 1000.0

        step = time.perf_counter()
        sub_answers, _trace = self.bus.dispatch(
            plan,
            correlation_id=correlation_id,
            budget_s=self.config.node_timeout_s,
            parallel=self.config.parallelism,
        )
        timings["dispatch_ms"] = (time.perf_counter() - step) * 1000.0

        step = time.perf_counter()
        answer = self.synthesizer.synthesize(parsed, sub_answers)
        timings["synthesize_ms"] = (time.perf_counter() - step) * 1000.0

        timings["total_ms"] = (time.perf_counter() - started) * 1000.0
        return parsed, plan, answer, timings

    def post_message(self, conversation_id: str, text: str) -> MessageResult:
        if not self.conversation_exists(conversation_id):
            raise KeyError(conversation_id)
        if not text or not text.strip():
            raise ValueError("message text is empty")
        if len(text) > 4096:
            raise ValueError("message text exceeds 4,096 characters")
        with self._lock_for(conversation_id):
            state = self.memory.load(conversation_id)
            message_id = uuid.uuid4().hex
            parsed, plan, answer, timings = self._answer(state, text, message_id)
            digest = hashlib.sha256(answer.text.encode("utf-8")).hexdigest()
            turn = TurnRecord(
                turn_index=len(state.turns),
                user_prompt=text,
                intent_kind=parsed.intent.kind,
                entity_ids=parsed.entity_ids,
                stat_keys=parsed.stat_keys,
                scope=parsed.scope,
                answer_digest=digest,
            )
            self.memory.save(record_turn(state, turn))
            challenge = challenge_score(plan)
            self.registry.add(
                MessageRecord(
                    message_id=message_id,
                    conversation_id=conversation_id,
                    prompt=text,
                    challenge=challenge,
                    created_at=time.time(),
                )
            )
            self._message_traces[message_id] = message_id
            return MessageResult(
                message_id=message_id,
                conversation_id=conversation_id,
                answer=answer,
                trace_id=message_id,
                timings_ms=timings,
                intent_kind=parsed.intent.kind,
                inherited=tuple(sorted(parsed.inherited)),
                challenge=challenge,
                parse_trace=self.interpreter.explain(parsed),
            )

    def run_conversation(self, prompts: list[str]) -> list[TurnOutcome]:
        """Ephemeral in-memory conversation; used by the golden harness."""
        state = ConversationState(conversation_id="ephemeral")
        outcomes: list[TurnOutcome] = []
        for i, prompt in enumerate(prompts):
            parsed, _plan, answer, _timings = self._answer(
                state, prompt, f"ephemeral-{uuid.uuid4().hex}"
            )
            digest = hashlib.sha256(answer.text.encode("utf-8")).hexdigest()
            state = record_turn(
                state,
                TurnRecord(
                    turn_index=i,
                    user_prompt=prompt,
                    intent_kind=parsed.intent.kind,
                    entity_ids=parsed.entity_ids,
                    stat_keys=parsed.stat_keys,
                    scope=parsed.scope,
                    answer_digest=digest,
                ),
            )
            outcomes.append(
                TurnOutcome(
                    intent_kind=parsed.intent.kind,
                    answer=answer,
                    inherited=tuple(sorted(parsed.inherited)),
                )
            )
        return outcomes

    # --- auxiliary surfaces ---------------------------------------------------------

    def get_trace(self, trace_id: str) -> TraceLog:
        return self.bus.trace(trace_id)

    def record_feedback(
        self, message_id: str, rating: str, comment: Optional[str] = None
    ) -> FeedbackRecord:
        return self.feedback_store.record_feedback(message_id, rating, comment)

    def eval_queue(self) -> list[EvalQueueItem]:
        return build_eval_queue(self.registry, self.feedback_store)

    def ingest(self, collection: str, records: Iterable[dict]) -> int:
        if collection == "chunks":
            if self.embedder is None:
                raise EngineError("no embedder: the engine started without a chunk corpus")
            from .vectors import chunk_from_record

            count = 0
            for record in records:
                chunk = chunk_from_record(record)
                self.index.add(chunk, self.embedder.embed(chunk.text))
                count += 1
            return count
        if collection == "traces":
            from .tracking import make_trace

            count = 0
            for record in records:
                self.tracking.add(
                    make_trace(record["play_id"], record["player_id"], record["samples"])
                )
                count += 1
            return count
        return self.store.ingest(records, collection)

    def bench_run(self, suite_path: str | Path) -> GoldenReport:
        suite = load_golden_suite(suite_path)
        report = run_golden(suite, self)
        report_path = Path(self.config.state_dir) / "bench_report.json"
        report_path.write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )
        return report

    def bench_report(self) -> Optional[dict]:
        report_path = Path(self.config.state_dir) / "bench_report.json"
        if not report_path.exists():
            return None
        return json.loads(report_path.read_text(encoding="utf-8"))

    def grammar_dump(self) -> dict:
        return self.interpreter.grammar_dump()

    def plan_preview(self, prompt: str, conversation_id: Optional[str] = None) -> dict:
        state = (
            self.memory.load(conversation_id)
            if conversation_id and self.conversation_exists(conversation_id)
            else ConversationState(conversation_id="preview")
        )
        parsed = self.interpreter.parse(prompt, state)
        return plan_to_json(build_plan(parsed))
