"""Accuracy measurement, latency histograms, feedback capture, and the
challenge-scored evaluation queue with hard-example prioritization."""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Protocol

from .agents import Answer
from .errors import EmptySuite, NonPositiveBucket, UnknownMessage

THUMBS_DOWN_WEIGHT = 2.0
HISTOGRAM_CAP_S = 20.0  # final open bucket collects outliers beyond this


# --- golden cases ------------------------------------------------------------

@dataclass(frozen=True)
class ExpectedFact:
    name: str
    value: object  # scalar matched against answer fields, or text substring
    kind: str = "value"  # value | text | table_rows


@dataclass(frozen=True)
class GoldenTurn:
    prompt: str
    expected_intent: str
    expected_facts: tuple[ExpectedFact, ...]


@dataclass(frozen=True)
class GoldenCase:
    case_id: str
    turns: tuple[GoldenTurn, ...]

    def __post_init__(self) -> None:
        for turn in self.turns:
            if not turn.expected_facts:
                raise ValueError(f"{self.case_id}: every turn needs at least one expected fact")


@dataclass(frozen=True)
class TurnOutcome:
    intent_kind: str
    answer: Answer
    inherited: tuple[str, ...] = ()


class ConversationEngine(Protocol):
    def run_conversation(self, prompts: list[str]) -> list[TurnOutcome]: ...


def golden_case_from_json(data: dict) -> GoldenCase:
    return GoldenCase(
        case_id=data["case_id"],
        turns=tuple(
            GoldenTurn(
                prompt=turn["prompt"],
                expected_intent=turn["expected_intent"],
                expected_facts=tuple(
                    ExpectedFact(
                        name=fact["name"],
                        value=fact["value"],
                        kind=fact.get("kind", "value"),
                    )
                    for fact in turn["expected_facts"]
                ),
            )
            for turn in data["turns"]
        ),
    )


def load_golden_suite(path: str | Path) -> list[GoldenCase]:
    """A suite is a directory of case JSON files or one JSON file of cases."""
    path = Path(path)
    if path.is_dir():
        return [
            golden_case_from_json(json.loads(p.read_text(encoding="utf-8")))
            for p in sorted(path.glob("*.json"))
        ]
    data = json.loads(path.read_text(encoding="utf-8"))
    cases = data if isinstance(data, list) else data["cases"]
    return [golden_case_from_json(c) for c in cases]


_NUMERAL = re.compile(r"-?\$?\d[\d,]*(?:\.\d+)?")


def answer_scalars(answer: Answer) -> tuple[set[float], str]:
    """Numbers extractable from answer fields plus the searchable text blob."""
    numbers: set[float] = set()
    for token in _NUMERAL.findall(answer.text):
        cleaned = token.replace(",", "").replace("$", "")
        try:
            numbers.add(float(cleaned))
        except ValueError:
            continue
    blob_parts = [answer.text]
    for table in answer.tables:
        for row in table.rows:
            for cell in row:
                if isinstance(cell, bool):
                    continue
                if isinstance(cell, (int, float)):
                    numbers.add(float(cell))
                elif isinstance(cell, str):
                    blob_parts.append(cell)
    if answer.verdict:
        blob_parts.append(json.dumps(answer.verdict))
    for play_id, url in answer.media_links:
        blob_parts.append(play_id)
        blob_parts.append(url)
    return numbers, "\n".join(blob_parts)


def fact_holds(fact: ExpectedFact, answer: Answer) -> bool:
    numbers, blob = answer_scalars(answer)
    if fact.kind == "table_rows":
        return any(len(t.rows) == fact.value for t in answer.tables)
    if fact.kind == "text" or isinstance(fact.value, str):
        return str(fact.value).lower() in blob.lower()
    return float(fact.value) in numbers


@dataclass
class CaseOutcome:
    case_id: str
    passed: bool
    turn_failures: list[str]


@dataclass
class GoldenReport:
    accuracy: float
    outcomes: list[CaseOutcome]

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "cases": [
                {
                    "case_id": o.case_id,
                    "passed": o.passed,
                    "failures": o.turn_failures,
                }
                for o in self.outcomes
            ],
        }

    def summary(self) -> str:
        lines = [f"golden accuracy: {self.accuracy:.2%} ({len(self.outcomes)} cases)"]
        for outcome in self.outcomes:
            status = "PASS" if outcome.passed else "FAIL"
            lines.append(f"  [{status}] {outcome.case_id}")
            for failure in outcome.turn_failures:
                lines.append(f"      - {failure}")
        return "\n".join(lines)


def run_golden(suite: list[GoldenCase], engine: ConversationEngine) -> GoldenReport:
    """Binary good/bad per case: every turn's intent and facts must match."""
    if not suite:
        raise EmptySuite("golden suite contains no cases")
    outcomes = []
    for case in suite:
        failures: list[str] = []
        try:
            results = engine.run_conversation([turn.prompt for turn in case.turns])
        except Exception as exc:  # noqa: BLE001 - a crashing case is a failing case
            outcomes.append(
                CaseOutcome(case.case_id, False, [f"conversation failed: {exc}"])
            )
            continue
        for i, (turn, outcome) in enumerate(zip(case.turns, results)):
            if outcome.intent_kind != turn.expected_intent:
                failures.append(
                    f"turn {i}: intent {outcome.intent_kind} != {turn.expected_intent}"
                )
            for fact in turn.expected_facts:
                if not fact_holds(fact, outcome.answer):
                    failures.append(f"turn {i}: fact {fact.name} ({fact.value!r}) not found")
        if len(results) < len(case.turns):
            failures.append("conversation returned too few turns")
        outcomes.append(CaseOutcome(case.case_id, not failures, failures))
    passes = sum(1 for o in outcomes if o.passed)
    return GoldenReport(accuracy=passes / len(outcomes), outcomes=outcomes)


# --- latency histogram ---------------------------------------------------------

@dataclass
class LatencyHistogram:
    bucket_width: float
    cap: float
    counts: list[int]  # closed buckets [0,w), [w,2w), ... then one open bucket
    mean: float
    total: int

    def to_json(self) -> dict:
        edges = [
            [round(i * self.bucket_width, 6), round((i + 1) * self.bucket_width, 6)]
            for i in range(len(self.counts) - 1)
        ]
        edges.append([round(self.cap, 6), None])
        return {
            "bucket_width": self.bucket_width,
            "cap": self.cap,
            "buckets": [
                {"low": low, "high": high, "count": count}
                for (low, high), count in zip(edges, self.counts)
            ],
            "mean": self.mean,
            "total": self.total,
        }


def latency_histogram(
    samples: Iterable[float], bucket_width: float, cap: float = HISTOGRAM_CAP_S
) -> LatencyHistogram:
    """Counts over [0,w), [w,2w), ... with a final open bucket past `cap`."""
    if bucket_width <= 0:
        raise NonPositiveBucket(f"bucket_width must be positive, got {bucket_width}")
    values = list(samples)
    closed = max(1, int(cap // bucket_width) + (0 if cap % bucket_width == 0 else 1))
    counts = [0] * (closed + 1)
    for value in values:
        if value >= cap:
            counts[-1] += 1
        else:
            counts[min(int(value // bucket_width), closed - 1)] += 1
    mean = sum(values) / len(values) if values else 0.0
    return LatencyHistogram(
        bucket_width=bucket_width, cap=cap, counts=counts, mean=mean, total=len(values)
    )


# --- feedback and the evaluation queue ----------------------------------------

@dataclass(frozen=True)
class FeedbackRecord:
    message_id: str
    rating: str  # up | down
    comment: Optional[str]
    created_at: float


@dataclass(frozen=True)
class EvalQueueItem:
    prompt: str
    challenge: float
    thumbs_down_count: int
    enqueued_at: float

    def __post_init__(self) -> None:
        if self.challenge < 0 or self.thumbs_down_count < 0:
            raise ValueError("challenge and thumbs_down_count must be non-negative")


def priority(item: EvalQueueItem, weight: float = THUMBS_DOWN_WEIGHT) -> float:
    return item.challenge + weight * item.thumbs_down_count


def prioritize(
    queue: list[EvalQueueItem], weight: float = THUMBS_DOWN_WEIGHT
) -> list[EvalQueueItem]:
    """Descending priority; equal priority keeps FIFO order by enqueued_at."""
    return sorted(queue, key=lambda item: (-priority(item, weight), item.enqueued_at))


@dataclass(frozen=True)
class MessageRecord:
    message_id: str
    conversation_id: str
    prompt: str
    challenge: float
    created_at: float


class MessageRegistry:
    """Append-only log of answered messages; survives restarts."""

    def __init__(self, state_dir: str | Path):
        self.path = Path(state_dir) / "messages.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, MessageRecord] = {}
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        data = json.loads(line)
                        self._records[data["message_id"]] = MessageRecord(**data)

    def add(self, record: MessageRecord) -> None:
        self._records[record.message_id] = record
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record.__dict__, sort_keys=True) + "\n")

    def get(self, message_id: str) -> Optional[MessageRecord]:
        return self._records.get(message_id)

    def all(self) -> list[MessageRecord]:
        return list(self._records.values())


class FeedbackStore:
    """One rating per message, latest wins; persisted as a JSON document."""

    def __init__(self, state_dir: str | Path, registry: MessageRegistry):
        self.path = Path(state_dir) / "feedback.json"
        self.registry = registry
        self._records: dict[str, FeedbackRecord] = {}
        if self.path.exists():
            data = json.loads(self.path.read_text(encoding="utf-8"))
            for message_id, record in data.items():
                self._records[message_id] = FeedbackRecord(**record)

    def record_feedback(
        self,
        message_id: str,
        rating: str,
        comment: Optional[str] = None,
        *,
        now: Optional[float] = None,
    ) -> FeedbackRecord:
        if self.registry.get(message_id) is None:
            raise UnknownMessage(message_id)
        if rating not in ("up", "down"):
            raise ValueError(f"rating must be 'up' or 'down', got {rating!r}")
        record = FeedbackRecord(
            message_id=message_id,
            rating=rating,
            comment=comment,
            created_at=time.time() if now is None else now,
        )
        self._records[message_id] = record
        self.path.write_text(
            json.dumps(
                {mid: rec.__dict__ for mid, rec in sorted(self._records.items())},
                sort_keys=True,
            ),
            encoding="utf-8",
        )
        return record

    def get(self, message_id: str) -> Optional[FeedbackRecord]:
        return self._records.get(message_id)

    def thumbs_down_count(self, prompt: str) -> int:
        count = 0
        for record in self._records.values():
            if record.rating != "down":
                continue
            message = self.registry.get(record.message_id)
            if message is not None and message.prompt == prompt:
                count += 1
        return count


def build_eval_queue(
    registry: MessageRegistry, feedback: FeedbackStore
) -> list[EvalQueueItem]:
    """One queue item per distinct prompt, thumbs-downs aggregated."""
    by_prompt: dict[str, EvalQueueItem] = {}
    for message in sorted(registry.all(), key=lambda m: m.created_at):
        if message.prompt not in by_prompt:
            by_prompt[message.prompt] = EvalQueueItem(
                prompt=message.prompt,
                challenge=message.challenge,
                thumbs_down_count=feedback.thumbs_down_count(message.prompt),
                enqueued_at=message.created_at,
            )
    return prioritize(list(by_prompt.values()))
