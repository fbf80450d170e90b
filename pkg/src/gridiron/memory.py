"""Per-conversation dialogue state: salient entities, scope, and stat carryover."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from .catalog import Catalog, EntityRecord, Scope
from .errors import SequenceError
from .text import tokenize

SALIENCE_DEPTH = 8

DISCOURSE_MARKERS = ("what about", "but", "and", "okay", "so")
UNBOUND_PRONOUNS = {"he", "his", "she", "her", "they", "their", "that", "it"}


@dataclass(frozen=True)
class FeedbackNote:
    rating: str
    comment: Optional[str] = None


@dataclass(frozen=True)
class TurnRecord:
    """One completed exchange; `parsed` is kept as a lightweight summary."""

    turn_index: int
    user_prompt: str
    intent_kind: str
    entity_ids: tuple[str, ...]
    stat_keys: tuple[str, ...]
    scope: Optional[Scope]
    answer_digest: str
    feedback: Optional[FeedbackNote] = None


@dataclass(frozen=True)
class ConversationState:
    conversation_id: str
    turns: tuple[TurnRecord, ...] = ()
    salient_entities: tuple[str, ...] = ()  # entity ids, most recent mention first
    last_scope: Optional[Scope] = None
    last_stat: Optional[str] = None

    @property
    def is_fresh(self) -> bool:
        return not self.turns


def record_turn(state: ConversationState, turn: TurnRecord, depth: int = SALIENCE_DEPTH) -> ConversationState:
    """Append a turn, promoting its entities to the front of the salience list."""
    expected = (state.turns[-1].turn_index + 1) if state.turns else 0
    if turn.turn_index != expected:
        raise SequenceError(
            f"turn_index {turn.turn_index} out of order (expected {expected})"
        )
    promoted = list(turn.entity_ids)
    for entity_id in state.salient_entities:
        if entity_id not in promoted:
            promoted.append(entity_id)
    return replace(
        state,
        turns=state.turns + (turn,),
        salient_entities=tuple(promoted[:depth]),
        last_scope=turn.scope or state.last_scope,
        last_stat=(turn.stat_keys[0] if turn.stat_keys else state.last_stat),
    )


def is_followup(
    prompt: str,
    state: ConversationState,
    entity_probe: Optional[Callable[[str], int]] = None,
) -> tuple[bool, str]:
    """Classify a prompt as a follow-up to the conversation so far.

    `entity_probe`, when given, reports how many catalog entities the prompt
    mentions; a mention-free prompt against a non-empty history counts as a
    follow-up.
    """
    if state.is_fresh:
        return False, "first turn"
    tokens = tokenize(prompt)
    joined = " ".join(tokens)
    for marker in DISCOURSE_MARKERS:
        if joined == marker or joined.startswith(marker + " "):
            return True, "discourse marker"
    if any(token in UNBOUND_PRONOUNS for token in tokens):
        return True, "pronoun"
    if entity_probe is not None and entity_probe(prompt) == 0:
        return True, "no entities in prompt"
    return False, "self-contained prompt"


def referents(state: ConversationState) -> tuple[str, ...]:
    """Salient entity ids, most recent first; empty for fresh state."""
    return state.salient_entities


def resolve_referents(state: ConversationState, catalog: Catalog) -> list[EntityRecord]:
    return [catalog.entity(eid) for eid in state.salient_entities if eid in catalog.entities]


# --- persistence -----------------------------------------------------------

def _scope_to_json(scope: Optional[Scope]) -> Optional[dict]:
    if scope is None:
        return None
    return {
        "season": scope.season,
        "through_week": scope.through_week,
        "game_filter": scope.game_filter,
    }


def _scope_from_json(data: Optional[dict]) -> Optional[Scope]:
    if data is None:
        return None
    return Scope(
        season=data["season"],
        through_week=data.get("through_week"),
        game_filter=data.get("game_filter"),
    )


def state_to_json(state: ConversationState) -> dict:
    return {
        "conversation_id": state.conversation_id,
        "turns": [
            {
                "turn_index": t.turn_index,
                "user_prompt": t.user_prompt,
                "intent_kind": t.intent_kind,
                "entity_ids": list(t.entity_ids),
                "stat_keys": list(t.stat_keys),
                "scope": _scope_to_json(t.scope),
                "answer_digest": t.answer_digest,
                "feedback": (
                    {"rating": t.feedback.rating, "comment": t.feedback.comment}
                    if t.feedback
                    else None
                ),
            }
            for t in state.turns
        ],
        "salient_entities": list(state.salient_entities),
        "last_scope": _scope_to_json(state.last_scope),
        "last_stat": state.last_stat,
    }


def state_from_json(data: dict) -> ConversationState:
    turns = tuple(
        TurnRecord(
            turn_index=t["turn_index"],
            user_prompt=t["user_prompt"],
            intent_kind=t["intent_kind"],
            entity_ids=tuple(t["entity_ids"]),
            stat_keys=tuple(t["stat_keys"]),
            scope=_scope_from_json(t.get("scope")),
            answer_digest=t["answer_digest"],
            feedback=(
                FeedbackNote(rating=t["feedback"]["rating"], comment=t["feedback"].get("comment"))
                if t.get("feedback")
                else None
            ),
        )
        for t in data["turns"]
    )
    return ConversationState(
        conversation_id=data["conversation_id"],
        turns=turns,
        salient_entities=tuple(data["salient_entities"]),
        last_scope=_scope_from_json(data.get("last_scope")),
        last_stat=data.get("last_stat"),
    )


class MemoryStore:
    """One JSON document per conversation, flushed after each turn."""

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, conversation_id: str) -> Path:
        return self.state_dir / f"{conversation_id}.json"

    def exists(self, conversation_id: str) -> bool:
        return self._path(conversation_id).exists()

    def save(self, state: ConversationState) -> None:
        payload = json.dumps(state_to_json(state), sort_keys=True)
        self._path(state.conversation_id).write_text(payload, encoding="utf-8")

    def load(self, conversation_id: str) -> ConversationState:
        raw = self._path(conversation_id).read_text(encoding="utf-8")
        return state_from_json(json.loads(raw))

    def conversation_ids(self) -> list[str]:
        return sorted(p.stem for p in self.state_dir.glob("*.json"))
