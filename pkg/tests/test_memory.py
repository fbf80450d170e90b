from __future__ import annotations

import pytest

from gridiron.catalog import Scope
from gridiron.errors import SequenceError
from gridiron.memory import (
    ConversationState,
    MemoryStore,
    TurnRecord,
    is_followup,
    record_turn,
    referents,
)


def turn(index, prompt, entities=(), stats=(), scope=None, intent="StatComparison"):
    return TurnRecord(
        turn_index=index,
        user_prompt=prompt,
        intent_kind=intent,
        entity_ids=tuple(entities),
        stat_keys=tuple(stats),
        scope=scope,
        answer_digest="digest",
    )


SCOPE = Scope(season=2024, through_week=10)


def test_first_turn_promotes_entities_in_prompt_order():
    state = ConversationState(conversation_id="c")
    state = record_turn(
        state,
        turn(0, "who has more passing yards mahomes or purdy",
             entities=["player_mahomes", "player_purdy"], stats=["pass_yards"], scope=SCOPE),
    )
    assert state.salient_entities == ("player_mahomes", "player_purdy")
    assert state.last_scope == SCOPE
    assert state.last_stat == "pass_yards"


def test_pronoun_followup_keeps_referent_at_head():
    state = ConversationState(conversation_id="c")
    state = record_turn(state, turn(0, "trade value?", entities=["player_richardson"]))
    state = record_turn(state, turn(1, "What is his market cap?",
                                    entities=["player_richardson"], intent="CapQuery"))
    assert state.salient_entities[0] == "player_richardson"


def test_out_of_order_turn_index_raises():
    state = ConversationState(conversation_id="c")
    state = record_turn(state, turn(0, "first"))
    with pytest.raises(SequenceError):
        record_turn(state, turn(2, "skipped"))


def test_salience_is_deduplicated_and_capped():
    state = ConversationState(conversation_id="c")
    for i in range(12):
        state = record_turn(state, turn(i, f"prompt {i}", entities=[f"e{i}", "e_common"]))
    assert len(state.salient_entities) == 8
    assert state.salient_entities.count("e_common") == 1
    assert state.salient_entities[0] == "e11"


def test_replaying_turns_yields_identical_state():
    turns = [
        turn(0, "a", entities=["x"], stats=["pass_yards"], scope=SCOPE),
        turn(1, "b", entities=["y"]),
        turn(2, "c", entities=["x", "z"]),
    ]
    one = ConversationState(conversation_id="c")
    two = ConversationState(conversation_id="c")
    for t in turns:
        one = record_turn(one, t)
    for t in turns:
        two = record_turn(two, t)
    assert one == two


def test_followup_discourse_marker():
    state = record_turn(ConversationState(conversation_id="c"), turn(0, "start"))
    flag, reason = is_followup("But who has more passing TDs?", state)
    assert flag and reason == "discourse marker"


def test_followup_false_on_first_turn():
    flag, reason = is_followup(
        "Who has more passing yards this season mahomes or purdy?",
        ConversationState(conversation_id="c"),
    )
    assert not flag and reason == "first turn"


def test_followup_pronoun():
    state = record_turn(ConversationState(conversation_id="c"), turn(0, "richardson"))
    flag, reason = is_followup("What is his market cap?", state)
    assert flag and reason == "pronoun"


def test_followup_what_about_marker():
    state = record_turn(ConversationState(conversation_id="c"), turn(0, "start"))
    flag, reason = is_followup("What about rushing yards?", state)
    assert flag and reason == "discourse marker"


def test_followup_probe_detects_entityless_prompt():
    state = record_turn(ConversationState(conversation_id="c"), turn(0, "seed"))
    flag, reason = is_followup("who leads the league then", state, entity_probe=lambda p: 0)
    assert flag and reason == "no entities in prompt"
    flag, _ = is_followup("who leads the league then", state, entity_probe=lambda p: 1)
    assert not flag


def test_referents_fresh_and_after_turns():
    state = ConversationState(conversation_id="c")
    assert referents(state) == ()
    state = record_turn(state, turn(0, "ravens weakness", entities=["team_ravens"]))
    state = record_turn(
        state, turn(1, "mismatches", entities=["team_min", "team_ravens"])
    )
    assert set(referents(state)) == {"team_ravens", "team_min"}
    assert referents(state)[0] == "team_min"


def test_memory_store_round_trip(tmp_path):
    store = MemoryStore(tmp_path)
    state = ConversationState(conversation_id="conv1")
    state = record_turn(
        state,
        turn(0, "who has more passing yards mahomes or purdy",
             entities=["player_mahomes", "player_purdy"], stats=["pass_yards"], scope=SCOPE),
    )
    store.save(state)
    loaded = store.load("conv1")
    assert loaded == state
    assert store.exists("conv1")
    assert not store.exists("conv2")
