from __future__ import annotations

import pytest

from gridiron.config import EngineConfig
from gridiron.errors import MissingContext, Unparseable, UnresolvedEntity
from gridiron.interpreter import EngineClock, Interpreter
from gridiron.memory import ConversationState, TurnRecord, record_turn
from gridiron.text import tokenize

CLOCK = EngineClock(season=2024, week=10)


@pytest.fixture(scope="module")
def interp(catalog):
    config = EngineConfig()
    return Interpreter(
        catalog,
        CLOCK,
        verdict_metrics=config.verdict_metrics,
        roster_positions=config.roster_positions,
        team_offense_metrics=config.team_offense_metrics,
        team_defense_metrics=config.team_defense_metrics,
        mismatch_pairs=[tuple(p) for p in config.mismatch_pairs],
    )


def advance(interp, state, prompt):
    parsed = interp.parse(prompt, state)
    new_state = record_turn(
        state,
        TurnRecord(
            turn_index=len(state.turns),
            user_prompt=prompt,
            intent_kind=parsed.intent.kind,
            entity_ids=parsed.entity_ids,
            stat_keys=parsed.stat_keys,
            scope=parsed.scope,
            answer_digest="d",
        ),
    )
    return parsed, new_state


def fresh():
    return ConversationState(conversation_id="t")


# --- tokenize ---------------------------------------------------------------

def test_tokenize_transcript_prompt():
    assert tokenize("Who has more passing yards this season mahomes or purdy?") == [
        "who", "has", "more", "passing", "yards", "this", "season", "mahomes", "or", "purdy",
    ]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_keeps_hyphenated_record():
    assert tokenize("7-5 record") == ["7-5", "record"]


def test_tokenize_strips_possessives():
    assert tokenize("Kirk Cousins' record; Richardson's value") == [
        "kirk", "cousins", "record", "richardson", "value",
    ]


# --- golden corpus ----------------------------------------------------------

def test_fan_engagement_three_turns(interp):
    state = fresh()
    parsed, state = advance(interp, state, "Who has more passing yards this season mahomes or purdy?")
    assert parsed.intent.kind == "StatComparison"
    assert parsed.stat_keys == ("pass_yards",)
    assert [e.canonical_name for e in parsed.entities] == ["Patrick Mahomes", "Brock Purdy"]
    assert parsed.scope.season == 2024 and parsed.scope.through_week == 10
    assert parsed.inherited == frozenset()

    parsed, state = advance(interp, state, "But who has more passing TDs?")
    assert parsed.intent.kind == "StatComparison"
    assert parsed.stat_keys == ("pass_td",)
    assert [e.canonical_name for e in parsed.entities] == ["Patrick Mahomes", "Brock Purdy"]
    assert parsed.inherited == frozenset({"entities", "scope"})

    parsed, state = advance(interp, state, "Okay, so who is better?")
    assert parsed.intent.kind == "MetricVerdict"
    assert len(parsed.entities) == 2
    assert set(parsed.intent.param("metrics")) == {
        "passing_composite", "qb_accuracy", "qb_decision_making", "qb_iq", "twar",
    }
    assert "entities" in parsed.inherited


def test_broadcast_record_query(interp):
    parsed, _ = advance(
        interp, fresh(),
        "What was Kirk Cousins' record against AFC teams during the 2021, 2022, and 2023 seasons?",
    )
    assert parsed.intent.kind == "RecordQuery"
    assert parsed.entities[0].canonical_name == "Kirk Cousins"
    assert parsed.intent.param("conference") == "AFC"
    assert parsed.intent.param("seasons") == [2021, 2022, 2023]


def test_coach_weakness_and_mismatch(interp):
    state = fresh()
    parsed, state = advance(
        interp, state,
        "What is the offensive weakness of the Baltimore Ravens in the 2024 NFL regular season?",
    )
    assert parsed.intent.kind == "TeamWeakness"
    assert parsed.entities[0].canonical_name == "Baltimore Ravens"
    assert parsed.intent.param("side") == "offense"
    assert parsed.scope.through_week == 10

    parsed, state = advance(
        interp, state,
        "What are the mismatches between the Minnesota Vikings' defense and "
        "Baltimore Ravens' offense in the 2024 NFL regular season?",
    )
    assert parsed.intent.kind == "TeamMismatch"
    assert parsed.intent.param("offense_team") == "team_ravens"
    assert parsed.intent.param("defense_team") == "team_min"


def test_front_office_three_turns(interp):
    state = fresh()
    parsed, state = advance(interp, state, "What is Anthony Richardson's trade value?")
    assert parsed.intent.kind == "StatLookup"
    assert parsed.intent.param("lookup") == "metric_rank"
    assert parsed.intent.param("metric") == "twar"
    assert parsed.entities[0].canonical_name == "Anthony Richardson"

    parsed, state = advance(interp, state, "What is his market cap?")
    assert parsed.intent.kind == "CapQuery"
    assert parsed.entities[0].canonical_name == "Anthony Richardson"
    assert parsed.intent.param("years") == [2024]
    assert "entities" in parsed.inherited

    parsed, state = advance(
        interp, state, "How much space will that free up for the colts if he leaves?"
    )
    assert parsed.intent.kind == "CapQuery"
    assert parsed.intent.param("years") == [2023, 2024, 2025, 2026, 2027]
    assert parsed.entities[0].canonical_name == "Anthony Richardson"
    assert any(e.canonical_name == "Indianapolis Colts" for e in parsed.entities)
    assert "entities" in parsed.inherited


def test_roster_build_prompt(interp):
    parsed, _ = advance(interp, fresh(), "Build me the perfect team from the 2022 season.")
    assert parsed.intent.kind == "RosterBuild"
    assert parsed.intent.param("season") == 2022
    assert parsed.intent.param("metric") == "twar"
    assert len(parsed.intent.param("positions")) == 10


def test_cover_two_video_prompt(interp):
    parsed, _ = advance(
        interp, fresh(), "How did Patrick Mahomes perform against Cover 2 in last night's game?"
    )
    assert parsed.intent.kind == "VideoLookup"
    assert parsed.intent.param("coverage") == "cover 2"
    assert parsed.scope.game_filter == "last_game"


def test_outside_zone_success_prompt(interp):
    parsed, _ = advance(
        interp, fresh(), "What was our success rate on outside zone plays in the second half?"
    )
    assert parsed.intent.kind == "StatLookup"
    assert parsed.intent.param("lookup") == "play_success"
    assert parsed.intent.param("play_type") == "outside_zone"
    assert parsed.intent.param("half") == 2


def test_free_agent_prompt(interp):
    parsed, _ = advance(
        interp, fresh(),
        "Which free agents have excelled in man-to-man coverage over the past two seasons?",
    )
    assert parsed.intent.kind == "ContextSearch"
    assert "man-to-man" in parsed.intent.param("topic")


# --- errors -----------------------------------------------------------------

def test_nonsense_prompt_unparseable_with_hints(interp):
    with pytest.raises(Unparseable) as excinfo:
        interp.parse("zxq vvk plmm", fresh())
    assert len(excinfo.value.nearest_patterns) == 3


def test_unknown_player_is_unresolved(interp):
    with pytest.raises(UnresolvedEntity):
        interp.parse("What is Johnny Nobody's trade value?", fresh())


def test_followup_without_memory_is_missing_context(interp):
    with pytest.raises(MissingContext):
        interp.parse("But who has more passing TDs?", fresh())


def test_pronoun_without_memory_is_missing_context(interp):
    with pytest.raises(MissingContext):
        interp.parse("What is his market cap?", fresh())


# --- explain ------------------------------------------------------------------

def test_explain_lists_inherited_fields(interp):
    state = fresh()
    _, state = advance(interp, state, "Who has more passing yards this season mahomes or purdy?")
    parsed, _ = advance(interp, state, "But who has more passing TDs?")
    trace = interp.explain(parsed)
    assert "inherited: entities, scope" in trace
    assert "pattern: stat_comparison_more_v1" in trace


def test_explain_fresh_lookup_has_no_inherited(interp):
    parsed, _ = advance(interp, fresh(), "How many passing yards does Brock Purdy have this season?")
    trace = interp.explain(parsed)
    assert "inherited: none" in trace
    assert "pattern:" in trace


# --- determinism + grounding ----------------------------------------------------

def test_parse_is_deterministic(interp):
    state = fresh()
    prompt = "Who has more passing yards this season mahomes or purdy?"
    first = interp.parse(prompt, state)
    second = interp.parse(prompt, state)
    assert first == second


def test_parse_never_fabricates_identifiers(interp, catalog):
    prompts = [
        "Who has more passing yards this season mahomes or purdy?",
        "What is Anthony Richardson's trade value?",
        "Build me the perfect team from the 2022 season.",
        "What is the offensive weakness of the Baltimore Ravens in the 2024 NFL regular season?",
    ]
    for prompt in prompts:
        parsed = interp.parse(prompt, fresh())
        for entity in parsed.entities:
            assert entity.entity_id in catalog.entities
        for key in parsed.stat_keys:
            assert catalog.has_key(key)


def test_followup_inheritance_never_invents_entities(interp, catalog):
    conversations = [
        ["Who has more passing yards this season mahomes or purdy?",
         "But who has more passing TDs?",
         "Okay, so who is better?"],
        ["What is Anthony Richardson's trade value?",
         "What is his market cap?",
         "How much space will that free up for the colts if he leaves?"],
    ]
    for prompts in conversations:
        state = fresh()
        for prompt in prompts:
            salient_before = set(state.salient_entities)
            parsed, state = advance(interp, state, prompt)
            in_prompt = catalog.alias_hits(prompt)
            for entity in parsed.entities:
                assert entity.entity_id in in_prompt | salient_before


def test_grammar_dump_contains_patterns_and_lexicon(interp):
    dump = interp.grammar_dump()
    assert {p["id"] for p in dump["grammar"]["patterns"]} >= {
        "stat_comparison_more_v1", "verdict_v1", "roster_build_v1",
    }
    assert dump["lexicon"]["stats"]["passing yards"] == "pass_yards"
