from __future__ import annotations

import random

import pytest

from gridiron.catalog import Scope
from gridiron.errors import NotRanked, RecordRejected, UnknownCollection, UnknownField
from gridiron.structured import (
    Aggregate,
    Condition,
    DocumentStore,
    StructuredQuery,
)

from helpers import naive_execute, random_structured_query


@pytest.fixture(scope="module")
def store(fixtures_dir):
    store = DocumentStore()
    for name in ("player_season_stats", "game_logs", "metric_ranks", "cap_table", "plays"):
        store.ingest_file(fixtures_dir / f"{name}.jsonl", name)
    return store


# --- ingestion --------------------------------------------------------------

def test_ingest_count_matches_line_count(fixtures_dir):
    store = DocumentStore()
    lines = [
        line
        for line in (fixtures_dir / "cap_table.jsonl").read_text().splitlines()
        if line.strip()
    ]
    assert store.ingest_file(fixtures_dir / "cap_table.jsonl", "cap_table") == len(lines)


def test_ingest_cap_table_has_four_richardson_rows(store):
    rows = [
        d for d in store.documents("cap_table") if d["player_id"] == "player_richardson"
    ]
    assert len(rows) == 4
    assert {d["year"] for d in rows} == {2023, 2024, 2025, 2026}


def test_record_without_key_field_is_rejected_with_index():
    store = DocumentStore()
    records = [
        {"player_id": "p", "season": 2024, "week": 1, "pass_yards": 100},
        {"season": 2024, "week": 2, "pass_yards": 50},
    ]
    with pytest.raises(RecordRejected, match="record 1"):
        store.ingest(records, "player_season_stats")


def test_upsert_is_idempotent(fixtures_dir):
    once = DocumentStore()
    once.ingest_file(fixtures_dir / "player_season_stats.jsonl", "player_season_stats")
    twice = DocumentStore()
    twice.ingest_file(fixtures_dir / "player_season_stats.jsonl", "player_season_stats")
    twice.ingest_file(fixtures_dir / "player_season_stats.jsonl", "player_season_stats")
    assert once.documents("player_season_stats") == twice.documents("player_season_stats")


def test_upsert_replaces_in_place():
    store = DocumentStore()
    store.ingest(
        [{"play_id": "p1", "success": False}, {"play_id": "p2", "success": True}], "plays"
    )
    store.ingest([{"play_id": "p1", "success": True}], "plays")
    docs = store.documents("plays")
    assert [d["play_id"] for d in docs] == ["p1", "p2"]
    assert docs[0]["success"] is True


# --- execute: transcript values -----------------------------------------------

def sum_yards(store, player_id):
    table = store.execute(
        StructuredQuery(
            collection="player_season_stats",
            filter=(
                Condition("player_id", "=", player_id),
                Condition("season", "=", 2024),
                Condition("week", "<=", 10),
            ),
            aggregates=(Aggregate("sum", "pass_yards", "value"),),
        )
    )
    return table.rows[0][table.columns.index("value")]


def test_purdy_2454_through_week_10(store):
    assert sum_yards(store, "player_purdy") == 2454


def test_mahomes_2208_through_week_10(store):
    assert sum_yards(store, "player_mahomes") == 2208


def test_cousins_record_7_and_5(store):
    table = store.execute(
        StructuredQuery(
            collection="game_logs",
            filter=(
                Condition("player_id", "=", "player_cousins"),
                Condition("season", "in", [2021, 2022, 2023]),
                Condition("opponent_conference", "=", "AFC"),
                Condition("played", "=", True),
            ),
            group_by=("result",),
            aggregates=(Aggregate("count", "*", "games"),),
            sort=("result", "desc"),
        )
    )
    assert table.columns == ["result", "games"]
    assert table.rows == [["W", 7], ["L", 5]]


def test_richardson_cap_by_year_has_no_2027_row(store):
    table = store.execute(
        StructuredQuery(
            collection="cap_table",
            filter=(Condition("player_id", "=", "player_richardson"),),
            group_by=("year",),
            aggregates=(Aggregate("sum", "cap_savings", "cap_savings"),),
            sort=("year", "asc"),
        )
    )
    assert table.rows == [
        [2023, 6180733.0],
        [2024, 7725916.0],
        [2025, 9271099.0],
        [2026, 10816283.0],
    ]


def test_filter_on_empty_collection_returns_empty_table():
    store = DocumentStore()
    store.ingest([], "plays")
    table = store.execute(
        StructuredQuery(collection="plays", filter=(Condition("play_id", "=", "x"),))
    )
    assert table.rows == []


def test_unknown_collection_raises(store):
    with pytest.raises(UnknownCollection):
        store.execute(StructuredQuery(collection="nope"))


def test_strict_mode_rejects_unknown_field(fixtures_dir):
    store = DocumentStore(strict=True)
    store.ingest_file(fixtures_dir / "plays.jsonl", "plays")
    with pytest.raises(UnknownField):
        store.execute(
            StructuredQuery(collection="plays", filter=(Condition("bogus", "=", 1),))
        )
    # non-strict mode returns an empty result instead
    relaxed = DocumentStore()
    relaxed.ingest_file(fixtures_dir / "plays.jsonl", "plays")
    assert relaxed.execute(
        StructuredQuery(collection="plays", filter=(Condition("bogus", "=", 1),))
    ).rows == []


def test_absent_fields_never_match_any_operator(store):
    # team rank rows carry no player position field
    for op, value in (("=", "QB"), ("!=", "QB"), ("<", "ZZ"), (">=", "AA")):
        table = store.execute(
            StructuredQuery(
                collection="metric_ranks",
                filter=(
                    Condition("entity_id", "=", "team_ravens"),
                    Condition("position", op, value),
                ),
            )
        )
        assert table.rows == []


def test_sort_is_stable_for_equal_keys():
    store = DocumentStore()
    store.ingest(
        [
            {"play_id": f"p{i}", "score": 1 if i < 3 else 0, "ordinal": i}
            for i in range(6)
        ],
        "plays",
    )
    table = store.execute(
        StructuredQuery(collection="plays", sort=("score", "desc"))
    )
    ordinals = table.column("ordinal")
    assert ordinals == [0, 1, 2, 3, 4, 5]


# --- rank lookup -----------------------------------------------------------------

def test_rank_lookup_richardson_twar(store):
    rank, population, value = store.rank_lookup(
        "twar", "player_richardson", Scope(season=2024, through_week=10)
    )
    assert (rank, population, value) == (39, 48, 0.10)


def test_rank_lookup_ravens_run_blocking_has_no_value(store):
    rank, population, value = store.rank_lookup(
        "run_blocking", "team_ravens", Scope(season=2024, through_week=10)
    )
    assert (rank, population) == (19, 32)
    assert value is None


def test_rank_lookup_mahomes_2022_season_end_value(store):
    rank, population, value = store.rank_lookup(
        "twar", "player_mahomes", Scope(season=2022)
    )
    assert value == 5.79
    assert rank == 1


def test_rank_lookup_unranked_raises(store):
    with pytest.raises(NotRanked):
        store.rank_lookup("twar", "player_cousins", Scope(season=2024, through_week=10))


# --- oracle equivalence (small; the full 500-query run lives in acceptance) --------

SCHEMAS = {
    "player_season_stats": {
        "player_id": ("str", ["player_mahomes", "player_purdy", "player_cousins"]),
        "season": ("num", [2024, 2023]),
        "week": ("num", [1, 3, 5, 8, 10, 11]),
        "pass_yards": ("num", [100, 200, 250, 300]),
        "pass_td": ("num", [0, 1, 2, 3]),
    },
    "plays": {
        "play_id": ("str", ["P2024W10KC001", "P2024W10OZ201"]),
        "season": ("num", [2024]),
        "week": ("num", [10]),
        "half": ("num", [1, 2]),
        "play_type": ("str", ["outside_zone", "dropback"]),
        "success": ("bool", [True, False]),
    },
}


def test_execute_matches_naive_interpreter_on_random_queries(store):
    rng = random.Random(42)
    for _ in range(120):
        collection = rng.choice(list(SCHEMAS))
        query = random_structured_query(rng, collection, SCHEMAS[collection])
        table = store.execute(query)
        columns, rows = naive_execute(store.documents(collection), query)
        assert table.columns == columns
        assert table.rows == rows
