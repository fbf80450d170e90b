from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from gridiron.service.app import create_app


@pytest.fixture()
def client(engine):
    return TestClient(create_app(engine=engine))


def new_conversation(client) -> str:
    response = client.post("/v1/conversations")
    assert response.status_code == 201
    return response.json()["conversation_id"]


def send(client, conversation_id, text):
    return client.post(
        f"/v1/conversations/{conversation_id}/messages", json={"text": text}
    )


# --- conversations ---------------------------------------------------------------

def test_two_conversations_have_distinct_urlsafe_ids(client):
    a, b = new_conversation(client), new_conversation(client)
    assert a != b
    for conversation_id in (a, b):
        assert conversation_id.isalnum()


def test_new_conversation_has_zero_turns(client, engine):
    conversation_id = new_conversation(client)
    assert engine.memory.load(conversation_id).turns == ()


def test_fan_engagement_three_message_sequence(client):
    conversation_id = new_conversation(client)
    first = send(client, conversation_id, "Who has more passing yards this season mahomes or purdy?")
    assert first.status_code == 200
    assert "2,454" in first.json()["answer"]["text"]
    assert "2,208" in first.json()["answer"]["text"]

    second = send(client, conversation_id, "But who has more passing TDs?")
    assert second.status_code == 200
    assert "both have 12 passing touchdowns" in second.json()["answer"]["text"]
    assert "entities" in second.json()["inherited"]

    third = send(client, conversation_id, "Okay, so who is better?")
    assert third.status_code == 200
    verdict = third.json()["answer"]["verdict"]
    assert verdict["winner"] == "Patrick Mahomes"
    assert verdict["tally"] == {"Patrick Mahomes": 3, "Brock Purdy": 2}


def test_front_office_cap_table_flags_missing_2027(client):
    conversation_id = new_conversation(client)
    send(client, conversation_id, "What is Anthony Richardson's trade value?")
    send(client, conversation_id, "What is his market cap?")
    response = send(
        client, conversation_id, "How much space will that free up for the colts if he leaves?"
    )
    payload = response.json()["answer"]
    cap_table = payload["tables"][0]
    assert cap_table["rows"] == [
        [2023, 6180733.0], [2024, 7725916.0], [2025, 9271099.0], [2026, 10816283.0],
    ]
    assert "2027" in payload["text"]


def test_unknown_conversation_404(client):
    assert send(client, "deadbeef", "hello").status_code == 404


def test_empty_text_400(client):
    conversation_id = new_conversation(client)
    assert send(client, conversation_id, "   ").status_code == 400


def test_too_long_text_400(client):
    conversation_id = new_conversation(client)
    assert send(client, conversation_id, "x" * 5000).status_code == 400


def test_unparseable_prompt_422_with_hints(client):
    conversation_id = new_conversation(client)
    response = send(client, conversation_id, "zxq vvk plmm")
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["hints"]


def test_every_2xx_response_trace_resolves(client):
    conversation_id = new_conversation(client)
    prompts = [
        "Who has more passing yards this season mahomes or purdy?",
        "But who has more passing TDs?",
        "Okay, so who is better?",
    ]
    for prompt in prompts:
        response = send(client, conversation_id, prompt)
        assert response.status_code == 200
        trace_id = response.json()["trace_id"]
        trace = client.get(f"/v1/traces/{trace_id}")
        assert trace.status_code == 200


def test_trace_of_comparison_has_two_retrieval_requests(client):
    conversation_id = new_conversation(client)
    response = send(
        client, conversation_id, "Who has more passing yards this season mahomes or purdy?"
    )
    trace = client.get(f"/v1/traces/{response.json()['trace_id']}").json()
    requests = [e for e in trace["envelopes"] if e["kind"].startswith("request:")]
    assert len(requests) == 2


def test_expired_trace_404(make_engine):
    engine = make_engine(trace_retention=1)
    client = TestClient(create_app(engine=engine))
    conversation_id = new_conversation(client)
    first = send(client, conversation_id, "What is Anthony Richardson's trade value?")
    second = send(client, conversation_id, "What is his market cap?")
    assert client.get(f"/v1/traces/{second.json()['trace_id']}").status_code == 200
    assert client.get(f"/v1/traces/{first.json()['trace_id']}").status_code == 404


def test_trace_json_round_trips_byte_identically(client):
    conversation_id = new_conversation(client)
    response = send(
        client, conversation_id, "Who has more passing yards this season mahomes or purdy?"
    )
    raw = client.get(f"/v1/traces/{response.json()['trace_id']}").content
    reserialized = json.dumps(
        json.loads(raw), sort_keys=True, separators=(",", ":")
    ).encode()
    assert raw == reserialized


# --- feedback -------------------------------------------------------------------------

def test_feedback_round_trip_and_latest_wins(client, engine):
    conversation_id = new_conversation(client)
    response = send(client, conversation_id, "Build me the perfect team from the 2022 season.")
    message_id = response.json()["message_id"]
    down = client.post(
        f"/v1/messages/{message_id}/feedback",
        json={"rating": "down", "comment": "OB isn't a position in Football"},
    )
    assert down.status_code == 200
    assert engine.feedback_store.get(message_id).comment == "OB isn't a position in Football"
    up = client.post(f"/v1/messages/{message_id}/feedback", json={"rating": "up"})
    assert up.status_code == 200
    assert engine.feedback_store.get(message_id).rating == "up"


def test_feedback_unknown_message_404(client):
    response = client.post("/v1/messages/nope/feedback", json={"rating": "down"})
    assert response.status_code == 404


def test_feedback_feeds_eval_queue(client):
    conversation_id = new_conversation(client)
    response = send(client, conversation_id, "Okay, so who is better mahomes or purdy?")
    message_id = response.json()["message_id"]
    client.post(f"/v1/messages/{message_id}/feedback", json={"rating": "down"})
    queue = client.get("/v1/eval/queue").json()
    entry = next(e for e in queue if "better" in e["prompt"])
    assert entry["thumbs_down_count"] == 1
    assert entry["priority"] == entry["challenge"] + 2.0


# --- replay determinism ------------------------------------------------------------------

REPLAY_PROMPTS = [
    "Who has more passing yards this season mahomes or purdy?",
    "But who has more passing TDs?",
    "Okay, so who is better?",
]


def test_restart_replay_yields_byte_identical_answers(tmp_path):
    from gridiron.config import EngineConfig
    from gridiron.engine import Engine

    from conftest import FIXTURES_DIR

    state_dir = tmp_path / "state"
    config = EngineConfig(fixtures_dir=str(FIXTURES_DIR), state_dir=str(state_dir))

    first_client = TestClient(create_app(engine=Engine(config)))
    conversation_id = new_conversation(first_client)
    before = [
        send(first_client, conversation_id, p).json()["answer"]["text"]
        for p in REPLAY_PROMPTS
    ]

    # restart: a fresh engine over the same state/fixtures, new conversation
    second_client = TestClient(create_app(engine=Engine(config)))
    replay_id = new_conversation(second_client)
    after = [
        send(second_client, replay_id, p).json()["answer"]["text"]
        for p in REPLAY_PROMPTS
    ]
    assert before == after


# --- auxiliary endpoints --------------------------------------------------------------------

def test_bench_run_and_report_endpoints(client, fixtures_dir):
    run = client.post("/v1/bench/run", json={"suite_path": str(fixtures_dir / "golden")})
    assert run.status_code == 200
    assert run.json()["accuracy"] == 1.0
    report = client.get("/v1/bench/report")
    assert report.status_code == 200
    assert report.json()["accuracy"] == 1.0


def test_bench_report_404_before_any_run(client):
    assert client.get("/v1/bench/report").status_code == 404


def test_ingest_endpoint_counts_records(client, engine):
    records = [
        {"player_id": "player_test", "season": 2024, "week": 1, "pass_yards": 10},
        {"player_id": "player_test", "season": 2024, "week": 2, "pass_yards": 20},
    ]
    response = client.post(
        "/v1/ingest/player_season_stats", json={"records": records}
    )
    assert response.status_code == 200
    assert response.json()["count"] == 2


def test_ingest_rejection_is_400(client):
    response = client.post(
        "/v1/ingest/player_season_stats", json={"records": [{"season": 2024}]}
    )
    assert response.status_code == 400


def test_grammar_endpoint_dumps_patterns(client):
    payload = client.get("/v1/grammar").json()
    assert any(p["id"] == "stat_comparison_more_v1" for p in payload["grammar"]["patterns"])


def test_plan_preview_endpoint(client):
    payload = client.get(
        "/v1/plan", params={"prompt": "Who has more passing yards this season mahomes or purdy?"}
    ).json()
    assert payload["challenge_score"] == 2.0


def test_healthz(client):
    assert client.get("/v1/healthz").json() == {"status": "ok"}
