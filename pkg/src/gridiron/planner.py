"""Decomposes parsed queries into a DAG of retrieval sub-tasks.

Independent sub-tasks land in the same stage and may run in parallel;
edges force sequential stages. The structural challenge score feeds the
evaluation queue's hard-example prioritization.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Union

from .catalog import Scope
from .errors import CycleError, UnsupportedIntent
from .interpreter import ParsedQuery
from .structured import Aggregate, Condition, RankQuery, StructuredQuery
from .tracking import TrackingQuery
from .vectors import VectorQuery

TARGETS = ("structured", "tracking", "vector")

Payload = Union[StructuredQuery, RankQuery, TrackingQuery, VectorQuery]


@dataclass(frozen=True)
class ParentColumnRef:
    """Placeholder filter value resolved at dispatch from a parent node's table."""

    node_id: str
    column: str


@dataclass(frozen=True)
class PlanNode:
    node_id: str
    target: str  # structured | tracking | vector
    payload: Payload
    label: str
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class QueryPlan:
    nodes: tuple[PlanNode, ...]
    edges: tuple[tuple[str, str], ...]
    origin: Optional[ParsedQuery] = None

    def node(self, node_id: str) -> PlanNode:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)


def _node_id(*parts: object) -> str:
    digest = hashlib.sha1("|".join(str(p) for p in parts).encode("utf-8")).hexdigest()
    return digest[:12]


def _payload_kind(payload: Payload) -> str:
    if isinstance(payload, StructuredQuery):
        return "structured_query"
    if isinstance(payload, RankQuery):
        return "rank_query"
    if isinstance(payload, TrackingQuery):
        return "tracking_query"
    return "vector_query"


def payload_kind(node: PlanNode) -> str:
    return _payload_kind(node.payload)


def _scope_conditions(scope: Scope, season_field: str = "season") -> list[Condition]:
    conditions = [Condition(season_field, "=", scope.season)]
    if scope.through_week is not None:
        conditions.append(Condition("week", "<=", scope.through_week))
    return conditions


def _stat_sum_node(parsed: ParsedQuery, entity_id: str, stat_key: str, aggregation: str) -> PlanNode:
    scope = parsed.scope
    agg_op = aggregation if aggregation in ("sum", "mean", "max", "last") else "sum"
    query = StructuredQuery(
        collection="player_season_stats",
        filter=tuple(
            [Condition("player_id", "=", entity_id)] + _scope_conditions(scope)
        ),
        aggregates=(Aggregate(agg_op, stat_key, "value"),),
    )
    return PlanNode(
        node_id=_node_id(parsed.intent.kind, entity_id, stat_key, scope.describe()),
        target="structured",
        payload=query,
        label=f"{stat_key} for {entity_id} ({scope.describe()})",
        meta={"entity_id": entity_id, "stat_key": stat_key, "role": "stat"},
    )


def _rank_node(parsed: ParsedQuery, entity_id: str, metric: str, scope: Scope, role: str) -> PlanNode:
    return PlanNode(
        node_id=_node_id(parsed.intent.kind, entity_id, metric, scope.describe()),
        target="structured",
        payload=RankQuery(metric=metric, entity_id=entity_id, scope=scope),
        label=f"rank of {entity_id} on {metric} ({scope.describe()})",
        meta={"entity_id": entity_id, "metric": metric, "role": role},
    )


def build_plan(parsed: ParsedQuery) -> QueryPlan:
    kind = parsed.intent.kind
    builder = _PLAN_RULES.get(kind)
    if builder is None:
        raise UnsupportedIntent(f"no planner rule for intent {kind}")
    nodes, edges = builder(parsed)
    return QueryPlan(nodes=tuple(nodes), edges=tuple(edges), origin=parsed)


def _plan_stat_comparison(parsed: ParsedQuery):
    stat = parsed.stat_keys[0]
    nodes = [
        _stat_sum_node(parsed, entity.entity_id, stat, "sum")
        for entity in parsed.entities
    ]
    return nodes, []


def _plan_metric_verdict(parsed: ParsedQuery):
    metrics = parsed.intent.param("metrics", [])
    nodes = [
        _rank_node(parsed, entity.entity_id, metric, parsed.scope, "verdict")
        for entity in parsed.entities
        for metric in metrics
    ]
    return nodes, []


def _plan_record_query(parsed: ParsedQuery):
    entity = parsed.entities[0]
    params = parsed.intent.parameters
    query = StructuredQuery(
        collection="game_logs",
        filter=(
            Condition("player_id", "=", entity.entity_id),
            Condition("season", "in", list(params["seasons"])),
            Condition("opponent_conference", "=", params["conference"]),
            Condition("played", "=", True),
        ),
        group_by=("result",),
        aggregates=(Aggregate("count", "*", "games"),),
        sort=("result", "desc"),  # W before L
    )
    node = PlanNode(
        node_id=_node_id("RecordQuery", entity.entity_id, params["conference"], params["seasons"]),
        target="structured",
        payload=query,
        label=f"game record for {entity.entity_id} vs {params['conference']}",
        meta={"entity_id": entity.entity_id, "role": "record"},
    )
    return [node], []


def _plan_team_weakness(parsed: ParsedQuery):
    team = parsed.entities[0]
    metrics = parsed.intent.param("metrics", [])
    nodes = [
        _rank_node(parsed, team.entity_id, metric, parsed.scope, "weakness")
        for metric in metrics
    ]
    return nodes, []


def _plan_team_mismatch(parsed: ParsedQuery):
    params = parsed.intent.parameters
    offense, defense = params["offense_team"], params["defense_team"]
    nodes = []
    for off_metric, def_metric in params["pairs"]:
        nodes.append(_rank_node(parsed, offense, off_metric, parsed.scope, "mismatch_offense"))
        nodes.append(_rank_node(parsed, defense, def_metric, parsed.scope, "mismatch_defense"))
    return nodes, []


def _plan_roster_build(parsed: ParsedQuery):
    params = parsed.intent.parameters
    season, metric = params["season"], params["metric"]
    nodes = []
    for position in params["positions"]:
        query = StructuredQuery(
            collection="metric_ranks",
            filter=(
                Condition("metric", "=", metric),
                Condition("season", "=", season),
                Condition("position", "=", position),
            ),
            sort=("value", "desc"),
            limit=1,
        )
        nodes.append(
            PlanNode(
                node_id=_node_id("RosterBuild", position, metric, season),
                target="structured",
                payload=query,
                label=f"best {position} by {metric}, {season}",
                meta={"position": position, "metric": metric, "role": "roster_slot"},
            )
        )
    return nodes, []


def _plan_cap_query(parsed: ParsedQuery):
    player = parsed.entities[0]
    years = list(parsed.intent.param("years", []))
    conditions = [Condition("player_id", "=", player.entity_id)]
    if years:
        conditions.append(Condition("year", "in", years))
    query = StructuredQuery(
        collection="cap_table",
        filter=tuple(conditions),
        group_by=("year",),
        aggregates=(Aggregate("sum", "cap_savings", "cap_savings"),),
        sort=("year", "asc"),
    )
    node = PlanNode(
        node_id=_node_id("CapQuery", player.entity_id, years),
        target="structured",
        payload=query,
        label=f"cap savings for {player.entity_id}",
        meta={"entity_id": player.entity_id, "role": "cap", "years": years},
    )
    return [node], []


def _plan_context_search(parsed: ParsedQuery):
    params = parsed.intent.parameters
    topic_node = PlanNode(
        node_id=_node_id("ContextSearch", params["topic"], params.get("k")),
        target="vector",
        payload=VectorQuery(text=params["topic"], k=params.get("k", 3)),
        label=f"context chunks for {params['topic']!r}",
        meta={"role": "context", "topic": params["topic"]},
    )
    if not params.get("profile"):
        return [topic_node], []
    # Profile prompts fan out biographical context, a metric rank, and a
    # seasonal stat in parallel.
    entity = parsed.entities[0]
    rank = _rank_node(parsed, entity.entity_id, params["metric"], parsed.scope, "profile_rank")
    stat = _stat_sum_node(parsed, entity.entity_id, params["stat"], "sum")
    return [topic_node, rank, stat], []


def _plan_video_lookup(parsed: ParsedQuery):
    entity = parsed.entities[0]
    params = parsed.intent.parameters
    scope = parsed.scope
    play_filter = StructuredQuery(
        collection="plays",
        filter=(
            Condition("passer_id", "=", entity.entity_id),
            Condition("coverage", "=", params["coverage"]),
            Condition("season", "=", scope.season),
            Condition("week", "=", scope.through_week),
        ),
        sort=("play_id", "asc"),
    )
    filter_node = PlanNode(
        node_id=_node_id("VideoLookup", entity.entity_id, params["coverage"], "filter"),
        target="structured",
        payload=play_filter,
        label=f"plays by {entity.entity_id} vs {params['coverage']}",
        meta={"entity_id": entity.entity_id, "role": "play_filter"},
    )
    media_query = StructuredQuery(
        collection="plays",
        filter=(Condition("play_id", "in", ParentColumnRef(filter_node.node_id, "play_id")),),
        sort=("play_id", "asc"),
    )
    media_node = PlanNode(
        node_id=_node_id("VideoLookup", entity.entity_id, params["coverage"], "media"),
        target="structured",
        payload=media_query,
        label="resolve media links for matched plays",
        meta={"role": "media"},
    )
    return [filter_node, media_node], [(filter_node.node_id, media_node.node_id)]


def _plan_stat_lookup(parsed: ParsedQuery):
    lookup = parsed.intent.param("lookup", "stat")
    if lookup == "metric_rank":
        entity = parsed.entities[0]
        metric = parsed.intent.param("metric")
        return [_rank_node(parsed, entity.entity_id, metric, parsed.scope, "rank_lookup")], []
    if lookup == "play_success":
        params = parsed.intent.parameters
        query = StructuredQuery(
            collection="plays",
            filter=(
                Condition("play_type", "=", params["play_type"]),
                Condition("half", "=", params["half"]),
                Condition("season", "=", parsed.scope.season),
            ),
            aggregates=(
                Aggregate("mean", "success", "success_rate"),
                Aggregate("count", "*", "plays"),
            ),
        )
        node = PlanNode(
            node_id=_node_id("StatLookup", params["play_type"], params["half"]),
            target="structured",
            payload=query,
            label=f"success rate on {params['play_type']} plays, half {params['half']}",
            meta={"role": "play_success", "play_type": params["play_type"]},
        )
        return [node], []
    entity = parsed.entities[0]
    stat = parsed.stat_keys[0]
    return [_stat_sum_node(parsed, entity.entity_id, stat, "sum")], []


_PLAN_RULES = {
    "StatComparison": _plan_stat_comparison,
    "MetricVerdict": _plan_metric_verdict,
    "RecordQuery": _plan_record_query,
    "TeamWeakness": _plan_team_weakness,
    "TeamMismatch": _plan_team_mismatch,
    "RosterBuild": _plan_roster_build,
    "CapQuery": _plan_cap_query,
    "ContextSearch": _plan_context_search,
    "VideoLookup": _plan_video_lookup,
    "StatLookup": _plan_stat_lookup,
}


def stages(plan: QueryPlan) -> list[set[str]]:
    """Topological layering: stage k holds nodes whose predecessors all sit earlier."""
    node_ids = [n.node_id for n in plan.nodes]
    known = set(node_ids)
    for from_id, to_id in plan.edges:
        if from_id not in known or to_id not in known:
            raise ValueError(f"edge endpoint not in plan: {(from_id, to_id)}")
    preds: dict[str, set[str]] = {nid: set() for nid in node_ids}
    for from_id, to_id in plan.edges:
        preds[to_id].add(from_id)

    placed: set[str] = set()
    layers: list[set[str]] = []
    remaining = list(node_ids)
    while remaining:
        ready = {nid for nid in remaining if preds[nid] <= placed}
        if not ready:
            blocked = min(remaining)
            back_edge = next(
                (from_id, to_id)
                for from_id, to_id in plan.edges
                if to_id == blocked and from_id not in placed
            )
            raise CycleError(back_edge)
        layers.append(ready)
        placed |= ready
        remaining = [nid for nid in remaining if nid not in placed]
    return layers


DEFAULT_SCORE_WEIGHTS = {"node": 1.0, "edge": 1.0, "stage": 1.0, "target": 1.0}


def challenge_score(plan: QueryPlan, weights: Optional[dict[str, float]] = None) -> float:
    """node_count + edge_count + (stages - 1) + (distinct targets - 1), weighted."""
    w = weights or DEFAULT_SCORE_WEIGHTS
    if not plan.nodes:
        return 0.0
    stage_count = len(stages(plan))
    target_count = len({n.target for n in plan.nodes})
    return (
        w["node"] * len(plan.nodes)
        + w["edge"] * len(plan.edges)
        + w["stage"] * (stage_count - 1)
        + w["target"] * (target_count - 1)
    )


def plan_to_json(plan: QueryPlan) -> dict:
    stage_list = [sorted(layer) for layer in stages(plan)]
    return {
        "nodes": [
            {
                "node_id": n.node_id,
                "target": n.target,
                "payload_kind": payload_kind(n),
                "label": n.label,
            }
            for n in plan.nodes
        ],
        "edges": [list(e) for e in plan.edges],
        "stages": stage_list,
        "challenge_score": challenge_score(plan),
    }
