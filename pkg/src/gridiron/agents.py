"""Concrete agents: prompt augmentation, retrieval handlers, and synthesis.

Synthesis turns node results into an answer skeleton (findings, tables,
media links, verdict); a pluggable generator renders the skeleton to text.
The default template generator is deterministic; alternative generators may
only change prose, never tables, media links, or the verdict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from .catalog import Catalog, EntityRecord, Scope
from .errors import NoUsableSubAnswers
from .interpreter import EngineClock, ParsedQuery
from .memory import ConversationState, resolve_referents
from .planner import ParentColumnRef, PlanNode
from .runtime import NodeFailure
from .structured import Condition, DocumentStore, RankQuery, ResultTable, StructuredQuery
from .tracking import TrackingQuery, TrackingStore, derive_kinematics, field_coverage
from .vectors import Embedder, VectorIndex, VectorQuery, kind_filter

POSITION_PHRASES = {
    "QB": "quarterback",
    "RB": "running back",
    "WR": "wide receiver",
    "TE": "tight end",
    "OT": "offensive tackle",
    "IOL": "interior offensive lineman",
    "EDGE": "edge rusher",
    "DT": "defensive tackle",
    "ILB": "inside linebacker",
    "OB-LB": "off-ball linebacker",
}

METRIC_SHORT_NAMES = {"twar": "tWAR"}


def possessive(name: str) -> str:
    return name + "'" if name.endswith("s") else name + "'s"


# --- prompt augmentation -----------------------------------------------------

@dataclass(frozen=True)
class AugmentedPrompt:
    original: str
    injected_scope: Scope
    injected_context: tuple[tuple[str, str], ...]
    clock: tuple[int, int]


def augment(
    prompt: str, state: ConversationState, clock: EngineClock, catalog: Catalog
) -> AugmentedPrompt:
    """Resolve clock deixis and attach referent snippets from memory."""
    scope = Scope(season=clock.season, through_week=clock.week)
    context: list[tuple[str, str]] = []
    for record in resolve_referents(state, catalog):
        context.append(("referent", record.canonical_name))
    if state.last_stat is not None:
        context.append(("last_stat", state.last_stat))
    return AugmentedPrompt(
        original=prompt,
        injected_scope=scope,
        injected_context=tuple(context),
        clock=(clock.season, clock.week),
    )


# --- sub-answers and retrieval agents ---------------------------------------

@dataclass(frozen=True)
class SubAnswer:
    node_id: str
    kind: str  # table | rank | kinematics | chunks
    body: object
    source_note: str
    meta: dict = field(default_factory=dict)


def _resolve_parent_refs(query: StructuredQuery, parents: dict) -> StructuredQuery:
    resolved = []
    for condition in query.filter:
        value = condition.value
        if isinstance(value, ParentColumnRef):
            parent = parents.get(value.node_id)
            if parent is None or isinstance(parent, NodeFailure):
                raise RuntimeError(f"parent node {value.node_id} unavailable")
            table: ResultTable = parent.body
            value = table.column(value.column)
            resolved.append(Condition(condition.field, condition.op, value))
        else:
            resolved.append(condition)
    return StructuredQuery(
        collection=query.collection,
        filter=tuple(resolved),
        group_by=query.group_by,
        aggregates=query.aggregates,
        sort=query.sort,
        limit=query.limit,
    )


class StructuredRetrievalAgent:
    """Serves table queries and rank lookups from the document store."""

    def __init__(self, store: DocumentStore):
        self.store = store

    def __call__(self, node: PlanNode, context: dict) -> SubAnswer:
        payload = node.payload
        if isinstance(payload, RankQuery):
            rank, population, value = self.store.rank_lookup(
                payload.metric, payload.entity_id, payload.scope
            )
            return SubAnswer(
                node_id=node.node_id,
                kind="rank",
                body={"rank": rank, "population": population, "value": value},
                source_note=f"metric_ranks: {payload.metric} for {payload.entity_id}",
                meta=dict(node.meta),
            )
        query = _resolve_parent_refs(payload, context.get("parents", {}))
        table = self.store.execute(query)
        return SubAnswer(
            node_id=node.node_id,
            kind="table",
            body=table,
            source_note=table.provenance,
            meta=dict(node.meta),
        )


class TrackingRetrievalAgent:
    """Derives kinematic and coverage summaries for matching traces."""

    def __init__(self, store: TrackingStore):
        self.store = store

    def __call__(self, node: PlanNode, context: dict) -> SubAnswer:
        payload: TrackingQuery = node.payload
        summaries = []
        for trace in self.store.query_traces(payload.play_id, payload.player_id):
            kinematics = derive_kinematics(trace) if len(trace.samples) >= 2 else None
            coverage = field_coverage(trace)
            summaries.append(
                {
                    "play_id": trace.play_id,
                    "player_id": trace.player_id,
                    "max_speed": kinematics.max_speed if kinematics else 0.0,
                    "mean_speed": kinematics.mean_speed if kinematics else 0.0,
                    "cells_visited": coverage.cells_visited,
                }
            )
        return SubAnswer(
            node_id=node.node_id,
            kind="kinematics",
            body=summaries,
            source_note=f"tracking: {payload}",
            meta=dict(node.meta),
        )


class VectorRetrievalAgent:
    """Embeds the query text and serves exact top-k cosine matches."""

    def __init__(self, embedder: Embedder, index: VectorIndex):
        self.embedder = embedder
        self.index = index

    def __call__(self, node: PlanNode, context: dict) -> SubAnswer:
        payload: VectorQuery = node.payload
        embedding = self.embedder.embed(payload.text)
        if embedding.degenerate:
            hits: list = []
            note = "query shares no vocabulary with the corpus"
        else:
            predicate = None
            if payload.source_kind or payload.entity_tag:
                predicate = kind_filter(payload.source_kind, payload.entity_tag)
            hits = self.index.search(embedding, payload.k, predicate)
            note = f"vector index: top {payload.k} for {payload.text!r}"
        return SubAnswer(
            node_id=node.node_id,
            kind="chunks",
            body=hits,
            source_note=note,
            meta=dict(node.meta),
        )


# --- answer skeleton and generators ------------------------------------------

@dataclass
class Answer:
    text: str
    tables: list[ResultTable]
    media_links: list[tuple[str, str]]
    verdict: Optional[dict]
    failures: list[str]

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "tables": [t.to_json() for t in self.tables],
            "media_links": [{"play_id": p, "url": u} for p, u in self.media_links],
            "verdict": self.verdict,
            "failures": self.failures,
        }


@dataclass
class AnswerSkeleton:
    intent_kind: str
    findings: list[dict]
    tables: list[ResultTable]
    media_links: list[tuple[str, str]]
    verdict: Optional[dict]
    failures: list[str]


def fmt_count(value: float) -> str:
    """Thousands-separated count; integral floats render as integers."""
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, int):
        return f"{value:,}"
    return f"{value:,.1f}"


def fmt_money(value: float) -> str:
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    return f"${value:,}"


def fmt_ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def fmt_metric(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.2f}"


class TemplateGenerator:
    """Deterministic fixed-template rendering of an answer skeleton."""

    name = "template"

    def generate(self, skeleton: AnswerSkeleton) -> str:
        parts = [self._render(finding) for finding in skeleton.findings]
        parts.extend(
            f"Note: {failure} That sub-result is unavailable."
            for failure in skeleton.failures
        )
        if not parts:
            parts.append("No findings were produced for this prompt.")
        return "\n".join(part for part in parts if part)

    def _render(self, finding: dict) -> str:
        renderer = getattr(self, f"_render_{finding['kind']}")
        return renderer(finding)

    def _render_comparison(self, f: dict) -> str:
        stat = f["stat"]
        entries = f["entries"]  # [(name, value)], prompt order
        phrase = f["scope_phrase"]
        if f["tie"]:
            names = " and ".join(name for name, _ in entries)
            return f"{names} both have {fmt_count(entries[0][1])} {stat} {phrase}."
        winner, winner_value = f["winner"]
        others = [(n, v) for n, v in entries if n != winner]
        comparator = f.get("comparator", "more")
        if len(others) == 1:
            other, other_value = others[0]
            return (
                f"{winner} has {comparator} {stat} {phrase} than {other}. "
                f"{winner.split()[-1]} has a total of {fmt_count(winner_value)} {stat}, "
                f"while {other.split()[-1]} has {fmt_count(other_value)} {stat}."
            )
        ranking = ", ".join(f"{n} with {fmt_count(v)}" for n, v in f["ordered"])
        return f"{winner} leads in {stat} {phrase}: {ranking}."

    def _render_verdict(self, f: dict) -> str:
        a, b = f["names"]
        season, week = f["season"], f["week"]
        prefix = f"Between {a} and {b}, as of week {week} of the {season} NFL season, "
        if f["winner"] is None:
            sentence = prefix + "the verdict is even."
        else:
            winner = f["winner"]
            loser = b if winner == a else a
            sentence = prefix + f"{winner} is the better {f['position_phrase']}."
            won = f["metrics_won"][winner]
            sentence += (
                f" {winner.split()[-1]} ranks higher than {loser.split()[-1]} in "
                + _join_names(won)
                + "."
            )
        trailing = []
        for name in (a, b):
            if f["winner"] == name or not f["metrics_won"][name]:
                continue
            other = b if name == a else a
            trailing.append(
                f"However, {name.split()[-1]} has a higher ranking than "
                f"{other.split()[-1]} in {_join_names(f['metrics_won'][name])}."
            )
        return " ".join([sentence] + trailing)

    def _render_record(self, f: dict) -> str:
        who = f["name"]
        if f.get("team_phrase"):
            who += f", {f['position_phrase']} for the {f['team_phrase']}"
        return (
            f"{who}, had a {f['wins']}-{f['losses']} record against {f['conference']} teams "
            f"in the {f['season_phrase']}, counting only regular season games played."
        )

    def _render_weakness(self, f: dict) -> str:
        return (
            f"The {possessive(f['team'])} {f['side']} weakness in the {f['season']} NFL regular season"
            f"{f['week_phrase']} is their {f['metric']}. They are ranked "
            f"{fmt_ordinal(f['rank'])} out of {f['population']} teams in {f['metric']}, "
            "indicating below-average performance in this area."
        )

    def _render_mismatch_pair(self, f: dict) -> str:
        return (
            f"The {f['offense_team']} rank {fmt_ordinal(f['offense_rank'])} in the league in "
            f"{f['offense_metric']}, while the {possessive(f['defense_team'])} {f['defense_metric']} "
            f"ranks {fmt_ordinal(f['defense_rank'])}, a potential mismatch."
        )

    def _render_roster(self, f: dict) -> str:
        lines = [f"Best {f['season']} roster by {f['metric']}:"]
        for position, player, team, value in f["rows"]:
            lines.append(f"{position} | {player} | {team} | {fmt_metric(value)} {f['metric']}")
        return "\n".join(lines)

    def _render_cap_single(self, f: dict) -> str:
        if f["value"] is None:
            return f"No cap figure is available for {f['name']} in {f['year']}."
        return f"{possessive(f['name'])} market cap for {f['year']} is {fmt_money(f['value'])}."

    def _render_cap_table(self, f: dict) -> str:
        lines = [
            f"If {f['name']} leaves the {f['team']}, the {f['team']} will free up the "
            "following amounts of cap space:"
        ]
        for year, value in f["rows"]:
            lines.append(f"{year}: {fmt_money(value)}")
        if f["missing_years"]:
            missing = ", ".join(str(y) for y in f["missing_years"])
            lines.append(
                f"It appears that there is no information available for the amount of "
                f"cap space that would be freed up in {missing}."
            )
        return "\n".join(lines)

    def _render_stat_value(self, f: dict) -> str:
        return f"{f['name']} has {fmt_count(f['value'])} {f['stat']} {f['scope_phrase']}."

    def _render_rank_value(self, f: dict) -> str:
        who = f["name"]
        if f.get("team_phrase"):
            who += f", a {f['position_phrase']} for the {f['team_phrase']},"
        value_clause = (
            f" has a {f['metric']} of {fmt_metric(f['value'])}," if f["value"] is not None else ""
        )
        sentence = (
            f"{who}{value_clause} ranking {fmt_ordinal(f['rank'])} out of "
            f"{f['population']} {f['group']} in the League."
        )
        if f.get("tier"):
            sentence += f" This places their trade value in the {f['tier']} tier among {f['group']}."
        return sentence

    def _render_play_success(self, f: dict) -> str:
        pct = f["rate"] * 100.0
        return (
            f"Success rate on {f['play_type']} plays in the {f['half_phrase']} half: "
            f"{pct:.1f}% across {fmt_count(f['plays'])} plays."
        )

    def _render_chunks(self, f: dict) -> str:
        if not f["texts"]:
            return f"No indexed commentary matched {f['topic']!r}."
        lines = [f"Here is what the coverage says about {f['topic']}:"]
        lines.extend(f"- {text}" for text in f["texts"])
        return "\n".join(lines)

    def _render_media(self, f: dict) -> str:
        count = len(f["play_ids"])
        plays = "play" if count == 1 else "plays"
        return (
            f"{f['name']} faced {f['coverage']} on {count} {plays} in last night's game; "
            "video clips are linked below."
        )

    def _render_kinematics(self, f: dict) -> str:
        lines = [f"Tracking summary for {f['label']}:"]
        for row in f["rows"]:
            lines.append(
                f"- {row['player_id']} on {row['play_id']}: top speed "
                f"{row['max_speed']:.2f} yd/s over {row['cells_visited']} field cells"
            )
        return "\n".join(lines)


def _join_names(names: list[str]) -> str:
    if not names:
        return ""
    if len(names) == 1:
        return names[0]
    if len(names) == 2:
        return f"{names[0]} and {names[1]}"
    return ", ".join(names[:-1]) + f", and {names[-1]}"


class ExternalGenerator:
    """POSTs the skeleton to an external endpoint; prose only, never facts."""

    name = "external"

    def __init__(self, endpoint_url: str, timeout_s: float = 30.0):
        self.endpoint_url = endpoint_url
        self.timeout_s = timeout_s

    def generate(self, skeleton: AnswerSkeleton) -> str:
        import httpx

        payload = {
            "intent": skeleton.intent_kind,
            "findings": skeleton.findings,
            "failures": skeleton.failures,
        }
        response = httpx.post(
            self.endpoint_url, content=json.dumps(payload), timeout=self.timeout_s
        )
        response.raise_for_status()
        return response.json()["text"]


def generate(generator, skeleton: AnswerSkeleton) -> str:
    if not skeleton.findings and not skeleton.failures:
        raise ValueError("skeleton has neither findings nor failures")
    return generator.generate(skeleton)


# --- synthesis ---------------------------------------------------------------

class Synthesizer:
    """Integrates node results into one answer; numbers come only from results."""

    def __init__(
        self,
        generator,
        catalog: Catalog,
        clock: EngineClock,
        media_url_template: str,
        play_exists: Callable[[str], bool],
    ):
        self.generator = generator
        self.catalog = catalog
        self.clock = clock
        self.media_url_template = media_url_template
        self.play_exists = play_exists

    # helpers ------------------------------------------------------------------

    def _name(self, entity_id: str) -> str:
        record = self.catalog.entities.get(entity_id)
        return record.canonical_name if record else entity_id

    def _position_phrase(self, entity: EntityRecord) -> str:
        return POSITION_PHRASES.get(entity.position or "", "player")

    def _team_phrase(self, entity: EntityRecord, season: int) -> Optional[str]:
        for team_id, start, end in entity.affiliations:
            if start <= season <= end:
                return self._name(team_id)
        return None

    def _scope_phrase(self, scope: Scope) -> str:
        if scope.season == self.clock.season:
            return "this season"
        return f"in the {scope.season} season"

    def _split(self, sub_answers: dict) -> tuple[dict[str, SubAnswer], list[str]]:
        good: dict[str, SubAnswer] = {}
        failures: list[str] = []
        for node_id, outcome in sub_answers.items():
            if isinstance(outcome, NodeFailure):
                label = outcome.meta.get("entity_id") or outcome.meta.get("role") or node_id
                failures.append(f"sub-task for {label} failed ({outcome.reason}).")
            else:
                good[node_id] = outcome
        return good, failures

    # entry point ----------------------------------------------------------------

    def synthesize(self, parsed: ParsedQuery, sub_answers: dict) -> Answer:
        good, failures = self._split(sub_answers)
        if sub_answers and not good:
            raise NoUsableSubAnswers(
                f"every sub-task failed for intent {parsed.intent.kind}"
            )
        builder = getattr(self, f"_synthesize_{_snake(parsed.intent.kind)}")
        skeleton: AnswerSkeleton = builder(parsed, good)
        skeleton.failures.extend(failures)
        for play_id, _ in skeleton.media_links:
            if not self.play_exists(play_id):
                raise ValueError(f"media link references unknown play {play_id}")
        text = generate(self.generator, skeleton)
        return Answer(
            text=text,
            tables=skeleton.tables,
            media_links=skeleton.media_links,
            verdict=skeleton.verdict,
            failures=skeleton.failures,
        )

    def _skeleton(self, parsed: ParsedQuery) -> AnswerSkeleton:
        return AnswerSkeleton(
            intent_kind=parsed.intent.kind,
            findings=[],
            tables=[],
            media_links=[],
            verdict=None,
            failures=[],
        )

    # intent builders ---------------------------------------------------------------

    def _synthesize_stat_comparison(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        stat_key = parsed.stat_keys[0]
        stat_name = self.catalog.display_name(stat_key)
        entries: list[tuple[str, float]] = []
        for entity in parsed.entities:
            for sub in good.values():
                if sub.meta.get("entity_id") == entity.entity_id:
                    value = sub.body.rows[0][sub.body.columns.index("value")]
                    entries.append((entity.canonical_name, value))
                    break
        if not entries:
            raise NoUsableSubAnswers("no comparison values were retrieved")
        comparator = parsed.intent.param("comparator", "more")
        reverse = comparator == "more"
        ordered = sorted(entries, key=lambda e: (-e[1] if reverse else e[1], e[0]))
        tie = len({v for _, v in entries}) == 1
        skeleton.findings.append(
            {
                "kind": "comparison",
                "stat": stat_name,
                "entries": entries,
                "ordered": ordered,
                "winner": None if tie else ordered[0],
                "tie": tie,
                "comparator": comparator,
                "scope_phrase": self._scope_phrase(parsed.scope),
            }
        )
        skeleton.tables.append(
            ResultTable(
                columns=["player", stat_key],
                rows=[[name, value] for name, value in entries],
                provenance="stat comparison",
            )
        )
        return skeleton

    def _synthesize_metric_verdict(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        first, second = parsed.entities
        ranks: dict[tuple[str, str], dict] = {}
        for sub in good.values():
            ranks[(sub.meta["entity_id"], sub.meta["metric"])] = sub.body
        metrics = parsed.intent.param("metrics", [])
        metrics_won: dict[str, list[str]] = {
            first.canonical_name: [],
            second.canonical_name: [],
        }
        rows = []
        for metric in metrics:
            a = ranks.get((first.entity_id, metric))
            b = ranks.get((second.entity_id, metric))
            if a is None or b is None:
                continue
            display = self.catalog.display_name(metric)
            rows.append([display, a["rank"], b["rank"]])
            if a["rank"] < b["rank"]:
                metrics_won[first.canonical_name].append(display)
            elif b["rank"] < a["rank"]:
                metrics_won[second.canonical_name].append(display)
        if not rows:
            raise NoUsableSubAnswers("no metric ranks were retrieved")
        tally = {name: len(won) for name, won in metrics_won.items()}
        names = (first.canonical_name, second.canonical_name)
        if tally[names[0]] > tally[names[1]]:
            winner = names[0]
        elif tally[names[1]] > tally[names[0]]:
            winner = names[1]
        else:
            winner = None
        skeleton.verdict = {
            "winner": winner,
            "metrics_won": metrics_won,
            "tally": tally,
        }
        skeleton.findings.append(
            {
                "kind": "verdict",
                "names": list(names),
                "winner": winner,
                "metrics_won": metrics_won,
                "season": parsed.scope.season,
                "week": parsed.scope.through_week or self.clock.week,
                "position_phrase": self._position_phrase(first),
            }
        )
        skeleton.tables.append(
            ResultTable(
                columns=["metric", f"{names[0]} rank", f"{names[1]} rank"],
                rows=rows,
                provenance="metric rank comparison",
            )
        )
        return skeleton

    def _synthesize_record_query(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        entity = parsed.entities[0]
        params = parsed.intent.parameters
        sub = next(iter(good.values()))
        table: ResultTable = sub.body
        tallies = {row[0]: row[1] for row in table.rows}
        wins = int(tallies.get("W", 0))
        losses = int(tallies.get("L", 0))
        seasons = params["seasons"]
        season_phrase = (
            f"{seasons[0]}-{seasons[-1]} seasons" if len(seasons) > 1 else f"{seasons[0]} season"
        )
        team_phrase = self._team_phrase(entity, seasons[0]) or self._team_phrase(
            entity, seasons[-1]
        )
        skeleton.findings.append(
            {
                "kind": "record",
                "name": entity.canonical_name,
                "wins": wins,
                "losses": losses,
                "conference": params["conference"],
                "season_phrase": season_phrase,
                "team_phrase": team_phrase,
                "position_phrase": self._position_phrase(entity),
            }
        )
        skeleton.tables.append(table)
        return skeleton

    def _synthesize_team_weakness(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        team = parsed.entities[0]
        rows = []
        worst = None
        for sub in good.values():
            metric = sub.meta["metric"]
            body = sub.body
            rows.append([self.catalog.display_name(metric), body["rank"], body["population"]])
            if worst is None or body["rank"] > worst[1]["rank"]:
                worst = (metric, body)
        if worst is None:
            raise NoUsableSubAnswers("no team metric ranks were retrieved")
        metric, body = worst
        week = parsed.scope.through_week
        skeleton.findings.append(
            {
                "kind": "weakness",
                "team": team.canonical_name,
                "side": "offensive" if parsed.intent.param("side") == "offense" else "defensive",
                "metric": self.catalog.display_name(metric),
                "rank": body["rank"],
                "population": body["population"],
                "season": parsed.scope.season,
                "week_phrase": f", as of week {week}," if week is not None else "",
            }
        )
        rows.sort(key=lambda r: r[0])
        skeleton.tables.append(
            ResultTable(
                columns=["metric", "rank", "population"],
                rows=rows,
                provenance=f"metric ranks for {team.entity_id}",
            )
        )
        return skeleton

    def _synthesize_team_mismatch(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        params = parsed.intent.parameters
        offense = self._name(params["offense_team"])
        defense = self._name(params["defense_team"])
        ranks: dict[tuple[str, str], dict] = {}
        for sub in good.values():
            ranks[(sub.meta["entity_id"], sub.meta["metric"])] = sub.body
        rows = []
        for off_metric, def_metric in params["pairs"]:
            off = ranks.get((params["offense_team"], off_metric))
            dfn = ranks.get((params["defense_team"], def_metric))
            if off is None or dfn is None:
                continue
            skeleton.findings.append(
                {
                    "kind": "mismatch_pair",
                    "offense_team": offense,
                    "defense_team": defense,
                    "offense_metric": self.catalog.display_name(off_metric),
                    "defense_metric": self.catalog.display_name(def_metric),
                    "offense_rank": off["rank"],
                    "defense_rank": dfn["rank"],
                }
            )
            rows.append(
                [
                    self.catalog.display_name(off_metric),
                    off["rank"],
                    self.catalog.display_name(def_metric),
                    dfn["rank"],
                ]
            )
        if not skeleton.findings:
            raise NoUsableSubAnswers("no mismatch ranks were retrieved")
        skeleton.tables.append(
            ResultTable(
                columns=["offense metric", "offense rank", "defense metric", "defense rank"],
                rows=rows,
                provenance=f"mismatch ranks: {offense} offense vs {defense} defense",
            )
        )
        return skeleton

    def _synthesize_roster_build(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        params = parsed.intent.parameters
        rows = []
        for position in params["positions"]:
            for sub in good.values():
                if sub.meta.get("position") != position:
                    continue
                table: ResultTable = sub.body
                if not table.rows:
                    continue
                doc = dict(zip(table.columns, table.rows[0]))
                rows.append(
                    [
                        position,
                        self._name(doc.get("entity_id", "")),
                        doc.get("team", ""),
                        doc.get("value"),
                    ]
                )
        if not rows:
            raise NoUsableSubAnswers("no roster slots could be filled")
        metric_name = METRIC_SHORT_NAMES.get(
            params["metric"], self.catalog.display_name(params["metric"])
        )
        skeleton.findings.append(
            {
                "kind": "roster",
                "season": params["season"],
                "metric": metric_name,
                "rows": rows,
            }
        )
        skeleton.tables.append(
            ResultTable(
                columns=["position", "player", "team", params["metric"]],
                rows=rows,
                provenance=f"best {params['season']} roster by {params['metric']}",
            )
        )
        return skeleton

    def _synthesize_cap_query(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        player = parsed.entities[0]
        params = parsed.intent.parameters
        sub = next(iter(good.values()))
        table: ResultTable = sub.body
        year_idx = table.columns.index("year")
        value_idx = table.columns.index("cap_savings")
        found = {row[year_idx]: row[value_idx] for row in table.rows}
        expected = list(params.get("years") or found.keys())
        if params.get("horizon"):
            rows = [[year, found[year]] for year in expected if year in found]
            missing = [year for year in expected if year not in found]
            team = None
            for entity in parsed.entities:
                if entity.kind == "team":
                    team = entity.canonical_name
            skeleton.findings.append(
                {
                    "kind": "cap_table",
                    "name": player.canonical_name,
                    "team": team or "team",
                    "rows": rows,
                    "missing_years": missing,
                }
            )
            skeleton.tables.append(
                ResultTable(
                    columns=["year", "cap_savings"],
                    rows=rows,
                    provenance=table.provenance,
                )
            )
        else:
            year = expected[0]
            skeleton.findings.append(
                {
                    "kind": "cap_single",
                    "name": player.canonical_name,
                    "year": year,
                    "value": found.get(year),
                }
            )
            skeleton.tables.append(table)
        return skeleton

    def _synthesize_context_search(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        params = parsed.intent.parameters
        for sub in good.values():
            if sub.kind == "chunks":
                texts = [chunk.text for chunk, _ in sub.body]
                skeleton.findings.append(
                    {"kind": "chunks", "topic": params["topic"], "texts": texts}
                )
            elif sub.kind == "rank":
                entity = parsed.entities[0]
                body = sub.body
                skeleton.findings.append(
                    {
                        "kind": "rank_value",
                        "name": entity.canonical_name,
                        "metric": _metric_display(self.catalog, sub.meta["metric"]),
                        "value": body.get("value"),
                        "rank": body["rank"],
                        "population": body["population"],
                        "group": _population_noun(self.catalog, sub.meta["metric"], entity),
                        "team_phrase": self._team_phrase(entity, parsed.scope.season),
                        "position_phrase": self._position_phrase(entity),
                        "tier": None,
                    }
                )
            elif sub.kind == "table" and sub.meta.get("role") == "stat":
                entity = parsed.entities[0]
                value = sub.body.rows[0][sub.body.columns.index("value")]
                skeleton.findings.append(
                    {
                        "kind": "stat_value",
                        "name": entity.canonical_name,
                        "stat": self.catalog.display_name(sub.meta["stat_key"]),
                        "value": value,
                        "scope_phrase": self._scope_phrase(parsed.scope),
                    }
                )
        if not skeleton.findings:
            raise NoUsableSubAnswers("no context was retrieved")
        return skeleton

    def _synthesize_video_lookup(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        entity = parsed.entities[0]
        media_sub = None
        for sub in good.values():
            if sub.meta.get("role") == "media":
                media_sub = sub
        if media_sub is None:
            raise NoUsableSubAnswers("media resolution did not complete")
        table: ResultTable = media_sub.body
        play_ids = table.column("play_id") if table.rows else []
        links = [
            (play_id, self.media_url_template.format(play_id=play_id))
            for play_id in play_ids
        ]
        skeleton.findings.append(
            {
                "kind": "media",
                "name": entity.canonical_name,
                "coverage": parsed.intent.param("coverage"),
                "play_ids": play_ids,
            }
        )
        skeleton.media_links = links
        skeleton.tables.append(table)
        return skeleton

    def _synthesize_stat_lookup(self, parsed, good) -> AnswerSkeleton:
        skeleton = self._skeleton(parsed)
        lookup = parsed.intent.param("lookup", "stat")
        sub = next(iter(good.values()))
        if lookup == "metric_rank":
            entity = parsed.entities[0]
            body = sub.body
            rank, population = body["rank"], body["population"]
            third = population / 3.0
            tier = "top" if rank <= third else ("middle" if rank <= 2 * third else "lower")
            skeleton.findings.append(
                {
                    "kind": "rank_value",
                    "name": entity.canonical_name,
                    "metric": _metric_display(self.catalog, sub.meta["metric"]),
                    "value": body.get("value"),
                    "rank": rank,
                    "population": population,
                    "group": _population_noun(self.catalog, sub.meta["metric"], entity),
                    "team_phrase": self._team_phrase(entity, parsed.scope.season),
                    "position_phrase": self._position_phrase(entity),
                    "tier": tier,
                }
            )
            skeleton.tables.append(
                ResultTable(
                    columns=["player", "metric", "value", "rank", "population"],
                    rows=[[entity.canonical_name, sub.meta["metric"], body.get("value"), rank, population]],
                    provenance=sub.source_note,
                )
            )
        elif lookup == "play_success":
            table: ResultTable = sub.body
            row = dict(zip(table.columns, table.rows[0])) if table.rows else {}
            rate = row.get("success_rate") or 0.0
            plays = row.get("plays") or 0
            half = parsed.intent.param("half", 2)
            skeleton.findings.append(
                {
                    "kind": "play_success",
                    "play_type": parsed.intent.param("play_type", "").replace("_", " "),
                    "rate": rate,
                    "plays": plays,
                    "half_phrase": "first" if half == 1 else "second",
                }
            )
            skeleton.tables.append(table)
        else:
            entity = parsed.entities[0]
            table = sub.body
            value = table.rows[0][table.columns.index("value")]
            skeleton.findings.append(
                {
                    "kind": "stat_value",
                    "name": entity.canonical_name,
                    "stat": self.catalog.display_name(parsed.stat_keys[0]),
                    "value": value,
                    "scope_phrase": self._scope_phrase(parsed.scope),
                }
            )
            skeleton.tables.append(table)
        return skeleton


def _population_noun(catalog: Catalog, metric: str, entity: EntityRecord) -> str:
    definition = catalog.metric_defs.get(metric)
    if definition is not None and definition.population == "team":
        return "teams"
    return POSITION_PHRASES.get(entity.position or "", "player") + "s"


def _metric_display(catalog: Catalog, metric: str) -> str:
    display = catalog.display_name(metric)
    short = METRIC_SHORT_NAMES.get(metric)
    return f"{display} ({short})" if short else display


def _snake(kind: str) -> str:
    out = []
    for i, ch in enumerate(kind):
        if ch.isupper() and i > 0:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def synthesize(
    parsed: ParsedQuery,
    sub_answers: dict,
    generator,
    *,
    catalog: Catalog,
    clock: EngineClock,
    media_url_template: str = "https://media.example.com/plays/{play_id}",
    play_exists: Callable[[str], bool] = lambda _pid: True,
) -> Answer:
    return Synthesizer(
        generator, catalog, clock, media_url_template, play_exists
    ).synthesize(parsed, sub_answers)
