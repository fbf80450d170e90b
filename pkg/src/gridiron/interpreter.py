"""Compiles natural-language prompts into structured queries.

An ordered pattern grammar (JSON data file) matches the normalized prompt;
the first matching pattern wins. Slot builders resolve entities against the
catalog, map stat phrases through the synonym lexicon, and inherit missing
entities/stat/scope from dialogue memory on follow-up turns.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from .catalog import Catalog, EntityRecord, Scope
from .errors import InvalidMention, MissingContext, NoMatch, Unparseable, UnresolvedEntity
from .memory import ConversationState, is_followup, referents
from .text import normalize

INTENT_KINDS = (
    "StatLookup",
    "StatComparison",
    "MetricVerdict",
    "RecordQuery",
    "TeamWeakness",
    "TeamMismatch",
    "RosterBuild",
    "CapQuery",
    "ContextSearch",
    "VideoLookup",
)

PRONOUN_MENTIONS = {"he", "his", "him", "she", "her", "they", "their", "them", "that", "it"}

# Tokens dropped when isolating entity mentions from a matched slot.
_FILLER = {
    "does", "did", "do", "have", "has", "had", "get", "got", "this", "season",
    "year", "the", "in", "during", "so", "far", "right", "now", "currently",
    "total", "throw", "thrown", "for",
}
_SPLITTERS = {"or", "and", "vs", "versus"}
_YEAR = re.compile(r"^(?:19|20)\d{2}$")


@dataclass(frozen=True)
class EngineClock:
    """Injected season/week; 'this season' style deixis resolves against it."""

    season: int
    week: int


@dataclass(frozen=True)
class Intent:
    kind: str
    parameters: dict

    def param(self, name: str, default=None):
        return self.parameters.get(name, default)


@dataclass(frozen=True)
class ParsedQuery:
    intent: Intent
    entities: tuple[EntityRecord, ...]
    stat_keys: tuple[str, ...]
    scope: Scope
    raw_prompt: str
    inherited: frozenset[str]
    pattern_id: str

    @property
    def entity_ids(self) -> tuple[str, ...]:
        return tuple(e.entity_id for e in self.entities)


def validate_parse(parsed: ParsedQuery, catalog: Catalog) -> None:
    """Intent arity and grounding invariants; violations are builder bugs."""
    kind = parsed.intent.kind
    if kind not in INTENT_KINDS:
        raise ValueError(f"unknown intent kind: {kind}")
    if not parsed.inherited <= {"entities", "stat_keys", "scope"}:
        raise ValueError(f"invalid inherited set: {parsed.inherited}")
    if kind == "StatComparison" and (len(parsed.entities) < 2 or len(parsed.stat_keys) != 1):
        raise ValueError("StatComparison requires >=2 entities and exactly 1 stat")
    if kind == "MetricVerdict" and len(parsed.entities) != 2:
        raise ValueError("MetricVerdict requires exactly 2 entities")
    if kind in ("TeamWeakness", "TeamMismatch") and not all(
        e.kind == "team" for e in parsed.entities
    ):
        raise ValueError(f"{kind} requires team entities")
    if kind == "RosterBuild" and not parsed.intent.param("season"):
        raise ValueError("RosterBuild requires a season")
    for entity in parsed.entities:
        if entity.entity_id not in catalog.entities:
            raise ValueError(f"entity not in catalog: {entity.entity_id}")
    for key in parsed.stat_keys:
        if not catalog.has_key(key):
            raise ValueError(f"stat/metric key not in catalog: {key}")


@dataclass(frozen=True)
class GrammarPattern:
    pattern_id: str
    intent: str
    builder: str
    regex: re.Pattern
    hint: str
    keywords: tuple[str, ...]


def _load_json_data(name: str, override: Optional[str | Path]) -> dict:
    if override is not None:
        return json.loads(Path(override).read_text(encoding="utf-8"))
    return json.loads(resources.files("gridiron.data").joinpath(name).read_text(encoding="utf-8"))


class Interpreter:
    def __init__(
        self,
        catalog: Catalog,
        clock: EngineClock,
        *,
        verdict_metrics: Optional[dict[str, list[str]]] = None,
        roster_positions: Optional[list[str]] = None,
        roster_metric: str = "twar",
        team_offense_metrics: Optional[list[str]] = None,
        team_defense_metrics: Optional[list[str]] = None,
        mismatch_pairs: Optional[list[tuple[str, str]]] = None,
        cap_horizon: tuple[int, int] = (1, 3),
        context_k: int = 3,
        grammar_path: Optional[str | Path] = None,
        lexicon_path: Optional[str | Path] = None,
    ):
        self.catalog = catalog
        self.clock = clock
        self.verdict_metrics = verdict_metrics or {}
        self.roster_positions = roster_positions or []
        self.roster_metric = roster_metric
        self.team_offense_metrics = team_offense_metrics or []
        self.team_defense_metrics = team_defense_metrics or []
        self.mismatch_pairs = mismatch_pairs or []
        self.cap_horizon = cap_horizon
        self.context_k = context_k
        self._grammar_raw = _load_json_data("grammar.json", grammar_path)
        self._lexicon = _load_json_data("lexicon.json", lexicon_path)
        self.patterns = [
            GrammarPattern(
                pattern_id=entry["id"],
                intent=entry["intent"],
                builder=entry["builder"],
                regex=re.compile(entry["regex"]),
                hint=entry["hint"],
                keywords=tuple(entry["keywords"]),
            )
            for entry in self._grammar_raw["patterns"]
        ]
        self._builders: dict[str, Callable] = {
            "team_mismatch": self._build_team_mismatch,
            "team_weakness": self._build_team_weakness,
            "roster_build": self._build_roster_build,
            "record_query": self._build_record_query,
            "cap_free_up": self._build_cap_free_up,
            "market_cap": self._build_market_cap,
            "trade_value": self._build_trade_value,
            "video_lookup": self._build_video_lookup,
            "play_success": self._build_play_success,
            "free_agents": self._build_free_agents,
            "verdict": self._build_verdict,
            "stat_comparison": self._build_stat_comparison,
            "stat_comparison_fewer": self._build_stat_comparison_fewer,
            "stat_lookup": self._build_stat_lookup,
            "context_search": self._build_context_search,
            "profile": self._build_profile,
        }

    # --- public API ---------------------------------------------------------

    def parse(self, prompt: str, state: ConversationState) -> ParsedQuery:
        normalized = normalize(prompt)
        if not normalized:
            raise Unparseable(prompt, self._nearest(normalized))
        followup, _reason = is_followup(prompt, state, self.probe_mentions)
        for pattern in self.patterns:
            match = pattern.regex.fullmatch(normalized)
            if match is None:
                continue
            parsed = self._builders[pattern.builder](match, prompt, state, followup, pattern)
            validate_parse(parsed, self.catalog)
            return parsed
        raise Unparseable(prompt, self._nearest(normalized))

    def explain(self, parsed: ParsedQuery) -> str:
        lines = [
            f"pattern: {parsed.pattern_id}",
            f"intent: {parsed.intent.kind}",
            "entities: "
            + (
                ", ".join(f"{e.canonical_name} ({e.entity_id})" for e in parsed.entities)
                or "none"
            ),
            "stats: " + (", ".join(parsed.stat_keys) or "none"),
            f"scope: {parsed.scope.describe()}",
            "inherited: " + (", ".join(sorted(parsed.inherited)) or "none"),
        ]
        return "\n".join(lines)

    def grammar_dump(self) -> dict:
        return {
            "grammar": self._grammar_raw,
            "lexicon": self._lexicon,
        }

    def probe_mentions(self, prompt: str) -> int:
        return len(self.catalog.alias_hits(prompt))

    # --- slot helpers ---------------------------------------------------------

    def _nearest(self, normalized: str) -> list[str]:
        prompt_tokens = set(normalized.split())
        scored = []
        for pattern in self.patterns:
            overlap = len(prompt_tokens & set(pattern.keywords)) / len(pattern.keywords)
            scored.append((-overlap, pattern.pattern_id, pattern.hint))
        scored.sort()
        return [hint for _, _, hint in scored[:3]]

    def _resolve(self, mention: str, kind_hint: Optional[str] = None) -> EntityRecord:
        try:
            matches = self.catalog.resolve_entity(mention, kind_hint)
        except NoMatch as exc:
            raise UnresolvedEntity(mention, exc.nearest) from exc
        except InvalidMention as exc:
            raise UnresolvedEntity(mention) from exc
        return matches[0][0]

    def _split_mentions(self, tokens: list[str]) -> list[str]:
        mentions: list[list[str]] = [[]]
        for token in tokens:
            if token in _SPLITTERS:
                if mentions[-1]:
                    mentions.append([])
            else:
                mentions[-1].append(token)
        return [" ".join(m) for m in mentions if m]

    def _stat_prefix(self, tokens: list[str]) -> tuple[Optional[str], list[str]]:
        """Longest lexicon phrase at the head of `tokens` -> (stat key, rest)."""
        stats = self._lexicon["stats"]
        for length in range(min(4, len(tokens)), 0, -1):
            phrase = " ".join(tokens[:length])
            if phrase in stats:
                return stats[phrase], tokens[length:]
        return None, tokens

    def _default_scope(self) -> Scope:
        return Scope(season=self.clock.season, through_week=self.clock.week)

    def _scope_for(
        self, explicit_season: Optional[int], followup: bool, state: ConversationState
    ) -> tuple[Scope, bool]:
        """Explicit season wins; follow-ups inherit; otherwise the engine clock."""
        if explicit_season is not None:
            through = self.clock.week if explicit_season == self.clock.season else None
            return Scope(season=explicit_season, through_week=through), False
        if followup and state.last_scope is not None:
            return state.last_scope, True
        return self._default_scope(), False

    def _referent_entities(
        self, state: ConversationState, count: int, kind: Optional[str] = None
    ) -> list[EntityRecord]:
        picked: list[EntityRecord] = []
        for entity_id in referents(state):
            record = self.catalog.entities.get(entity_id)
            if record is None or (kind is not None and record.kind != kind):
                continue
            picked.append(record)
            if len(picked) == count:
                break
        return picked

    def _extract_years(self, tokens: list[str]) -> tuple[list[int], list[str]]:
        years = [int(t) for t in tokens if _YEAR.match(t)]
        rest = [t for t in tokens if not _YEAR.match(t)]
        return years, rest

    # --- builders -------------------------------------------------------------

    def _build_stat_comparison(self, match, prompt, state, followup, pattern, comparator="more"):
        tail = match.group("tail").split()
        stat, rest = self._stat_prefix(tail)
        if stat is None:
            raise Unparseable(prompt, [pattern.hint])
        years, rest = self._extract_years(rest)
        mention_tokens = [t for t in rest if t not in _FILLER]
        inherited: set[str] = set()
        entities: list[EntityRecord] = []
        if mention_tokens:
            for mention in self._split_mentions(mention_tokens):
                entities.append(self._resolve(mention))
        if len(entities) < 2:
            needed = 2 - len(entities)
            have = {e.entity_id for e in entities}
            fill = [
                r for r in self._referent_entities(state, len(have) + 2)
                if r.entity_id not in have
            ][:needed]
            if fill:
                entities.extend(fill)
                inherited.add("entities")
        if len(entities) < 2:
            raise MissingContext(
                f"comparison needs two entities; prompt names {len(entities)} and no"
                " conversation history supplies the rest"
            )
        scope, scope_inherited = self._scope_for(years[0] if years else None, followup, state)
        if scope_inherited:
            inherited.add("scope")
        return ParsedQuery(
            intent=Intent("StatComparison", {"comparator": comparator}),
            entities=tuple(entities),
            stat_keys=(stat,),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )

    def _build_stat_comparison_fewer(self, match, prompt, state, followup, pattern):
        return self._build_stat_comparison(
            match, prompt, state, followup, pattern, comparator="fewer"
        )

    def _build_verdict(self, match, prompt, state, followup, pattern):
        pair = match.groupdict().get("pair")
        inherited: set[str] = set()
        entities: list[EntityRecord] = []
        if pair:
            for mention in self._split_mentions(
                [t for t in pair.split() if t not in _FILLER]
            ):
                entities.append(self._resolve(mention))
        if len(entities) < 2:
            have = {e.entity_id for e in entities}
            fill = [
                r for r in self._referent_entities(state, len(have) + 2, kind="player")
                if r.entity_id not in have
            ][: 2 - len(entities)]
            if fill:
                entities.extend(fill)
                inherited.add("entities")
        if len(entities) < 2:
            raise MissingContext("verdict needs two entities from the prompt or memory")
        entities = entities[:2]
        position = entities[0].position or "QB"
        metrics = self.verdict_metrics.get(position) or self.verdict_metrics.get("QB") or []
        if not metrics:
            raise MissingContext(f"no verdict metric set configured for position {position}")
        scope, scope_inherited = self._scope_for(None, followup, state)
        if scope_inherited:
            inherited.add("scope")
        return ParsedQuery(
            intent=Intent("MetricVerdict", {"metrics": list(metrics)}),
            entities=tuple(entities),
            stat_keys=tuple(metrics),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )

    def _build_record_query(self, match, prompt, state, followup, pattern):
        entity = self._resolve(match.group("entity"), kind_hint="player")
        conference = match.group("conference").upper()
        seasons_text = match.groupdict().get("seasons") or ""
        seasons = [int(t) for t in seasons_text.split() if _YEAR.match(t)]
        if not seasons:
            seasons = [self.clock.season]
        scope = Scope(
            season=seasons[-1],
            through_week=None,
            game_filter=f"opponent_conference={conference}",
        )
        return ParsedQuery(
            intent=Intent(
                "RecordQuery",
                {"conference": conference, "seasons": seasons, "played_only": True},
            ),
            entities=(entity,),
            stat_keys=(),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(),
            pattern_id=pattern.pattern_id,
        )

    def _build_team_weakness(self, match, prompt, state, followup, pattern):
        team = self._resolve(match.group("team"), kind_hint="team")
        side = "offense" if match.group("side").startswith("offen") else "defense"
        metrics = (
            self.team_offense_metrics if side == "offense" else self.team_defense_metrics
        )
        season = match.groupdict().get("season")
        scope, scope_inherited = self._scope_for(
            int(season) if season else None, followup, state
        )
        inherited = {"scope"} if scope_inherited else set()
        return ParsedQuery(
            intent=Intent("TeamWeakness", {"side": side, "metrics": list(metrics)}),
            entities=(team,),
            stat_keys=tuple(metrics),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )

    def _build_team_mismatch(self, match, prompt, state, followup, pattern):
        defense = self._resolve(match.group("def_team"), kind_hint="team")
        offense = self._resolve(match.group("off_team"), kind_hint="team")
        season = match.groupdict().get("season")
        scope, scope_inherited = self._scope_for(
            int(season) if season else None, followup, state
        )
        inherited = {"scope"} if scope_inherited else set()
        pairs = [list(pair) for pair in self.mismatch_pairs]
        keys = tuple(dict.fromkeys(k for pair in pairs for k in pair))
        return ParsedQuery(
            intent=Intent(
                "TeamMismatch",
                {
                    "pairs": pairs,
                    "offense_team": offense.entity_id,
                    "defense_team": defense.entity_id,
                },
            ),
            entities=(defense, offense),
            stat_keys=keys,
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )

    def _build_roster_build(self, match, prompt, state, followup, pattern):
        season = int(match.group("season"))
        if not self.roster_positions:
            raise MissingContext("no roster positions configured")
        return ParsedQuery(
            intent=Intent(
                "RosterBuild",
                {
                    "season": season,
                    "positions": list(self.roster_positions),
                    "metric": self.roster_metric,
                },
            ),
            entities=(),
            stat_keys=(self.roster_metric,),
            scope=Scope(season=season, through_week=None),
            raw_prompt=prompt,
            inherited=frozenset(),
            pattern_id=pattern.pattern_id,
        )

    def _build_market_cap(self, match, prompt, state, followup, pattern):
        mention = match.group("entity")
        inherited: set[str] = set()
        if set(mention.split()) <= PRONOUN_MENTIONS:
            fill = self._referent_entities(state, 1, kind="player")
            if not fill:
                raise MissingContext(f"pronoun {mention!r} has no referent in this conversation")
            entity = fill[0]
            inherited.add("entities")
        else:
            entity = self._resolve(mention, kind_hint="player")
        year_text = match.groupdict().get("year")
        years = [int(year_text)] if year_text else [self.clock.season]
        return ParsedQuery(
            intent=Intent("CapQuery", {"years": years, "horizon": False}),
            entities=(entity,),
            stat_keys=("cap_savings",),
            scope=self._default_scope(),
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )

    def _build_cap_free_up(self, match, prompt, state, followup, pattern):
        team = self._resolve(match.group("team"), kind_hint="team")
        fill = self._referent_entities(state, 1, kind="player")
        if not fill:
            raise MissingContext("cap follow-up needs a player from conversation history")
        player = fill[0]
        past, future = self.cap_horizon
        years = list(range(self.clock.season - past, self.clock.season + future + 1))
        return ParsedQuery(
            intent=Intent("CapQuery", {"years": years, "horizon": True}),
            entities=(player, team),
            stat_keys=("cap_savings",),
            scope=self._default_scope(),
            raw_prompt=prompt,
            inherited=frozenset({"entities"}),
            pattern_id=pattern.pattern_id,
        )

    def _build_trade_value(self, match, prompt, state, followup, pattern):
        mention = match.group("entity")
        inherited: set[str] = set()
        if set(mention.split()) <= PRONOUN_MENTIONS:
            fill = self._referent_entities(state, 1, kind="player")
            if not fill:
                raise MissingContext(f"pronoun {mention!r} has no referent in this conversation")
            entity = fill[0]
            inherited.add("entities")
        else:
            entity = self._resolve(mention, kind_hint="player")
        metric = self._lexicon["metrics"]["trade value"]
        scope, scope_inherited = self._scope_for(None, followup, state)
        if scope_inherited:
            inherited.add("scope")
        return ParsedQuery(
            intent=Intent("StatLookup", {"lookup": "metric_rank", "metric": metric}),
            entities=(entity,),
            stat_keys=(metric,),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )

    def _build_video_lookup(self, match, prompt, state, followup, pattern):
        entity = self._resolve(match.group("entity"), kind_hint="player")
        coverage_raw = match.group("coverage")
        coverage = self._lexicon["coverages"].get(coverage_raw, coverage_raw)
        scope = Scope(
            season=self.clock.season,
            through_week=self.clock.week,
            game_filter="last_game",
        )
        return ParsedQuery(
            intent=Intent("VideoLookup", {"coverage": coverage}),
            entities=(entity,),
            stat_keys=(),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(),
            pattern_id=pattern.pattern_id,
        )

    def _build_play_success(self, match, prompt, state, followup, pattern):
        play_type_raw = match.group("play_type")
        play_type = self._lexicon["play_types"].get(play_type_raw, play_type_raw)
        half = 1 if match.group("half") == "first" else 2
        scope, scope_inherited = self._scope_for(None, followup, state)
        return ParsedQuery(
            intent=Intent(
                "StatLookup",
                {"lookup": "play_success", "play_type": play_type, "half": half},
            ),
            entities=(),
            stat_keys=("success_rate",),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset({"scope"} if scope_inherited else set()),
            pattern_id=pattern.pattern_id,
        )

    def _build_free_agents(self, match, prompt, state, followup, pattern):
        topic = match.group("topic")
        return ParsedQuery(
            intent=Intent(
                "ContextSearch",
                {"topic": f"free agents {topic}", "k": self.context_k},
            ),
            entities=(),
            stat_keys=(),
            scope=self._default_scope(),
            raw_prompt=prompt,
            inherited=frozenset(),
            pattern_id=pattern.pattern_id,
        )

    def _build_context_search(self, match, prompt, state, followup, pattern):
        return ParsedQuery(
            intent=Intent(
                "ContextSearch",
                {"topic": match.group("topic"), "k": self.context_k},
            ),
            entities=(),
            stat_keys=(),
            scope=self._default_scope(),
            raw_prompt=prompt,
            inherited=frozenset(),
            pattern_id=pattern.pattern_id,
        )

    def _build_profile(self, match, prompt, state, followup, pattern):
        entity = self._resolve(match.group("entity"))
        return ParsedQuery(
            intent=Intent(
                "ContextSearch",
                {
                    "topic": entity.canonical_name,
                    "k": self.context_k,
                    "profile": True,
                    "metric": self.roster_metric,
                    "stat": "pass_yards",
                },
            ),
            entities=(entity,),
            stat_keys=(self.roster_metric, "pass_yards"),
            scope=self._default_scope(),
            raw_prompt=prompt,
            inherited=frozenset(),
            pattern_id=pattern.pattern_id,
        )

    def _build_stat_lookup(self, match, prompt, state, followup, pattern):
        tail = match.group("tail").split()
        stat, rest = self._stat_prefix(tail)
        if stat is None:
            raise Unparseable(prompt, [pattern.hint])
        years, rest = self._extract_years(rest)
        mention_tokens = [t for t in rest if t not in _FILLER]
        inherited: set[str] = set()
        if mention_tokens:
            entity = self._resolve(" ".join(mention_tokens))
        else:
            fill = self._referent_entities(state, 1)
            if not fill:
                raise MissingContext("stat lookup needs an entity from the prompt or memory")
            entity = fill[0]
            inherited.add("entities")
        scope, scope_inherited = self._scope_for(years[0] if years else None, followup, state)
        if scope_inherited:
            inherited.add("scope")
        return ParsedQuery(
            intent=Intent("StatLookup", {"lookup": "stat"}),
            entities=(entity,),
            stat_keys=(stat,),
            scope=scope,
            raw_prompt=prompt,
            inherited=frozenset(inherited),
            pattern_id=pattern.pattern_id,
        )


# Convenience wrappers matching the operation-level contracts.

def parse(
    prompt: str, state: ConversationState, catalog: Catalog, clock: EngineClock, **kwargs
) -> ParsedQuery:
    return Interpreter(catalog, clock, **kwargs).parse(prompt, state)


def explain_parse(parsed: ParsedQuery, catalog: Catalog, clock: EngineClock) -> str:
    return Interpreter(catalog, clock).explain(parsed)
