"""Canonical registry of players, teams, stat keys, and metric definitions.

The catalog is immutable after load and resolves free-text mentions to
entities with a deterministic token-overlap score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import CatalogLoadError, InvalidMention, NoMatch
from .text import normalize, strip_articles

MATCH_THRESHOLD = 0.5

ENTITY_KINDS = ("player", "team")
AGGREGATIONS = ("sum", "mean", "count", "max", "last")


@dataclass(frozen=True)
class EntityRecord:
    entity_id: str
    kind: str  # player | team
    canonical_name: str
    aliases: frozenset[str]
    position: Optional[str] = None
    affiliations: tuple[tuple[str, int, int], ...] = ()  # (team_id, first, last season)


@dataclass(frozen=True)
class StatKey:
    key: str
    display_name: str
    unit: str
    aggregation: str


@dataclass(frozen=True)
class MetricDef:
    key: str
    display_name: str
    rank_direction: str = "lower_rank_is_better"
    population: str = "player_position_group"  # or "team"


@dataclass(frozen=True)
class Scope:
    season: int
    through_week: Optional[int] = None
    game_filter: Optional[str] = None

    def __post_init__(self) -> None:
        if self.through_week is not None and not 1 <= self.through_week <= 22:
            raise ValueError(f"through_week out of range: {self.through_week}")

    def describe(self) -> str:
        parts = [f"season {self.season}"]
        if self.through_week is not None:
            parts.append(f"through week {self.through_week}")
        if self.game_filter:
            parts.append(self.game_filter)
        return ", ".join(parts)


class Catalog:
    """Indexes entity/stat/metric records by id and normalized alias."""

    def __init__(self) -> None:
        self.entities: dict[str, EntityRecord] = {}
        self.stat_keys: dict[str, StatKey] = {}
        self.metric_defs: dict[str, MetricDef] = {}
        self._alias_index: dict[str, list[str]] = {}

    def __len__(self) -> int:
        return len(self.entities)

    def entity(self, entity_id: str) -> EntityRecord:
        return self.entities[entity_id]

    def stat(self, key: str) -> StatKey:
        return self.stat_keys[key]

    def metric(self, key: str) -> MetricDef:
        return self.metric_defs[key]

    def has_key(self, key: str) -> bool:
        return key in self.stat_keys or key in self.metric_defs

    def display_name(self, key: str) -> str:
        if key in self.stat_keys:
            return self.stat_keys[key].display_name
        if key in self.metric_defs:
            return self.metric_defs[key].display_name
        return key

    def _add_entity(self, record: EntityRecord) -> None:
        if record.entity_id in self.entities:
            raise CatalogLoadError(f"duplicate entity_id: {record.entity_id}")
        self.entities[record.entity_id] = record
        for alias in record.aliases:
            self._alias_index.setdefault(alias, []).append(record.entity_id)

    def alias_hits(self, text: str) -> set[str]:
        """Entity ids whose exact alias appears as a phrase in `text`."""
        tokens = normalize(text).split()
        hits: set[str] = set()
        for n in range(1, 4):
            for i in range(len(tokens) - n + 1):
                phrase = " ".join(tokens[i : i + n])
                for eid in self._alias_index.get(phrase, ()):
                    hits.add(eid)
        return hits

    def resolve_entity(
        self, mention: str, kind_hint: Optional[str] = None
    ) -> list[tuple[EntityRecord, float]]:
        """Ranked matches for a free-text mention.

        Exact alias matches score 1.0; partial matches score shared-token
        overlap normalized by the larger token set, strictly inside (0, 1).
        Ties order by canonical_name then entity_id.
        """
        query = strip_articles(mention)
        if not query:
            raise InvalidMention(f"empty mention: {mention!r}")
        query_tokens = set(query.split())

        scored: list[tuple[EntityRecord, float]] = []
        below: list[tuple[float, str]] = []
        for record in self.entities.values():
            if kind_hint is not None and record.kind != kind_hint:
                continue
            best = 0.0
            for alias in record.aliases:
                if alias == query:
                    best = 1.0
                    break
                alias_tokens = set(alias.split())
                shared = len(query_tokens & alias_tokens)
                if shared:
                    best = max(best, shared / max(len(query_tokens), len(alias_tokens)))
            if best >= MATCH_THRESHOLD:
                scored.append((record, best))
            elif best > 0.0:
                below.append((best, record.canonical_name))

        scored.sort(key=lambda pair: (-pair[1], pair[0].canonical_name, pair[0].entity_id))
        if not scored:
            below.sort(key=lambda pair: (-pair[0], pair[1]))
            raise NoMatch(mention, [name for _, name in below[:3]])
        return scored


def _entity_from_record(record: dict) -> EntityRecord:
    aliases = {normalize(a) for a in record.get("aliases", [])}
    aliases.add(normalize(record["canonical_name"]))
    aliases.discard("")
    affiliations = tuple(
        (a["team_id"], int(a["season_start"]), int(a["season_end"]))
        for a in record.get("affiliations", [])
    )
    for _, start, end in affiliations:
        if start > end:
            raise ValueError(f"affiliation season_start > season_end for {record['entity_id']}")
    kind = record["kind"]
    if kind not in ENTITY_KINDS:
        raise ValueError(f"unknown entity kind: {kind}")
    if not record["canonical_name"]:
        raise ValueError("canonical_name is empty")
    return EntityRecord(
        entity_id=record["entity_id"],
        kind=kind,
        canonical_name=record["canonical_name"],
        aliases=frozenset(aliases),
        position=record.get("position"),
        affiliations=affiliations,
    )


def load_catalog(records: Iterable[dict]) -> Catalog:
    """Build a catalog from already-parsed records (`record_type` field)."""
    catalog = Catalog()
    for index, record in enumerate(records, start=1):
        try:
            record_type = record["record_type"]
            if record_type == "entity":
                catalog._add_entity(_entity_from_record(record))
            elif record_type == "stat_key":
                key = record["key"]
                if key in catalog.stat_keys:
                    raise ValueError(f"duplicate stat key: {key}")
                aggregation = record["aggregation"]
                if aggregation not in AGGREGATIONS:
                    raise ValueError(f"unknown aggregation for {key}: {aggregation}")
                catalog.stat_keys[key] = StatKey(
                    key=key,
                    display_name=record["display_name"],
                    unit=record.get("unit", ""),
                    aggregation=aggregation,
                )
            elif record_type == "metric_def":
                key = record["key"]
                if key in catalog.metric_defs:
                    raise ValueError(f"duplicate metric key: {key}")
                catalog.metric_defs[key] = MetricDef(
                    key=key,
                    display_name=record["display_name"],
                    rank_direction=record.get("rank_direction", "lower_rank_is_better"),
                    population=record.get("population", "player_position_group"),
                )
            else:
                raise ValueError(f"unknown record_type: {record_type}")
        except CatalogLoadError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise CatalogLoadError(f"malformed record {index}: {exc}") from exc
    return catalog


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs from a JSON Lines file."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CatalogLoadError(f"{path}, line {line_no}: invalid JSON ({exc})") from exc


def load_catalog_file(path: str | Path) -> Catalog:
    """Load the JSON Lines catalog fixture, reporting offending line numbers."""
    catalog = Catalog()
    for line_no, record in iter_jsonl(path):
        try:
            partial = load_catalog([record])
            for entity in partial.entities.values():
                catalog._add_entity(entity)
            for key, stat in partial.stat_keys.items():
                if key in catalog.stat_keys:
                    raise CatalogLoadError(f"duplicate stat key: {key}")
                catalog.stat_keys[key] = stat
            for key, metric in partial.metric_defs.items():
                if key in catalog.metric_defs:
                    raise CatalogLoadError(f"duplicate metric key: {key}")
                catalog.metric_defs[key] = metric
        except CatalogLoadError as exc:
            raise CatalogLoadError(f"{path}, line {line_no}: {exc}") from exc
    return catalog
