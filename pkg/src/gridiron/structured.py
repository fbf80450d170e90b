"""In-memory document store with filter/group/aggregate/sort/limit execution.

Collections hold flat documents; queries follow exact relational semantics:
filter, then group/aggregate, then stable sort, then limit. Known collections
carry key fields and re-ingesting a key replaces the document in place.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .catalog import Scope, iter_jsonl
from .errors import NotRanked, RecordRejected, UnknownCollection, UnknownField

FILTER_OPS = ("=", "!=", "<", "<=", ">", ">=", "in")

# Key fields for the shipped collections; unknown collections are append-only.
DEFAULT_KEY_FIELDS: dict[str, tuple[str, ...]] = {
    "player_season_stats": ("player_id", "season", "week"),
    "game_logs": ("player_id", "season", "week"),
    "metric_ranks": ("metric", "season", "entity_id"),
    "cap_table": ("player_id", "year"),
    "plays": ("play_id",),
}
# Optional key parts participate in the upsert key but may be absent.
OPTIONAL_KEY_FIELDS: dict[str, tuple[str, ...]] = {
    "metric_ranks": ("week",),
}


@dataclass(frozen=True)
class Condition:
    field: str
    op: str
    value: object

    def __post_init__(self) -> None:
        if self.op not in FILTER_OPS:
            raise ValueError(f"unknown filter op: {self.op}")


@dataclass(frozen=True)
class Aggregate:
    op: str  # sum | mean | count | max | last
    field: str  # "*" allowed for count
    alias: str


@dataclass(frozen=True)
class StructuredQuery:
    collection: str
    filter: tuple[Condition, ...] = ()
    group_by: Optional[tuple[str, ...]] = None
    aggregates: tuple[Aggregate, ...] = ()
    sort: Optional[tuple[str, str]] = None  # (field or alias, "asc" | "desc")
    limit: Optional[int] = None

    def __post_init__(self) -> None:
        if self.group_by is not None and not self.aggregates:
            raise ValueError("group_by requires at least one aggregate")
        if self.limit is not None and self.limit <= 0:
            raise ValueError("limit must be positive")


@dataclass(frozen=True)
class RankQuery:
    """Rank lookup payload routed to the structured retrieval agent."""

    metric: str
    entity_id: str
    scope: Scope


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list]
    provenance: str

    def to_json(self) -> dict:
        return {"columns": self.columns, "rows": self.rows, "provenance": self.provenance}

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def _is_number(value: object) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _comparable(a: object, b: object) -> bool:
    if _is_number(a) and _is_number(b):
        return True
    return type(a) is type(b)


def matches(doc: dict, condition: Condition) -> bool:
    """Absent fields never match, whatever the operator."""
    if condition.field not in doc:
        return False
    value = doc[condition.field]
    target = condition.value
    op = condition.op
    if op == "in":
        return isinstance(target, (list, tuple, set)) and any(
            _comparable(value, t) and value == t for t in target
        )
    if not _comparable(value, target):
        return False
    if op == "=":
        return value == target
    if op == "!=":
        return value != target
    if op == "<":
        return value < target
    if op == "<=":
        return value <= target
    if op == ">":
        return value > target
    return value >= target


def _sort_key(value_present: bool, value: object):
    # Missing values sort last in either direction; numbers before strings.
    if not value_present:
        return (2, 0, "")
    if _is_number(value):
        return (0, value, "")
    return (1, 0, str(value))


class DocumentStore:
    def __init__(self, strict: bool = False):
        self.strict = strict
        self._collections: dict[str, list[dict]] = {}
        self._keys: dict[str, tuple[str, ...]] = dict(DEFAULT_KEY_FIELDS)
        self._optional_keys: dict[str, tuple[str, ...]] = dict(OPTIONAL_KEY_FIELDS)
        self._key_index: dict[str, dict[tuple, int]] = {}
        self._fields_seen: dict[str, set[str]] = {}

    def register_collection(
        self,
        name: str,
        key_fields: Sequence[str] = (),
        optional_key_fields: Sequence[str] = (),
    ) -> None:
        self._keys[name] = tuple(key_fields)
        if optional_key_fields:
            self._optional_keys[name] = tuple(optional_key_fields)

    def collections(self) -> list[str]:
        return sorted(self._collections)

    def count(self, collection: str) -> int:
        return len(self._collections.get(collection, []))

    def documents(self, collection: str) -> list[dict]:
        if collection not in self._collections:
            raise UnknownCollection(collection)
        return [dict(doc) for doc in self._collections[collection]]

    # --- ingestion ----------------------------------------------------------

    def _key_for(self, collection: str, doc: dict, index: int) -> Optional[tuple]:
        required = self._keys.get(collection, ())
        if not required:
            return None
        missing = [k for k in required if k not in doc]
        if missing:
            raise RecordRejected(
                f"record {index} in {collection!r} is missing key field(s): "
                + ", ".join(missing)
            )
        optional = self._optional_keys.get(collection, ())
        return tuple(doc.get(k) for k in required) + tuple(doc.get(k) for k in optional)

    def ingest(self, records: Iterable[dict], collection: str) -> int:
        """Upsert documents; returns the number of records processed."""
        docs = self._collections.setdefault(collection, [])
        index_map = self._key_index.setdefault(collection, {})
        fields = self._fields_seen.setdefault(collection, set())
        count = 0
        for i, record in enumerate(records):
            if not isinstance(record, dict):
                raise RecordRejected(f"record {i} in {collection!r} is not an object")
            key = self._key_for(collection, record, i)
            doc = dict(record)
            if key is not None and key in index_map:
                docs[index_map[key]] = doc  # replace in place: preserves order
            else:
                if key is not None:
                    index_map[key] = len(docs)
                docs.append(doc)
            fields.update(doc.keys())
            count += 1
        return count

    def ingest_file(self, path: str | Path, collection: str) -> int:
        return self.ingest((record for _, record in iter_jsonl(path)), collection)

    # --- querying -------------------------------------------------------------

    def _check_fields(self, query: StructuredQuery) -> None:
        known = self._fields_seen.get(query.collection, set())
        referenced = [c.field for c in query.filter]
        referenced += list(query.group_by or ())
        referenced += [a.field for a in query.aggregates if a.field != "*"]
        aliases = {a.alias for a in query.aggregates}
        if query.sort and query.sort[0] not in aliases:
            referenced.append(query.sort[0])
        for name in referenced:
            if name not in known:
                raise UnknownField(f"{query.collection!r} has no field {name!r}")

    def execute(self, query: StructuredQuery) -> ResultTable:
        if query.collection not in self._collections:
            raise UnknownCollection(query.collection)
        if self.strict:
            self._check_fields(query)

        selected = [
            doc
            for doc in self._collections[query.collection]
            if all(matches(doc, cond) for cond in query.filter)
        ]

        if query.aggregates:
            columns = list(query.group_by or ()) + [a.alias for a in query.aggregates]
            groups: dict[tuple, list[dict]] = {}
            order: list[tuple] = []
            for doc in selected:
                key = tuple(doc.get(g) for g in (query.group_by or ()))
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(doc)
            if query.group_by is None and not order:
                order.append(())
                groups[()] = []
            rows = []
            for key in order:
                row = list(key)
                for agg in query.aggregates:
                    row.append(_aggregate(groups[key], agg))
                rows.append(row)
        else:
            columns = sorted({name for doc in selected for name in doc})
            rows = [[doc.get(c) for c in columns] for doc in selected]

        if query.sort is not None:
            name, direction = query.sort
            if name in columns:
                idx = columns.index(name)
                keyed = [( _sort_key(row[idx] is not None, row[idx]), i) for i, row in enumerate(rows)]
            else:
                keyed = [(_sort_key(False, None), i) for i in range(len(rows))]
            reverse = direction == "desc"
            # Missing values must sort last in both directions: sort present
            # and missing partitions separately, stably.
            present = [i for (k, i) in keyed if k[0] != 2]
            missing = [i for (k, i) in keyed if k[0] == 2]
            present.sort(key=lambda i: keyed[i][0], reverse=reverse)
            rows = [rows[i] for i in present] + [rows[i] for i in missing]

        if query.limit is not None:
            rows = rows[: query.limit]

        filter_echo = " and ".join(
            f"{c.field} {c.op} {c.value!r}" for c in query.filter
        ) or "(no filter)"
        return ResultTable(
            columns=columns,
            rows=rows,
            provenance=f"{query.collection}: {filter_echo}",
        )

    # --- rank lookup ------------------------------------------------------------

    def rank_lookup(
        self, metric: str, entity_id: str, scope: Scope
    ) -> tuple[int, int, Optional[float]]:
        """Stored rank snapshot for (metric, entity, scope).

        In-season snapshots carry a `week` stamp; season-end rows have none.
        """
        docs = self._collections.get("metric_ranks", [])
        fallback = None
        for doc in docs:
            if doc.get("metric") != metric or doc.get("entity_id") != entity_id:
                continue
            if doc.get("season") != scope.season:
                continue
            week = doc.get("week")
            if scope.through_week is not None and week == scope.through_week:
                return int(doc["rank"]), int(doc["population"]), doc.get("value")
            if scope.through_week is None and week is None:
                return int(doc["rank"]), int(doc["population"]), doc.get("value")
            if fallback is None and week is None:
                fallback = doc
        if fallback is not None:
            return int(fallback["rank"]), int(fallback["population"]), fallback.get("value")
        raise NotRanked(entity_id, metric, scope.describe())


def _aggregate(docs: list[dict], agg: Aggregate):
    if agg.op == "count":
        if agg.field == "*":
            return len(docs)
        return sum(1 for d in docs if agg.field in d)
    values = [d[agg.field] for d in docs if agg.field in d]
    if agg.op == "last":
        return values[-1] if values else None
    numeric = [float(v) for v in values if _is_number(v) or isinstance(v, bool)]
    if agg.op == "sum":
        return sum(numeric)
    if agg.op == "mean":
        return sum(numeric) / len(numeric) if numeric else None
    if agg.op == "max":
        return max(numeric) if numeric else None
    raise ValueError(f"unknown aggregation: {agg.op}")
