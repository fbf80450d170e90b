"""Independent oracles and random-input generators used by the test suite.

Everything here re-implements contract semantics with naive full scans so the
production code paths are checked against a second route, not themselves.
"""

from __future__ import annotations

import numbers
import random

import numpy as np

from gridiron.structured import Aggregate, Condition, StructuredQuery
from gridiron.vectors import cosine


# --- naive structured-query interpreter ---------------------------------------

def _is_num(v):
    return isinstance(v, numbers.Real) and not isinstance(v, bool)


def _oracle_matches(doc: dict, cond: Condition) -> bool:
    if cond.field not in doc:
        return False
    value, target = doc[cond.field], cond.value
    if cond.op == "in":
        if not isinstance(target, (list, tuple, set)):
            return False
        for t in target:
            same_family = (_is_num(value) and _is_num(t)) or type(value) is type(t)
            if same_family and value == t:
                return True
        return False
    same_family = (_is_num(value) and _is_num(target)) or type(value) is type(target)
    if not same_family:
        return False
    if cond.op == "=":
        return value == target
    if cond.op == "!=":
        return value != target
    if cond.op == "<":
        return value < target
    if cond.op == "<=":
        return value <= target
    if cond.op == ">":
        return value > target
    if cond.op == ">=":
        return value >= target
    raise AssertionError(cond.op)


def _oracle_aggregate(docs: list[dict], agg: Aggregate):
    if agg.op == "count":
        if agg.field == "*":
            return len(docs)
        return sum(1 for d in docs if agg.field in d)
    values = [d[agg.field] for d in docs if agg.field in d]
    if agg.op == "last":
        return values[-1] if values else None
    numeric = [float(v) for v in values if _is_num(v) or isinstance(v, bool)]
    if agg.op == "sum":
        return sum(numeric)
    if agg.op == "mean":
        return sum(numeric) / len(numeric) if numeric else None
    if agg.op == "max":
        return max(numeric) if numeric else None
    raise AssertionError(agg.op)


def naive_execute(documents: list[dict], query: StructuredQuery):
    """Full-scan interpreter for the relational semantics; returns (columns, rows)."""
    kept = [d for d in documents if all(_oracle_matches(d, c) for c in query.filter)]

    if query.aggregates:
        columns = list(query.group_by or ()) + [a.alias for a in query.aggregates]
        seen: list[tuple] = []
        grouped: dict[tuple, list[dict]] = {}
        for doc in kept:
            key = tuple(doc.get(g) for g in (query.group_by or ()))
            if key not in grouped:
                grouped[key] = []
                seen.append(key)
            grouped[key].append(doc)
        if query.group_by is None and not seen:
            seen.append(())
            grouped[()] = []
        rows = []
        for key in seen:
            row = list(key)
            for agg in query.aggregates:
                row.append(_oracle_aggregate(grouped[key], agg))
            rows.append(row)
    else:
        columns = sorted({name for doc in kept for name in doc})
        rows = [[doc.get(c) for c in columns] for doc in kept]

    if query.sort is not None:
        name, direction = query.sort
        if name in columns:
            idx = columns.index(name)
            present = [r for r in rows if r[idx] is not None]
            absent = [r for r in rows if r[idx] is None]

            def sort_key(row):
                v = row[idx]
                return (0, v, "") if _is_num(v) else (1, 0, str(v))

            present.sort(key=sort_key, reverse=(direction == "desc"))
            rows = present + absent
        # sorting on an unknown column leaves row order unchanged

    if query.limit is not None:
        rows = rows[: query.limit]
    return columns, rows


# --- brute-force vector scan -----------------------------------------------------

def brute_force_search(chunks, vectors, query_vector, k, predicate=None):
    """Sort every passing chunk by (similarity desc, chunk_id asc); take k."""
    query = np.asarray(query_vector, dtype=np.float64)
    scored = []
    for chunk, vector in zip(chunks, vectors):
        if predicate is not None and not predicate(chunk):
            continue
        scored.append((chunk, cosine(np.asarray(vector, dtype=np.float64), query)))
    scored.sort(key=lambda pair: (-pair[1], pair[0].chunk_id))
    return scored[:k]


# --- random generators ------------------------------------------------------------

WORDS = (
    "blitz coverage snap route yards huddle screen zone pressure pocket "
    "draw sweep option fake motion shift cadence drive series down field"
).split()


def random_chunk_text(rng: random.Random, max_words: int = 12) -> str:
    n = rng.randint(1, max_words)
    return " ".join(rng.choice(WORDS) for _ in range(n))


def random_structured_query(rng: random.Random, collection: str, schema: dict) -> StructuredQuery:
    """Small random query against a known collection schema.

    schema maps field name -> ("num" | "str" | "bool", sample values).
    """
    fields = list(schema)
    conditions = []
    for _ in range(rng.randint(0, 3)):
        field = rng.choice(fields)
        kind, samples = schema[field]
        if kind == "bool":
            conditions.append(Condition(field, "=", rng.choice([True, False])))
            continue
        op = rng.choice(["=", "!=", "<", "<=", ">", ">=", "in"])
        if op == "in":
            values = rng.sample(samples, k=min(len(samples), rng.randint(1, 3)))
            conditions.append(Condition(field, "in", values))
        else:
            conditions.append(Condition(field, op, rng.choice(samples)))

    group_by = None
    aggregates = ()
    numeric_fields = [f for f, (kind, _) in schema.items() if kind == "num"]
    if rng.random() < 0.5 and numeric_fields:
        agg_field = rng.choice(numeric_fields)
        op = rng.choice(["sum", "mean", "count", "max", "last"])
        aggregates = (Aggregate(op, "*" if op == "count" and rng.random() < 0.5 else agg_field, "agg"),)
        if rng.random() < 0.6:
            group_by = (rng.choice(fields),)

    sort = None
    if rng.random() < 0.6:
        if aggregates:
            sort_field = rng.choice(list(group_by or ()) + ["agg"])
        else:
            sort_field = rng.choice(fields)
        sort = (sort_field, rng.choice(["asc", "desc"]))

    limit = rng.choice([None, None, 1, 2, 5])
    return StructuredQuery(
        collection=collection,
        filter=tuple(conditions),
        group_by=group_by,
        aggregates=aggregates,
        sort=sort,
        limit=limit,
    )
