"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for every error raised by this package."""


# --- catalog ---------------------------------------------------------------

class CatalogLoadError(EngineError):
    pass


class InvalidMention(EngineError):
    pass


class NoMatch(EngineError):
    def __init__(self, mention: str, nearest: list[str]):
        self.mention = mention
        self.nearest = nearest
        super().__init__(f"no entity matches {mention!r}; nearest: {', '.join(nearest) or 'none'}")


# --- dialogue memory -------------------------------------------------------

class SequenceError(EngineError):
    pass


# --- interpreter -----------------------------------------------------------

class Unparseable(EngineError):
    def __init__(self, prompt: str, nearest_patterns: list[str]):
        self.prompt = prompt
        self.nearest_patterns = nearest_patterns
        super().__init__(f"no grammar pattern matches {prompt!r}")


class UnresolvedEntity(EngineError):
    def __init__(self, mention: str, nearest: list[str] | None = None):
        self.mention = mention
        self.nearest = nearest or []
        super().__init__(f"cannot resolve mention {mention!r}")


class MissingContext(EngineError):
    pass


# --- planner ---------------------------------------------------------------

class UnsupportedIntent(EngineError):
    pass


class CycleError(EngineError):
    def __init__(self, edge: tuple[str, str]):
        self.edge = edge
        super().__init__(f"plan graph has a cycle through edge {edge[0]} -> {edge[1]}")


# --- structured store ------------------------------------------------------

class RecordRejected(EngineError):
    pass


class UnknownCollection(EngineError):
    pass


class UnknownField(EngineError):
    pass


class NotRanked(EngineError):
    def __init__(self, entity_id: str, metric: str, scope: str):
        super().__init__(f"no rank for entity {entity_id!r}, metric {metric!r}, scope {scope}")


# --- tracking store --------------------------------------------------------

class TooFewSamples(EngineError):
    pass


class NonMonotonicTime(EngineError):
    pass


class EmptyTrace(EngineError):
    pass


# --- vector store ----------------------------------------------------------

class EmptyCorpus(EngineError):
    pass


class DegenerateQuery(EngineError):
    pass


# --- agent runtime ---------------------------------------------------------

class DuplicateAgent(EngineError):
    pass


class RouteConflict(EngineError):
    pass


class UnroutablePlan(EngineError):
    pass


class UnknownCorrelation(EngineError):
    pass


class QueueFull(EngineError):
    pass


# --- synthesis -------------------------------------------------------------

class NoUsableSubAnswers(EngineError):
    pass


# --- evaluation harness ----------------------------------------------------

class EmptySuite(EngineError):
    pass


class NonPositiveBucket(EngineError):
    pass


class UnknownMessage(EngineError):
    pass
