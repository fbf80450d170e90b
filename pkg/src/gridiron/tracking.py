"""Player position traces per play: kinematics and field-coverage metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .catalog import iter_jsonl
from .errors import EmptyTrace, NonMonotonicTime, TooFewSamples

logger = logging.getLogger(__name__)

FIELD_LENGTH = 120.0
FIELD_WIDTH = 53.3
BOUNDS_TOLERANCE = 0.5


@dataclass(frozen=True)
class Trace:
    play_id: str
    player_id: str
    samples: tuple[tuple[float, float, float], ...]  # (t seconds, x yards, y yards)


@dataclass(frozen=True)
class KinematicSeries:
    speeds: tuple[float, ...]  # per interval, yards/second
    accelerations: tuple[float, ...]  # per interior interval pair, yards/second^2
    max_speed: float
    mean_speed: float


@dataclass(frozen=True)
class CoverageSummary:
    cells_visited: int
    coverage_fraction: float


def _clamp_sample(t: float, x: float, y: float) -> tuple[float, float, float]:
    cx = min(max(x, 0.0), FIELD_LENGTH)
    cy = min(max(y, 0.0), FIELD_WIDTH)
    if cx != x or cy != y:
        logger.warning("sample (%s, %s) outside field bounds; clamped", x, y)
    return t, cx, cy


def make_trace(play_id: str, player_id: str, samples: Iterable[Iterable[float]]) -> Trace:
    """Build a trace, clamping out-of-bounds samples (tolerance ±0.5 yd)."""
    cleaned = []
    for sample in samples:
        t, x, y = (float(v) for v in sample)
        if -BOUNDS_TOLERANCE <= x <= FIELD_LENGTH + BOUNDS_TOLERANCE:
            x = min(max(x, 0.0), FIELD_LENGTH)
        if -BOUNDS_TOLERANCE <= y <= FIELD_WIDTH + BOUNDS_TOLERANCE:
            y = min(max(y, 0.0), FIELD_WIDTH)
        cleaned.append(_clamp_sample(t, x, y))
    return Trace(play_id=play_id, player_id=player_id, samples=tuple(cleaned))


def derive_kinematics(trace: Trace) -> KinematicSeries:
    """Forward-difference speeds; accelerations over midpoint-to-midpoint gaps."""
    samples = trace.samples
    if len(samples) < 2:
        raise TooFewSamples(f"{len(samples)} sample(s); need at least 2 for speed")
    for (t0, _, _), (t1, _, _) in zip(samples, samples[1:]):
        if t1 <= t0:
            raise NonMonotonicTime(f"timestamps not strictly increasing: {t0} -> {t1}")

    speeds = []
    for (t0, x0, y0), (t1, x1, y1) in zip(samples, samples[1:]):
        speeds.append(math.hypot(x1 - x0, y1 - y0) / (t1 - t0))

    accelerations = []
    for j in range(len(speeds) - 1):
        gap = (samples[j + 2][0] - samples[j][0]) / 2.0
        accelerations.append(abs(speeds[j + 1] - speeds[j]) / gap)

    return KinematicSeries(
        speeds=tuple(speeds),
        accelerations=tuple(accelerations),
        max_speed=max(speeds),
        mean_speed=sum(speeds) / len(speeds),
    )


def field_coverage(trace: Trace, cell_size: float = 1.0) -> CoverageSummary:
    """Distinct grid cells visited by samples; no interpolation between them."""
    if not trace.samples:
        raise EmptyTrace(f"trace {trace.play_id}/{trace.player_id} has no samples")
    cells = {
        (math.floor(x / cell_size), math.floor(y / cell_size))
        for _, x, y in trace.samples
    }
    total = math.ceil(FIELD_LENGTH / cell_size) * math.ceil(FIELD_WIDTH / cell_size)
    return CoverageSummary(cells_visited=len(cells), coverage_fraction=len(cells) / total)


@dataclass(frozen=True)
class TrackingQuery:
    """Trace retrieval payload routed to the tracking agent."""

    play_id: Optional[str] = None
    player_id: Optional[str] = None


class TrackingStore:
    """Immutable after load; concurrent reads are safe."""

    def __init__(self, traces: Iterable[Trace] = ()):
        self._traces: list[Trace] = list(traces)

    def __len__(self) -> int:
        return len(self._traces)

    def add(self, trace: Trace) -> None:
        self._traces.append(trace)

    def query_traces(
        self, play_id: Optional[str] = None, player_id: Optional[str] = None
    ) -> list[Trace]:
        return [
            t
            for t in self._traces
            if (play_id is None or t.play_id == play_id)
            and (player_id is None or t.player_id == player_id)
        ]

    @classmethod
    def from_file(cls, path: str | Path) -> "TrackingStore":
        store = cls()
        for _, record in iter_jsonl(path):
            store.add(make_trace(record["play_id"], record["player_id"], record["samples"]))
        return store
