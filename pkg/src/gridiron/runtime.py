"""In-process agent graph with a message-passing bus.

Agents register handlers for payload kinds; dispatch executes a query plan
stage by stage. Within a stage, nodes on distinct agents may run
concurrently; each agent processes its envelopes FIFO. A node that exceeds
its budget yields a timeout failure without aborting its siblings.
"""

from __future__ import annotations

import itertools
import json
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import (
    DuplicateAgent,
    QueueFull,
    RouteConflict,
    UnknownCorrelation,
    UnroutablePlan,
)
from .planner import PlanNode, QueryPlan, payload_kind, stages

DEFAULT_NODE_BUDGET_S = 10.0
DEFAULT_QUEUE_BOUND = 1024


@dataclass(frozen=True)
class Envelope:
    envelope_id: int
    correlation_id: str
    parent_id: Optional[int]
    sender: str
    recipient: str
    kind: str  # request:<payload kind> | response | failure
    summary: str
    enqueued_at: float
    processed_at: Optional[float] = None


@dataclass(frozen=True)
class NodeFailure:
    node_id: str
    reason: str  # timeout | error
    detail: str = ""
    meta: dict = field(default_factory=dict)


@dataclass
class TraceLog:
    correlation_id: str
    envelopes: list[Envelope] = field(default_factory=list)

    def ordered(self) -> list[Envelope]:
        # enqueued_at with envelope_id as the stable tiebreaker
        return sorted(self.envelopes, key=lambda e: (e.enqueued_at, e.envelope_id))

    def to_json(self) -> dict:
        return {
            "correlation_id": self.correlation_id,
            "envelopes": [
                {
                    "envelope_id": e.envelope_id,
                    "correlation_id": e.correlation_id,
                    "parent_id": e.parent_id,
                    "sender": e.sender,
                    "recipient": e.recipient,
                    "kind": e.kind,
                    "summary": e.summary,
                    "enqueued_at": e.enqueued_at,
                    "processed_at": e.processed_at,
                }
                for e in self.ordered()
            ],
        }


def trace_to_canonical_json(trace: TraceLog) -> str:
    """Canonical serialization: reparsing and re-serializing is byte-identical."""
    return json.dumps(trace.to_json(), sort_keys=True, separators=(",", ":"))


Handler = Callable[[PlanNode, dict], object]


class AgentGraph:
    """Registry of agents and payload-kind routes; reconfigurable at runtime."""

    def __init__(self) -> None:
        self.agents: dict[str, Handler] = {}
        self.routes: dict[str, str] = {}

    def register_agent(self, agent_id: str, handler: Handler, handles: list[str]) -> "AgentGraph":
        if agent_id in self.agents:
            raise DuplicateAgent(agent_id)
        for kind in handles:
            if kind in self.routes:
                raise RouteConflict(
                    f"payload kind {kind!r} already routed to {self.routes[kind]!r}"
                )
        self.agents[agent_id] = handler
        for kind in handles:
            self.routes[kind] = agent_id
        return self

    def remove_agent(self, agent_id: str) -> "AgentGraph":
        # Routes are left dangling on purpose: the next dispatch that needs
        # them raises RouteConflict.
        self.agents.pop(agent_id, None)
        return self

    def route_for(self, node: PlanNode) -> str:
        kind = payload_kind(node)
        if kind not in self.routes:
            raise UnroutablePlan(f"no route for payload kind {kind!r}")
        agent_id = self.routes[kind]
        if agent_id not in self.agents:
            raise RouteConflict(
                f"route for {kind!r} points at removed agent {agent_id!r}"
            )
        return agent_id


class Bus:
    """Executes plans over an agent graph and records per-correlation traces."""

    def __init__(
        self,
        graph: AgentGraph,
        *,
        clock: Callable[[], float] = time.monotonic,
        queue_bound: int = DEFAULT_QUEUE_BOUND,
        trace_retention: int = 1000,
    ) -> None:
        self.graph = graph
        self.clock = clock
        self.queue_bound = queue_bound
        self.trace_retention = trace_retention
        self._traces: dict[str, TraceLog] = {}
        self._trace_order: list[str] = []
        self._envelope_counter = itertools.count(1)
        self._lock = threading.Lock()

    # --- trace bookkeeping ------------------------------------------------------

    def _new_trace(self, correlation_id: str) -> TraceLog:
        with self._lock:
            trace = TraceLog(correlation_id=correlation_id)
            self._traces[correlation_id] = trace
            self._trace_order.append(correlation_id)
            while len(self._trace_order) > self.trace_retention:
                evicted = self._trace_order.pop(0)
                self._traces.pop(evicted, None)
            return trace

    def _record(self, trace: TraceLog, envelope: Envelope) -> int:
        with self._lock:
            trace.envelopes.append(envelope)
            return len(trace.envelopes) - 1

    def _replace(self, trace: TraceLog, index: int, envelope: Envelope) -> None:
        with self._lock:
            trace.envelopes[index] = envelope

    def _next_envelope_id(self) -> int:
        with self._lock:
            return next(self._envelope_counter)

    def trace(self, correlation_id: str) -> TraceLog:
        trace = self._traces.get(correlation_id)
        if trace is None:
            raise UnknownCorrelation(correlation_id)
        return trace

    # --- dispatch ----------------------------------------------------------------

    def dispatch(
        self,
        plan: QueryPlan,
        *,
        correlation_id: str,
        budget_s: float = DEFAULT_NODE_BUDGET_S,
        parallel: bool = True,
    ) -> tuple[dict[str, object], TraceLog]:
        """Run all plan stages; returns node results (SubAnswer or NodeFailure)."""
        routes = {node.node_id: self.graph.route_for(node) for node in plan.nodes}
        trace = self._new_trace(correlation_id)
        results: dict[str, object] = {}

        for layer in stages(plan):
            layer_nodes = [n for n in plan.nodes if n.node_id in layer]
            by_agent: dict[str, list[PlanNode]] = {}
            for node in layer_nodes:
                by_agent.setdefault(routes[node.node_id], []).append(node)
            for agent_id, nodes in by_agent.items():
                if len(nodes) > self.queue_bound:
                    raise QueueFull(
                        f"agent {agent_id!r} queue bound {self.queue_bound} exceeded"
                    )
            parents = {
                node.node_id: {
                    from_id: results[from_id]
                    for from_id, to_id in plan.edges
                    if to_id == node.node_id and from_id in results
                }
                for node in layer_nodes
            }
            if parallel and len(by_agent) > 1:
                with ThreadPoolExecutor(max_workers=len(by_agent)) as pool:
                    futures = [
                        pool.submit(
                            self._run_agent_queue,
                            agent_id,
                            nodes,
                            parents,
                            trace,
                            correlation_id,
                            budget_s,
                        )
                        for agent_id, nodes in by_agent.items()
                    ]
                    for future in futures:
                        results.update(future.result())
            else:
                for agent_id, nodes in by_agent.items():
                    results.update(
                        self._run_agent_queue(
                            agent_id, nodes, parents, trace, correlation_id, budget_s
                        )
                    )
        return results, trace

    def _run_agent_queue(
        self,
        agent_id: str,
        nodes: list[PlanNode],
        parents: dict[str, dict[str, object]],
        trace: TraceLog,
        correlation_id: str,
        budget_s: float,
    ) -> dict[str, object]:
        """Process one agent's envelopes FIFO, one fresh worker per timed-out node."""
        handler = self.graph.agents[agent_id]
        results: dict[str, object] = {}
        worker: Optional[ThreadPoolExecutor] = ThreadPoolExecutor(max_workers=1)
        try:
            for node in nodes:
                request = Envelope(
                    envelope_id=self._next_envelope_id(),
                    correlation_id=correlation_id,
                    parent_id=None,
                    sender="dispatcher",
                    recipient=agent_id,
                    kind=f"request:{payload_kind(node)}",
                    summary=node.label,
                    enqueued_at=self.clock(),
                    processed_at=None,
                )
                request_index = self._record(trace, request)
                context = {
                    "correlation_id": correlation_id,
                    "parents": parents.get(node.node_id, {}),
                }
                future: Future = worker.submit(handler, node, context)
                try:
                    outcome = future.result(timeout=budget_s)
                except FutureTimeout:
                    outcome = NodeFailure(
                        node_id=node.node_id,
                        reason="timeout",
                        detail=f"exceeded {budget_s}s budget",
                        meta=dict(node.meta),
                    )
                    # The stuck thread is abandoned; later nodes get a fresh
                    # worker so they keep their full budget.
                    worker.shutdown(wait=False)
                    worker = ThreadPoolExecutor(max_workers=1)
                except Exception as exc:  # noqa: BLE001 - agent errors become failures
                    outcome = NodeFailure(
                        node_id=node.node_id,
                        reason="error",
                        detail=f"{type(exc).__name__}: {exc}",
                        meta=dict(node.meta),
                    )
                now = self.clock()
                self._replace(trace, request_index, replace(request, processed_at=now))
                response = Envelope(
                    envelope_id=self._next_envelope_id(),
                    correlation_id=correlation_id,
                    parent_id=request.envelope_id,
                    sender=agent_id,
                    recipient="dispatcher",
                    kind="failure" if isinstance(outcome, NodeFailure) else "response",
                    summary=node.label,
                    enqueued_at=now,
                    processed_at=now,
                )
                self._record(trace, response)
                results[node.node_id] = outcome
        finally:
            worker.shutdown(wait=False)
        return results
