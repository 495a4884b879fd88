"""Stream allocation and plan-level cost evaluation.

An operator is mapped to exactly one stream. Allocation walks the graph in
topological order and lets each node inherit the stream of its first
predecessor that has not yet donated downstream; every predecessor donates at
most once, so each stream holds a path through the DAG. Edges that cross
streams become synchronization events, and the total inferred latency charges
a fixed overhead per such event on top of the simulated parallel makespan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import FormatError, PlanViolationError
from .graph import ComputationGraph, _read_json

DEFAULT_SYNC_OVERHEAD_US = 5.0


@dataclass(frozen=True)
class StreamPlan:
    """Assignment of operators to streams plus the implied sync events."""

    assignment: Mapping[int, int]
    num_streams: int
    sync_events: tuple[tuple[int, int], ...]

    def stream_of(self, node_id: int) -> int:
        return self.assignment[node_id]

    def streams(self) -> dict[int, list[int]]:
        """Stream id -> member node ids, ascending."""
        out: dict[int, list[int]] = {s: [] for s in range(self.num_streams)}
        for v in sorted(self.assignment):
            out[self.assignment[v]].append(v)
        return out


def allocate_streams(g: ComputationGraph) -> StreamPlan:
    """Donate-once stream placement over the topological order.

    Each node scans its predecessors in ascending id order and joins the
    stream of the first one still holding its donation; that predecessor is
    then marked as spent. Nodes with no available donor open a new stream.
    Stream ids are dense and numbered in creation order.
    """
    donated = {v: False for v in g.node_ids}
    assignment: dict[int, int] = {}
    next_stream = 0
    for v in g.topo_sort():
        donor = None
        for p in g.predecessors(v):
            if not donated[p]:
                donor = p
                break
        if donor is None:
            assignment[v] = next_stream
            next_stream += 1
        else:
            assignment[v] = assignment[donor]
            donated[donor] = True
    sync = tuple(sorted((u, v) for (u, v) in g.edges if assignment[u] != assignment[v]))
    return StreamPlan(assignment=assignment, num_streams=next_stream, sync_events=sync)


def single_stream_plan(g: ComputationGraph) -> StreamPlan:
    """Everything on one stream; no cross-stream edges, no sync events."""
    ids = g.node_ids
    return StreamPlan(
        assignment={v: 0 for v in ids},
        num_streams=1 if ids else 0,
        sync_events=(),
    )


def validate_plan(g: ComputationGraph, plan: StreamPlan) -> list[str]:
    """Return human-readable violations; an empty list means the plan is valid."""
    problems: list[str] = []
    ids = set(g.node_ids)
    for v in sorted(ids):
        if v not in plan.assignment:
            problems.append(f"node {v} unassigned")
    for v in sorted(plan.assignment):
        if v not in ids:
            problems.append(f"assigned node {v} not in graph")
    used = sorted(set(plan.assignment.values()))
    if used and used != list(range(plan.num_streams)):
        problems.append(
            f"stream ids must be dense 0..{plan.num_streams - 1}, got {used}"
        )
    if not plan.assignment and plan.num_streams != 0:
        problems.append("num_streams must be 0 for an empty assignment")
    sync = set(plan.sync_events)
    edges = set(g.edges)
    for (u, v) in sorted(sync - edges):
        problems.append(f"sync event ({u}, {v}) is not a graph edge")
    for (u, v) in g.edges:
        if u not in plan.assignment or v not in plan.assignment:
            continue
        crosses = plan.assignment[u] != plan.assignment[v]
        if crosses and (u, v) not in sync:
            problems.append(f"missing sync for cross-stream edge ({u}, {v})")
        if not crosses and (u, v) in sync:
            problems.append(f"sync event ({u}, {v}) joins same-stream nodes")
    return problems


def plan_to_dict(plan: StreamPlan, g: ComputationGraph) -> dict:
    """Plan as a JSON-serializable dict; stream members in topological order."""
    pos = {v: i for i, v in enumerate(g.topo_sort())}
    streams: dict[str, list[int]] = {}
    for s, members in plan.streams().items():
        streams[str(s)] = sorted(members, key=lambda v: pos[v])
    return {
        "streams": streams,
        "sync": [list(e) for e in plan.sync_events],
        "num_streams": plan.num_streams,
    }


def save_plan(plan: StreamPlan, g: ComputationGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan, g), indent=2, sort_keys=True) + "\n")


def load_plan(path: str | Path) -> StreamPlan:
    data = _read_json(path)
    for key in ("streams", "sync", "num_streams"):
        if key not in data:
            raise FormatError(f"{path}: missing {key!r}")
    if not isinstance(data["streams"], dict):
        raise FormatError(f"{path}: 'streams' must be an object")
    assignment: dict[int, int] = {}
    for sid_raw, members in data["streams"].items():
        try:
            sid = int(sid_raw)
        except ValueError:
            raise FormatError(f"{path}: stream id {sid_raw!r} is not an integer") from None
        if not isinstance(members, list):
            raise FormatError(f"{path}: stream {sid_raw} members must be a list")
        for v in members:
            v = int(v)
            if v in assignment:
                raise FormatError(f"{path}: node {v} appears in more than one stream")
            assignment[v] = sid
    sync = []
    for raw in data["sync"]:
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise FormatError(f"{path}: sync entries must be [u, v] pairs")
        sync.append((int(raw[0]), int(raw[1])))
    return StreamPlan(
        assignment=assignment,
        num_streams=int(data["num_streams"]),
        sync_events=tuple(sorted(sync)),
    )


@dataclass(frozen=True)
class PlanCost:
    """Latency decomposition of one (plan, order) pair.

    total_us = parallel_us + sync_count * sync_overhead_us. parallel_ratio is
    parallel_us / sequential_us, reported as measured: a value above 1 means
    the plan ran slower than the single-stream baseline and is flagged rather
    than clamped.
    """

    sequential_us: float
    parallel_us: float
    parallel_ratio: float
    sync_count: int
    sync_overhead_us: float
    total_us: float
    exceeds_sequential: bool


def evaluate_plan(
    g: ComputationGraph,
    plan: StreamPlan,
    order,
    cfg,
    sync_overhead_us: float = DEFAULT_SYNC_OVERHEAD_US,
) -> PlanCost:
    """Simulate a plan under a launch order and decompose the cost."""
    from .simulator import sequential_makespan_ns, simulate  # circular at module scope

    problems = validate_plan(g, plan)
    if problems:
        raise PlanViolationError("; ".join(problems))
    seq_ns = sequential_makespan_ns(g, cfg)
    para_ns = simulate(g, plan, order, cfg).makespan_ns
    seq_us = seq_ns / 1000
    para_us = para_ns / 1000
    count = len(plan.sync_events)
    return PlanCost(
        sequential_us=seq_us,
        parallel_us=para_us,
        parallel_ratio=para_ns / seq_ns if seq_ns else 0.0,
        sync_count=count,
        sync_overhead_us=sync_overhead_us,
        total_us=para_us + count * sync_overhead_us,
        exceeds_sequential=para_ns > seq_ns,
    )
