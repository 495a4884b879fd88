"""Exhaustive reference search over launch orders and stream plans.

Tiny graphs only: the order space is the set of linear extensions (up to n!)
and the plan space is the set of stream partitions. Enumeration order is
deterministic, so ties always resolve to the lexicographically first
candidate. These searches exist to bound and sanity-check the heuristics, not
to be fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .allocator import DEFAULT_SYNC_OVERHEAD_US, StreamPlan, single_stream_plan
from .graph import ComputationGraph
from .simulator import GpuConfig, simulate


@dataclass(frozen=True)
class OracleResult:
    """Best launch order found for a fixed plan."""

    best_makespan_ns: int
    best_order: tuple[int, ...]
    orders_examined: int
    search_space_exhausted: bool

    @property
    def best_makespan_us(self) -> float:
        return self.best_makespan_ns / 1000


@dataclass(frozen=True)
class PlanSearchResult:
    """Best (plan, order) pair under the sync-overhead-inclusive objective."""

    best_total_ns: int
    best_makespan_ns: int
    best_plan: StreamPlan
    best_order: tuple[int, ...]
    plans_examined: int
    orders_examined: int
    search_space_exhausted: bool

    @property
    def best_total_us(self) -> float:
        return self.best_total_ns / 1000


def linear_extensions(g: ComputationGraph) -> Iterator[tuple[int, ...]]:
    """Yield every linear extension in lexicographic order (by node id)."""
    indeg = {v: len(g.predecessors(v)) for v in g.node_ids}
    ready = sorted(v for v in g.node_ids if indeg[v] == 0)
    prefix: list[int] = []

    def walk() -> Iterator[tuple[int, ...]]:
        if len(prefix) == len(indeg):
            yield tuple(prefix)
            return
        for v in list(ready):
            ready.remove(v)
            prefix.append(v)
            opened = []
            for s in g.successors(v):
                indeg[s] -= 1
                if indeg[s] == 0:
                    opened.append(s)
            for s in opened:
                _insort(ready, s)
            yield from walk()
            for s in opened:
                ready.remove(s)
            for s in g.successors(v):
                indeg[s] += 1
            prefix.pop()
            _insort(ready, v)

    yield from walk()


def _insort(lst: list[int], v: int) -> None:
    lo = 0
    while lo < len(lst) and lst[lo] < v:
        lo += 1
    lst.insert(lo, v)


def best_order(
    g: ComputationGraph,
    plan: StreamPlan,
    cfg: GpuConfig,
    limit: int | None = None,
) -> OracleResult:
    """Simulate every linear extension under a fixed plan; keep the minimum.

    Stops after `limit` orders when given; search_space_exhausted reports
    whether the whole space was covered. The first-found minimum wins ties, so
    the reported order is the lexicographically smallest optimum.
    """
    best_ns: int | None = None
    best: tuple[int, ...] = ()
    examined = 0
    exhausted = True
    for order in linear_extensions(g):
        if limit is not None and examined >= limit:
            exhausted = False
            break
        examined += 1
        ns = simulate(g, plan, order, cfg).makespan_ns
        if best_ns is None or ns < best_ns:
            best_ns = ns
            best = order
    if best_ns is None:
        best_ns = 0
    return OracleResult(
        best_makespan_ns=best_ns,
        best_order=best,
        orders_examined=examined,
        search_space_exhausted=exhausted,
    )


def _partitions(ids: list[int], max_streams: int) -> Iterator[dict[int, int]]:
    """Canonical stream assignments: node i joins an open stream or the next
    fresh one, capped at max_streams. First-seen numbering removes relabeling
    duplicates."""
    assignment: dict[int, int] = {}

    def walk(i: int, used: int) -> Iterator[dict[int, int]]:
        if i == len(ids):
            yield dict(assignment)
            return
        v = ids[i]
        cap = min(used + 1, max_streams)
        for s in range(cap):
            assignment[v] = s
            yield from walk(i + 1, max(used, s + 1))
        del assignment[v]

    yield from walk(0, 0)


def best_plan(
    g: ComputationGraph,
    cfg: GpuConfig,
    max_streams: int | None = None,
    limit: int | None = None,
    sync_overhead_us: float = DEFAULT_SYNC_OVERHEAD_US,
) -> PlanSearchResult:
    """Search stream assignments jointly with launch orders.

    The objective is makespan plus sync-event count times the overhead, so an
    extra stream must pay for its synchronization. `limit` caps the total
    number of simulated (plan, order) pairs.
    """
    ids = g.topo_sort()
    cap = len(ids) if max_streams is None else max_streams
    overhead_ns = round(sync_overhead_us * 1000)
    edges = g.edges
    best_total: int | None = None
    best_span = 0
    best_pl: StreamPlan | None = None
    best_ord: tuple[int, ...] = ()
    plans = 0
    orders = 0
    exhausted = True
    budget_left = limit
    for assignment in _partitions(ids, cap):
        if budget_left is not None and budget_left <= 0:
            exhausted = False
            break
        num_streams = max(assignment.values()) + 1 if assignment else 0
        sync = tuple(sorted(
            (u, v) for (u, v) in edges if assignment[u] != assignment[v]
        ))
        plan = StreamPlan(assignment=assignment, num_streams=num_streams, sync_events=sync)
        sub = best_order(g, plan, cfg, limit=budget_left)
        plans += 1
        orders += sub.orders_examined
        if budget_left is not None:
            budget_left -= sub.orders_examined
        if not sub.search_space_exhausted:
            exhausted = False
        if sub.orders_examined == 0:
            continue
        total = sub.best_makespan_ns + len(sync) * overhead_ns
        if best_total is None or total < best_total:
            best_total = total
            best_span = sub.best_makespan_ns
            best_pl = plan
            best_ord = sub.best_order
    if best_pl is None:
        best_pl = single_stream_plan(g)
        best_total = 0
    return PlanSearchResult(
        best_total_ns=best_total,
        best_makespan_ns=best_span,
        best_plan=best_pl,
        best_order=best_ord,
        plans_examined=plans,
        orders_examined=orders,
        search_space_exhausted=exhausted,
    )
