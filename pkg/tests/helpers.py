"""Independent reference computations for the test suite.

Everything here recomputes expected results from first principles (or via
networkx) without touching the code paths under test, so the checks stay
meaningful as oracles.
"""

from __future__ import annotations

import math

import networkx as nx

from opsched import (
    ComputationGraph,
    GpuConfig,
    OpClass,
    OperatorNode,
    ResourceDemand,
    dominant_share,
)


def mk_node(
    nid: int,
    name: str = "conv",
    dur: float = 10.0,
    blocks: int = 1,
    threads: int = 256,
    smem: int = 0,
    regs: int = 32,
    cls: OpClass | None = None,
) -> OperatorNode:
    """Compact node constructor with an explicit class (no classify warnings)."""
    if cls is None:
        cls = OpClass.COMPUTE if name in ("conv", "matmul", "gemm") else OpClass.MEMORY
    return OperatorNode(
        id=nid,
        name=name,
        op_class=cls,
        demand=ResourceDemand(
            threads_per_block=threads,
            shared_mem_per_block=smem,
            registers_per_thread=regs,
            num_blocks=blocks,
        ),
        block_duration_us=dur,
    )


def antichain(n: int, **kw) -> ComputationGraph:
    return ComputationGraph([mk_node(i, **kw) for i in range(1, n + 1)], [])


def ample_config(num_sms: int = 256, slowdown: float = 1.0) -> GpuConfig:
    """Capacities large enough that dispatch never blocks on resources."""
    big = 1 << 24
    return GpuConfig(
        num_sms=num_sms,
        threads_per_sm=big,
        shared_mem_per_sm=big,
        registers_per_sm=big,
        max_blocks_per_sm=big,
        same_class_slowdown=slowdown,
    )


def one_sm(threads: int = 1024, slowdown: float = 1.4) -> GpuConfig:
    return GpuConfig(
        num_sms=1,
        threads_per_sm=threads,
        shared_mem_per_sm=65536,
        registers_per_sm=65536,
        max_blocks_per_sm=16,
        same_class_slowdown=slowdown,
    )


def nx_digraph(g: ComputationGraph) -> nx.DiGraph:
    dg = nx.DiGraph()
    dg.add_nodes_from(g.node_ids)
    dg.add_edges_from(g.edges)
    return dg


def nx_lex_topo(g: ComputationGraph) -> list[int]:
    return list(nx.lexicographical_topological_sort(nx_digraph(g)))


def critical_path_ns(g: ComputationGraph) -> int:
    """Longest path by per-block duration, ignoring contention entirely."""
    dist: dict[int, int] = {}
    for v in g.topo_sort():
        base = max((dist[p] for p in g.predecessors(v)), default=0)
        dist[v] = base + g.node(v).block_duration_ns
    return max(dist.values()) if dist else 0


def device_block_fit(demand: ResourceDemand, cfg: GpuConfig) -> int:
    """Blocks of this shape that run concurrently across the whole device."""
    per_sm = cfg.max_blocks_per_sm
    if demand.threads_per_block:
        per_sm = min(per_sm, cfg.threads_per_sm // demand.threads_per_block)
    if demand.shared_mem_per_block:
        per_sm = min(per_sm, cfg.shared_mem_per_sm // demand.shared_mem_per_block)
    if demand.registers_per_block:
        per_sm = min(per_sm, cfg.registers_per_sm // demand.registers_per_block)
    return per_sm * cfg.num_sms


def waves_makespan_ns(g: ComputationGraph, cfg: GpuConfig) -> int:
    """Sequential reference: one operator at a time, blocks in full-device waves."""
    total = 0
    for n in g.nodes:
        fit = device_block_fit(n.demand, cfg)
        total += math.ceil(n.demand.num_blocks / fit) * n.block_duration_ns
    return total


def assert_dependency_safe(g: ComputationGraph, result) -> None:
    for (u, v) in g.edges:
        assert result.op_start_ns(v) >= result.op_end_ns(u), (
            f"edge ({u}, {v}): start {result.op_start_ns(v)} < end {result.op_end_ns(u)}"
        )


def assert_capacity_respected(g: ComputationGraph, result, cfg: GpuConfig) -> None:
    """Sweep the block log; occupancy must stay within capacity on every SM."""
    demand = {n.id: n.demand for n in g.nodes}
    events = []
    for b in result.blocks:
        events.append((b.start_ns, 1, b.sm, demand[b.op_id]))
        events.append((b.end_ns, 0, b.sm, demand[b.op_id]))
    # frees sort before claims at the same instant, as in the event loop
    events.sort(key=lambda e: (e[0], e[1]))
    thr = [0] * cfg.num_sms
    smem = [0] * cfg.num_sms
    regs = [0] * cfg.num_sms
    slots = [0] * cfg.num_sms
    for t, kind, sm, d in events:
        sign = 1 if kind else -1
        thr[sm] += sign * d.threads_per_block
        smem[sm] += sign * d.shared_mem_per_block
        regs[sm] += sign * d.registers_per_block
        slots[sm] += sign
        assert thr[sm] <= cfg.threads_per_sm, f"threads over capacity on SM {sm} at {t}"
        assert smem[sm] <= cfg.shared_mem_per_sm, f"shared mem over capacity on SM {sm} at {t}"
        assert regs[sm] <= cfg.registers_per_sm, f"registers over capacity on SM {sm} at {t}"
        assert slots[sm] <= cfg.max_blocks_per_sm, f"block slots over capacity on SM {sm} at {t}"


def replay_alternating_order(g: ComputationGraph, cfg: GpuConfig, order) -> None:
    """Re-derive the two-list policy step by step and match it against `order`.

    At each step the emitted node must belong to the expected class (memory
    first, then the opposite of whatever was just launched, skipping empty
    lists) and carry the minimal (dominant share, id) key within that class.
    """
    score = {n.id: dominant_share(n.demand, cfg) for n in g.nodes}
    cls = {n.id: n.op_class for n in g.nodes}
    indeg = {v: len(g.predecessors(v)) for v in g.node_ids}
    ready = {v for v in g.node_ids if indeg[v] == 0}
    other = {OpClass.MEMORY: OpClass.COMPUTE, OpClass.COMPUTE: OpClass.MEMORY}
    preferred = OpClass.MEMORY
    for v in order:
        assert v in ready, f"{v} launched before ready"
        of_class = {c: [w for w in ready if cls[w] is c] for c in other}
        chosen = preferred if of_class[preferred] else other[preferred]
        assert cls[v] is chosen, f"{v} breaks the alternation at {order}"
        expected = min(of_class[chosen], key=lambda w: (score[w], w))
        assert v == expected, f"{v} is not the cheapest ready {chosen} node"
        ready.remove(v)
        for s in g.successors(v):
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.add(s)
        preferred = other[chosen]
    assert not ready
