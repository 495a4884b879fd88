"""Operator launch ordering.

The launch order is the sequence in which kernels are handed to the device; on
the modeled GPU it determines who dispatches first among operators that become
ready together. The resource- and interference-aware policy keeps two ready
lists split by operator class, alternates between them so compute- and
memory-intensive kernels interleave, and always launches the cheapest ready
operator first so small kernels are not stuck behind resource hogs.
"""

from __future__ import annotations

import bisect
import heapq
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import FormatError
from .graph import ComputationGraph, OpClass, ResourceDemand, _read_json
from .simulator import GpuConfig

POLICIES = ("opara", "dfs", "wavefront", "random", "sequential")


@dataclass(frozen=True)
class LaunchSchedule:
    """A launch order plus the policy (and seed, if any) that produced it."""

    order: tuple[int, ...]
    policy: str
    seed: int | None = None


@dataclass(frozen=True, order=True)
class ResourceScore:
    """Sort key for ready operators: dominant resource share, then id."""

    dominant_share: float
    node_id: int


def dominant_share(demand: ResourceDemand, cfg: GpuConfig) -> float:
    """Fraction of one SM consumed by the kernel's scarcest resource, scaled
    by its block count."""
    share = max(
        demand.threads_per_block / cfg.threads_per_sm,
        demand.shared_mem_per_block / cfg.shared_mem_per_sm,
        demand.registers_per_block / cfg.registers_per_sm,
    )
    return share * demand.num_blocks


def resource_score(g: ComputationGraph, node_id: int, cfg: GpuConfig) -> ResourceScore:
    return ResourceScore(dominant_share(g.node(node_id).demand, cfg), node_id)


def order_opara(g: ComputationGraph, cfg: GpuConfig) -> LaunchSchedule:
    """Alternating two-list launch order, cheapest ready operator first.

    Ready operators sit in a memory-intensive or a compute-intensive list by
    class. Each step takes the minimum-score operator from the preferred list,
    starting with the memory list and flipping preference to the class not
    just launched; an empty list simply cedes its turn, so launches never
    stall. Ties in score break by node id.
    """
    score = {n.id: dominant_share(n.demand, cfg) for n in g.nodes}
    cls = {n.id: n.op_class for n in g.nodes}
    indeg = {v: len(g.predecessors(v)) for v in g.node_ids}
    lists: dict[OpClass, list[tuple[float, int]]] = {OpClass.MEMORY: [], OpClass.COMPUTE: []}
    for v in g.node_ids:
        if indeg[v] == 0:
            heapq.heappush(lists[cls[v]], (score[v], v))
    other = {OpClass.MEMORY: OpClass.COMPUTE, OpClass.COMPUTE: OpClass.MEMORY}
    preferred = OpClass.MEMORY
    out: list[int] = []
    while lists[OpClass.MEMORY] or lists[OpClass.COMPUTE]:
        chosen = preferred if lists[preferred] else other[preferred]
        _, v = heapq.heappop(lists[chosen])
        out.append(v)
        for s in g.successors(v):
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(lists[cls[s]], (score[s], s))
        preferred = other[chosen]
    return LaunchSchedule(order=tuple(out), policy="opara")


def _order_dfs(g: ComputationGraph) -> list[int]:
    indeg = {v: len(g.predecessors(v)) for v in g.node_ids}
    roots = [v for v in g.node_ids if indeg[v] == 0]
    out: list[int] = []
    for r in roots:
        stack = [(r, iter(g.successors(r)))]
        out.append(r)
        while stack:
            v, succ_iter = stack[-1]
            advanced = False
            for s in succ_iter:
                indeg[s] -= 1
                if indeg[s] == 0:
                    out.append(s)
                    stack.append((s, iter(g.successors(s))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
    return out


def _order_wavefront(g: ComputationGraph) -> list[int]:
    level: dict[int, int] = {}
    for v in g.topo_sort():
        preds = g.predecessors(v)
        level[v] = 0 if not preds else max(level[p] for p in preds) + 1
    return sorted(g.node_ids, key=lambda v: (level[v], v))


def _order_random(g: ComputationGraph, seed: int) -> list[int]:
    rng = random.Random(seed)
    indeg = {v: len(g.predecessors(v)) for v in g.node_ids}
    ready = sorted(v for v in g.node_ids if indeg[v] == 0)
    out: list[int] = []
    while ready:
        v = ready.pop(rng.randrange(len(ready)))
        out.append(v)
        for s in g.successors(v):
            indeg[s] -= 1
            if indeg[s] == 0:
                bisect.insort(ready, s)
    return out


def order_baseline(g: ComputationGraph, policy: str, seed: int | None = None) -> LaunchSchedule:
    """Reference orders: dfs, wavefront, random, sequential.

    dfs walks from the roots in id order and emits each node the moment its
    last predecessor is emitted. wavefront emits whole dependency levels in id
    order. random picks uniformly among ready nodes at each step under the
    seed. sequential is the deterministic topological order.
    """
    if policy == "dfs":
        return LaunchSchedule(order=tuple(_order_dfs(g)), policy="dfs")
    if policy == "wavefront":
        return LaunchSchedule(order=tuple(_order_wavefront(g)), policy="wavefront")
    if policy == "random":
        actual = 0 if seed is None else seed
        return LaunchSchedule(order=tuple(_order_random(g, actual)), policy="random", seed=actual)
    if policy == "sequential":
        return LaunchSchedule(order=tuple(g.topo_sort()), policy="sequential")
    raise ValueError(f"unknown baseline policy {policy!r}")


def make_order(g: ComputationGraph, policy: str, cfg: GpuConfig, seed: int | None = None) -> LaunchSchedule:
    """Order under any named policy, opara included."""
    if policy == "opara":
        return order_opara(g, cfg)
    return order_baseline(g, policy, seed)


def schedule_to_dict(sched: LaunchSchedule) -> dict:
    return {"policy": sched.policy, "seed": sched.seed, "order": list(sched.order)}


def save_schedule(sched: LaunchSchedule, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(sched), indent=2, sort_keys=True) + "\n")


def load_schedule(path: str | Path) -> LaunchSchedule:
    data = _read_json(path)
    if "order" not in data or not isinstance(data["order"], list):
        raise FormatError(f"{path}: missing 'order' list")
    seed = data.get("seed")
    return LaunchSchedule(
        order=tuple(int(v) for v in data["order"]),
        policy=str(data.get("policy", "unknown")),
        seed=None if seed is None else int(seed),
    )
