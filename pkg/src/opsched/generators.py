"""Synthetic operator-graph generators for tests and experiments."""

from __future__ import annotations

import random
from typing import Sequence

from .graph import ComputationGraph, OperatorNode, ResourceDemand, classify

_NAME_POOL = ("add", "attention", "concat", "conv", "embedding", "gemm", "matmul", "pool", "relu")


def _node(
    nid: int,
    name: str,
    duration_us: float = 10.0,
    blocks: int = 1,
    threads: int = 256,
    smem: int = 0,
    regs: int = 32,
) -> OperatorNode:
    return OperatorNode(
        id=nid,
        name=name,
        op_class=classify(name),
        demand=ResourceDemand(
            threads_per_block=threads,
            shared_mem_per_block=smem,
            registers_per_thread=regs,
            num_blocks=blocks,
        ),
        block_duration_us=duration_us,
    )


def chain(n: int, block_duration_us: float = 10.0) -> ComputationGraph:
    """Linear pipeline of n operators: 1 -> 2 -> ... -> n."""
    if n < 1:
        raise ValueError("chain needs n >= 1")
    names = ("conv", "relu")
    nodes = [_node(i, names[(i - 1) % 2], duration_us=block_duration_us) for i in range(1, n + 1)]
    edges = [(i, i + 1) for i in range(1, n)]
    return ComputationGraph(nodes, edges)


def fork(k: int, block_duration_us: float = 10.0) -> ComputationGraph:
    """One root feeding k independent children."""
    if k < 1:
        raise ValueError("fork needs k >= 1")
    names = ("relu", "conv")
    nodes = [_node(1, "conv", duration_us=block_duration_us)]
    nodes += [
        _node(i, names[(i - 2) % 2], duration_us=block_duration_us) for i in range(2, k + 2)
    ]
    edges = [(1, i) for i in range(2, k + 2)]
    return ComputationGraph(nodes, edges)


def diamond(block_duration_us: float = 10.0) -> ComputationGraph:
    """Fork-join over four operators: 1 -> {2, 3} -> 4."""
    nodes = [
        _node(1, "conv", duration_us=block_duration_us),
        _node(2, "relu", duration_us=block_duration_us),
        _node(3, "conv", duration_us=block_duration_us),
        _node(4, "add", duration_us=block_duration_us),
    ]
    return ComputationGraph(nodes, [(1, 2), (1, 3), (2, 4), (3, 4)])


def inception_block(branches: int, depth: int, block_duration_us: float = 10.0) -> ComputationGraph:
    """Root fanning out into parallel chains that re-join in a concat."""
    if branches < 1 or depth < 1:
        raise ValueError("inception_block needs branches >= 1 and depth >= 1")
    names = ("conv", "relu")
    nodes = [_node(1, "conv", duration_us=block_duration_us)]
    edges = []
    nid = 1
    tails = []
    for _ in range(branches):
        prev = 1
        for d in range(depth):
            nid += 1
            nodes.append(_node(nid, names[d % 2], duration_us=block_duration_us))
            edges.append((prev, nid))
            prev = nid
        tails.append(prev)
    join = nid + 1
    nodes.append(_node(join, "concat", duration_us=block_duration_us))
    edges += [(t, join) for t in tails]
    return ComputationGraph(nodes, edges)


def random_dag(n: int, max_width: int, seed: int) -> ComputationGraph:
    """Seeded layered DAG with at most max_width mutually unordered nodes per layer.

    Nodes are grouped into layers; every non-root node has at least one parent
    in the layer directly above it, plus up to two extra parents from any
    earlier layer. Demands, durations, and names are drawn from fixed pools so
    the same (n, max_width, seed) triple always yields the identical graph.
    """
    if n < 1:
        raise ValueError("random_dag needs n >= 1")
    if max_width < 1:
        raise ValueError("random_dag needs max_width >= 1")
    rng = random.Random(seed)
    layers: list[list[int]] = []
    nid = 0
    while nid < n:
        width = min(rng.randint(1, max_width), n - nid)
        layers.append([nid + i + 1 for i in range(width)])
        nid += width
    nodes = []
    for layer in layers:
        for v in layer:
            nodes.append(
                _node(
                    v,
                    rng.choice(_NAME_POOL),
                    duration_us=float(rng.randint(5, 50)),
                    blocks=rng.randint(1, 8),
                    threads=rng.choice((64, 128, 256, 512)),
                    smem=rng.choice((0, 4096, 16384, 32768)),
                    regs=rng.choice((16, 32, 64)),
                )
            )
    edges: set[tuple[int, int]] = set()
    earlier: list[int] = list(layers[0])
    for k in range(1, len(layers)):
        prev = layers[k - 1]
        for v in layers[k]:
            edges.add((rng.choice(prev), v))
            for _ in range(rng.randint(0, 2)):
                edges.add((rng.choice(earlier), v))
        earlier.extend(layers[k])
    return ComputationGraph(nodes, sorted(edges))


def placement_cases(block_duration_us: float = 10.0) -> ComputationGraph:
    """13-operator branching graph exercising all four stream-placement cases.

    It contains a root (new stream), pure pipeline segments (stream
    inheritance), multi-successor nodes (first successor inherits, later ones
    open streams), and two join nodes with several predecessors.
    """
    names = {
        1: "conv", 2: "conv", 3: "relu", 4: "pool", 5: "relu", 6: "conv", 7: "conv",
        8: "concat", 9: "conv", 10: "relu", 11: "pool", 12: "conv", 13: "concat",
    }
    nodes = [_node(i, names[i], duration_us=block_duration_us) for i in range(1, 14)]
    edges = [
        (1, 2), (1, 3), (1, 4),
        (2, 5), (3, 6), (4, 7),
        (5, 8), (6, 8),
        (7, 9), (7, 10),
        (8, 11), (8, 12),
        (9, 13), (10, 13), (11, 13), (12, 13),
    ]
    return ComputationGraph(nodes, edges)


def build(kind: str, params: Sequence[int], max_width: int | None = None, seed: int | None = None) -> ComputationGraph:
    """Dispatch for the CLI `gen` subcommand."""
    if kind == "chain":
        (n,) = params
        return chain(n)
    if kind == "fork":
        (k,) = params
        return fork(k)
    if kind == "diamond":
        if params:
            raise ValueError("diamond takes no parameters")
        return diamond()
    if kind == "inception":
        b, d = params
        return inception_block(b, d)
    if kind == "random":
        (n,) = params
        return random_dag(n, max_width if max_width is not None else 20, seed if seed is not None else 0)
    if kind == "cases":
        if params:
            raise ValueError("cases takes no parameters")
        return placement_cases()
    raise ValueError(f"unknown graph kind {kind!r}")
