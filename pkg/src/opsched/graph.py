"""Operator graph data model.

A computation graph is a DAG of operators. Each operator carries the resource
demand of one kernel launch (thread blocks, threads, shared memory, registers)
and a per-block duration. Graphs are immutable once constructed and every
traversal order exposed here is deterministic, with ascending node id as the
universal tie-break.
"""

from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import FormatError, GraphValidationError


class OpClass(Enum):
    """Coarse operator classification used by the interference-aware order."""

    COMPUTE = "compute"
    MEMORY = "memory"


_COMPUTE_NAMES = frozenset({"conv", "matmul", "sgemm", "gemm", "attention"})
_MEMORY_NAMES = frozenset(
    {"relu", "add", "concat", "pool", "embedding", "arange", "to", "ones"}
)


def classify(name: str) -> OpClass:
    """Map an operator label to its default class.

    Lookup is an exact, case-insensitive match against the built-in table.
    Unknown labels fall back to compute-intensive with a warning; an explicit
    class on a node always takes precedence over this table.
    """
    key = name.strip().lower()
    if key in _COMPUTE_NAMES:
        return OpClass.COMPUTE
    if key in _MEMORY_NAMES:
        return OpClass.MEMORY
    warnings.warn(
        f"unknown operator name {name!r}: treating as compute-intensive",
        stacklevel=2,
    )
    return OpClass.COMPUTE


@dataclass(frozen=True)
class ResourceDemand:
    """Per-launch resource demand of one operator."""

    threads_per_block: int
    shared_mem_per_block: int
    registers_per_thread: int
    num_blocks: int

    def __post_init__(self) -> None:
        for field in ("threads_per_block", "shared_mem_per_block", "registers_per_thread"):
            if getattr(self, field) < 0:
                raise GraphValidationError(f"{field} must be >= 0, got {getattr(self, field)}")
        if self.num_blocks < 1:
            raise GraphValidationError(f"num_blocks must be >= 1, got {self.num_blocks}")

    @property
    def registers_per_block(self) -> int:
        return self.registers_per_thread * self.threads_per_block


@dataclass(frozen=True)
class OperatorNode:
    """One operator: identity, class, demand, and per-block duration."""

    id: int
    name: str
    op_class: OpClass
    demand: ResourceDemand
    block_duration_us: float

    def __post_init__(self) -> None:
        if self.block_duration_us <= 0:
            raise GraphValidationError(
                f"node {self.id}: block_duration_us must be > 0, got {self.block_duration_us}"
            )
        if self.block_duration_ns < 1:
            raise GraphValidationError(
                f"node {self.id}: block duration rounds below 1 ns"
            )

    @property
    def block_duration_ns(self) -> int:
        """Duration in integer nanoseconds; all simulation time is integral."""
        return round(self.block_duration_us * 1000)


class ComputationGraph:
    """Immutable operator DAG with deterministic adjacency.

    Nodes are kept sorted by id; predecessors and successors come back in
    ascending id order. Construction validates the node set, the edge set, and
    acyclicity, so a live instance is always a well-formed DAG.
    """

    def __init__(self, nodes: Iterable[OperatorNode], edges: Iterable[tuple[int, int]]):
        node_list = sorted(nodes, key=lambda n: n.id)
        by_id: dict[int, OperatorNode] = {}
        for node in node_list:
            if node.id in by_id:
                raise GraphValidationError(f"duplicate node id {node.id}")
            by_id[node.id] = node
        edge_list = [(int(u), int(v)) for (u, v) in edges]
        seen: set[tuple[int, int]] = set()
        preds: dict[int, list[int]] = {i: [] for i in by_id}
        succs: dict[int, list[int]] = {i: [] for i in by_id}
        for u, v in edge_list:
            if u not in by_id or v not in by_id:
                raise GraphValidationError(f"edge ({u}, {v}) references an unknown node")
            if u == v:
                raise GraphValidationError(f"self-edge ({u}, {v})")
            if (u, v) in seen:
                raise GraphValidationError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            succs[u].append(v)
            preds[v].append(u)
        self._nodes = tuple(node_list)
        self._by_id = by_id
        self._preds = {i: tuple(sorted(ps)) for i, ps in preds.items()}
        self._succs = {i: tuple(sorted(ss)) for i, ss in succs.items()}
        self._edges = tuple(sorted(seen))
        self._topo = self._kahn()

    def _kahn(self) -> tuple[int, ...]:
        indeg = {i: len(self._preds[i]) for i in self._by_id}
        ready = [i for i, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order: list[int] = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for s in self._succs[v]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(ready, s)
        if len(order) != len(self._by_id):
            stuck = sorted(i for i, d in indeg.items() if d > 0)
            raise GraphValidationError(f"cycle involving nodes {stuck}")
        return tuple(order)

    def __len__(self) -> int:
        return len(self._nodes)

    def __repr__(self) -> str:
        return f"ComputationGraph(nodes={len(self._nodes)}, edges={len(self._edges)})"

    @property
    def nodes(self) -> tuple[OperatorNode, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self._nodes)

    def node(self, node_id: int) -> OperatorNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def predecessors(self, node_id: int) -> tuple[int, ...]:
        """Direct predecessors of a node, ascending id."""
        try:
            return self._preds[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def successors(self, node_id: int) -> tuple[int, ...]:
        """Direct successors of a node, ascending id."""
        try:
            return self._succs[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def topo_sort(self) -> list[int]:
        """Deterministic topological order (Kahn's algorithm, id tie-break)."""
        return list(self._topo)

    def is_linear_extension(self, order: Sequence[int]) -> bool:
        """True when `order` is a permutation of the nodes respecting all edges."""
        if sorted(order) != sorted(self._by_id):
            return False
        pos = {v: i for i, v in enumerate(order)}
        return all(pos[u] < pos[v] for (u, v) in self._edges)


_NODE_KEYS = (
    "id",
    "name",
    "blocks",
    "threads_per_block",
    "shared_mem_bytes",
    "registers_per_thread",
    "block_duration_us",
)


def _node_from_dict(raw: Mapping, where: str) -> OperatorNode:
    if not isinstance(raw, Mapping):
        raise FormatError(f"{where}: node entries must be objects")
    for key in _NODE_KEYS:
        if key not in raw:
            raise FormatError(f"{where}: node {raw.get('id', '?')} is missing {key!r}")
    cls_raw = raw.get("class")
    if cls_raw is None:
        op_class = classify(str(raw["name"]))
    else:
        try:
            op_class = OpClass(cls_raw)
        except ValueError:
            raise FormatError(
                f"{where}: node {raw['id']} has unknown class {cls_raw!r}"
                " (expected 'compute' or 'memory')"
            ) from None
    demand = ResourceDemand(
        threads_per_block=int(raw["threads_per_block"]),
        shared_mem_per_block=int(raw["shared_mem_bytes"]),
        registers_per_thread=int(raw["registers_per_thread"]),
        num_blocks=int(raw["blocks"]),
    )
    return OperatorNode(
        id=int(raw["id"]),
        name=str(raw["name"]),
        op_class=op_class,
        demand=demand,
        block_duration_us=float(raw["block_duration_us"]),
    )


def _read_json(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top-level JSON value must be an object")
    return data


def load_graph(path: str | Path) -> ComputationGraph:
    """Read a graph file.

    Expected shape::

        {"nodes": [{"id": 1, "name": "conv", "class": "compute",
                    "blocks": 4, "threads_per_block": 256,
                    "shared_mem_bytes": 0, "registers_per_thread": 32,
                    "block_duration_us": 10.0}, ...],
         "edges": [[1, 2], ...]}

    "class" is optional; omitted classes come from `classify`. Malformed files
    raise FormatError, structural problems raise GraphValidationError.
    """
    data = _read_json(path)
    if "nodes" not in data or not isinstance(data["nodes"], list):
        raise FormatError(f"{path}: missing 'nodes' list")
    if "edges" not in data or not isinstance(data["edges"], list):
        raise FormatError(f"{path}: missing 'edges' list")
    nodes = [_node_from_dict(raw, str(path)) for raw in data["nodes"]]
    edges = []
    for raw in data["edges"]:
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise FormatError(f"{path}: edges must be [u, v] pairs, got {raw!r}")
        edges.append((int(raw[0]), int(raw[1])))
    return ComputationGraph(nodes, edges)


def graph_to_dict(g: ComputationGraph) -> dict:
    """Graph as a JSON-serializable dict; inverse of the load_graph schema."""
    return {
        "nodes": [
            {
                "id": n.id,
                "name": n.name,
                "class": n.op_class.value,
                "blocks": n.demand.num_blocks,
                "threads_per_block": n.demand.threads_per_block,
                "shared_mem_bytes": n.demand.shared_mem_per_block,
                "registers_per_thread": n.demand.registers_per_thread,
                "block_duration_us": n.block_duration_us,
            }
            for n in g.nodes
        ],
        "edges": [list(e) for e in g.edges],
    }


def save_graph(g: ComputationGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2, sort_keys=True) + "\n")


_PROFILE_FIELDS = {
    "name",
    "class",
    "blocks",
    "threads_per_block",
    "shared_mem_bytes",
    "registers_per_thread",
    "block_duration_us",
}


def apply_profile(g: ComputationGraph, path: str | Path) -> ComputationGraph:
    """Overlay measured per-operator attributes onto a graph.

    The overlay file uses the graph-file node schema keyed by id; any subset of
    fields may be present and overlay values win. Entries naming unknown ids
    raise GraphValidationError.
    """
    data = _read_json(path)
    if "nodes" not in data or not isinstance(data["nodes"], list):
        raise FormatError(f"{path}: missing 'nodes' list")
    overlays: dict[int, Mapping] = {}
    for raw in data["nodes"]:
        if not isinstance(raw, Mapping) or "id" not in raw:
            raise FormatError(f"{path}: overlay entries need an 'id'")
        unknown = set(raw) - _PROFILE_FIELDS - {"id"}
        if unknown:
            raise FormatError(f"{path}: overlay node {raw['id']} has unknown fields {sorted(unknown)}")
        overlays[int(raw["id"])] = raw
    known = set(g.node_ids)
    for nid in overlays:
        if nid not in known:
            raise GraphValidationError(f"profile references unknown node id {nid}")
    merged = []
    for n in g.nodes:
        raw = overlays.get(n.id)
        if raw is None:
            merged.append(n)
            continue
        demand = ResourceDemand(
            threads_per_block=int(raw.get("threads_per_block", n.demand.threads_per_block)),
            shared_mem_per_block=int(raw.get("shared_mem_bytes", n.demand.shared_mem_per_block)),
            registers_per_thread=int(raw.get("registers_per_thread", n.demand.registers_per_thread)),
            num_blocks=int(raw.get("blocks", n.demand.num_blocks)),
        )
        if "class" in raw:
            op_class = OpClass(raw["class"])
        else:
            op_class = n.op_class
        merged.append(
            OperatorNode(
                id=n.id,
                name=str(raw.get("name", n.name)),
                op_class=op_class,
                demand=demand,
                block_duration_us=float(raw.get("block_duration_us", n.block_duration_us)),
            )
        )
    return ComputationGraph(merged, g.edges)
