"""Discrete-event model of concurrent kernel execution on a multi-SM GPU.

Execution model
---------------
Each stream is a FIFO of kernels, filled in launch order. A kernel reaches the
head of its stream when every kernel before it in that stream has completed,
and becomes *eligible* once all of its cross-stream producers (the plan's sync
events) have also completed. Eligible kernels form a single device-level queue
ordered by when they became eligible: the launch sequence itself orders the
kernels eligible at time zero, and later simultaneous arrivals tie-break by
stream id.

The queue head dispatches its thread blocks one at a time onto the
lowest-indexed SM with enough free threads, shared memory, registers, and
block slots. Dispatch is non-preemptive and head-of-line: while the head has a
block that fits nowhere, nothing behind it may dispatch. A kernel leaves the
queue once its last block is placed, and completes when its last block
finishes.

Blocks run for the operator's block duration. A block placed on an SM that
also holds a running block of the *same class* from a *different operator* is
slowed by the configured multiplier; blocks placed in the same dispatch
instant see each other, and a running block is never slowed retroactively.

All time is integer nanoseconds internally; durations given in microseconds
are scaled by 1000 on the way in.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .allocator import StreamPlan, single_stream_plan, validate_plan
from .errors import CoverageError, FormatError, InfeasibleBlockError, PlanViolationError
from .graph import ComputationGraph, OpClass, _read_json


@dataclass(frozen=True)
class GpuConfig:
    """Capacities of the modeled device. Values are per SM unless noted."""

    num_sms: int
    threads_per_sm: int
    shared_mem_per_sm: int
    registers_per_sm: int
    max_blocks_per_sm: int
    same_class_slowdown: float = 1.4

    def __post_init__(self) -> None:
        for field in ("num_sms", "threads_per_sm", "shared_mem_per_sm",
                      "registers_per_sm", "max_blocks_per_sm"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")
        if self.same_class_slowdown < 1.0:
            raise ValueError("same_class_slowdown must be >= 1.0")


# Rough approximations of two real devices, for convenience only; neither is a
# calibrated model of the actual hardware.
GPU_PRESETS: dict[str, GpuConfig] = {
    "a100-like": GpuConfig(
        num_sms=108,
        threads_per_sm=2048,
        shared_mem_per_sm=167936,
        registers_per_sm=65536,
        max_blocks_per_sm=32,
    ),
    "2080s-like": GpuConfig(
        num_sms=48,
        threads_per_sm=1024,
        shared_mem_per_sm=65536,
        registers_per_sm=65536,
        max_blocks_per_sm=16,
    ),
}

DEFAULT_GPU = "2080s-like"


def load_gpu_config(spec: str | Path) -> GpuConfig:
    """Resolve a preset name or a JSON config file path."""
    if isinstance(spec, str) and spec in GPU_PRESETS:
        return GPU_PRESETS[spec]
    path = Path(spec)
    if not path.exists():
        raise FormatError(
            f"gpu config {spec!r} is neither a preset ({', '.join(sorted(GPU_PRESETS))}) "
            "nor an existing file"
        )
    data = _read_json(path)
    required = ("num_sms", "threads_per_sm", "shared_mem_per_sm",
                "registers_per_sm", "max_blocks_per_sm")
    for key in required:
        if key not in data:
            raise FormatError(f"{path}: missing {key!r}")
    try:
        return GpuConfig(
            num_sms=int(data["num_sms"]),
            threads_per_sm=int(data["threads_per_sm"]),
            shared_mem_per_sm=int(data["shared_mem_per_sm"]),
            registers_per_sm=int(data["registers_per_sm"]),
            max_blocks_per_sm=int(data["max_blocks_per_sm"]),
            same_class_slowdown=float(data.get("same_class_slowdown", 1.4)),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def gpu_config_to_dict(cfg: GpuConfig) -> dict:
    return {
        "num_sms": cfg.num_sms,
        "threads_per_sm": cfg.threads_per_sm,
        "shared_mem_per_sm": cfg.shared_mem_per_sm,
        "registers_per_sm": cfg.registers_per_sm,
        "max_blocks_per_sm": cfg.max_blocks_per_sm,
        "same_class_slowdown": cfg.same_class_slowdown,
    }


@dataclass(frozen=True)
class BlockRecord:
    """One placed thread block."""

    op_id: int
    index: int
    sm: int
    start_ns: int
    end_ns: int


@dataclass(frozen=True)
class OpRecord:
    """Per-operator execution summary."""

    op_id: int
    name: str
    op_class: OpClass
    stream: int
    start_ns: int
    end_ns: int
    sms: tuple[int, ...]


@dataclass(frozen=True)
class SimResult:
    """Outcome of one simulation run.

    blocked_ns sums, over all kernels, the wait between becoming eligible and
    placing the first block. sync_wait_ns sums the wait between reaching the
    stream head and the last cross-stream producer finishing.
    """

    makespan_ns: int
    ops: tuple[OpRecord, ...]
    blocks: tuple[BlockRecord, ...]
    sm_busy_ns: tuple[int, ...]
    sm_efficiency: float
    blocked_ns: int
    sync_wait_ns: int

    @property
    def makespan_us(self) -> float:
        return self.makespan_ns / 1000

    def op_start_ns(self, op_id: int) -> int:
        return self._op(op_id).start_ns

    def op_end_ns(self, op_id: int) -> int:
        return self._op(op_id).end_ns

    def _op(self, op_id: int) -> OpRecord:
        for rec in self.ops:
            if rec.op_id == op_id:
                return rec
        raise KeyError(f"unknown op id {op_id}")


def _order_of(schedule) -> list[int]:
    order = getattr(schedule, "order", schedule)
    return list(order)


def _check_inputs(g: ComputationGraph, plan: StreamPlan, order: list[int], cfg: GpuConfig) -> None:
    ids = set(g.node_ids)
    if set(order) != ids or len(order) != len(ids):
        missing = sorted(ids - set(order))
        extra = sorted(set(order) - ids)
        raise CoverageError(
            f"launch order must cover the graph exactly (missing {missing}, extra {extra})"
        )
    if not g.is_linear_extension(order):
        raise CoverageError("launch order is not a linear extension of the graph")
    problems = validate_plan(g, plan)
    if problems:
        raise PlanViolationError("; ".join(problems))
    for n in g.nodes:
        d = n.demand
        if (
            d.threads_per_block > cfg.threads_per_sm
            or d.shared_mem_per_block > cfg.shared_mem_per_sm
            or d.registers_per_block > cfg.registers_per_sm
        ):
            raise InfeasibleBlockError(
                f"operator {n.id} ({n.name}): one block exceeds a single SM's capacity"
            )


def simulate(g: ComputationGraph, plan: StreamPlan, schedule, cfg: GpuConfig) -> SimResult:
    """Run the execution model for one (plan, launch order) pair.

    `schedule` may be a LaunchSchedule or any sequence of node ids; it must be
    a linear extension covering the graph, and the plan must cover the graph
    with sync events matching its cross-stream edges exactly.
    """
    order = _order_of(schedule)
    _check_inputs(g, plan, order, cfg)
    if not order:
        return SimResult(
            makespan_ns=0, ops=(), blocks=(), sm_busy_ns=(0,) * cfg.num_sms,
            sm_efficiency=0.0, blocked_ns=0, sync_wait_ns=0,
        )

    dur_ns = {n.id: n.block_duration_ns for n in g.nodes}
    op_cls = {n.id: n.op_class for n in g.nodes}
    demand = {n.id: n.demand for n in g.nodes}

    stream_seq: dict[int, list[int]] = {s: [] for s in range(plan.num_streams)}
    for v in order:
        stream_seq[plan.assignment[v]].append(v)
    head_idx = {s: 0 for s in stream_seq}

    pending_syncs = {v: 0 for v in order}
    consumers: dict[int, list[int]] = {v: [] for v in order}
    for (u, v) in plan.sync_events:
        pending_syncs[v] += 1
        consumers[u].append(v)

    unplaced = {v: demand[v].num_blocks for v in order}
    running = dict.fromkeys(order, 0)
    head_time: dict[int, int] = {}
    eligible_time: dict[int, int] = {}
    first_place: dict[int, int] = {}
    op_end: dict[int, int] = {}
    op_sms: dict[int, set[int]] = {v: set() for v in order}
    completed: set[int] = set()

    free_thr = [cfg.threads_per_sm] * cfg.num_sms
    free_smem = [cfg.shared_mem_per_sm] * cfg.num_sms
    free_regs = [cfg.registers_per_sm] * cfg.num_sms
    free_slots = [cfg.max_blocks_per_sm] * cfg.num_sms
    # live blocks per SM: token -> (op id, end_ns or None while this dispatch
    # round is still deciding durations)
    live: list[dict[int, tuple[int, int | None]]] = [dict() for _ in range(cfg.num_sms)]
    busy_ns = [0] * cfg.num_sms
    busy_last = [0] * cfg.num_sms
    busy_count = [0] * cfg.num_sms

    ee: list[tuple[int, int]] = []  # (eligibility sequence, op id)
    seq = 0
    token = 0
    events: list[tuple[int, int, int, int, int]] = []  # (end, token, op, sm, ...)
    block_log: list[tuple[int, int, int, int, int]] = []  # op, index, sm, start, end filled later
    placed_index = dict.fromkeys(order, 0)

    def touch(sm: int, t: int) -> None:
        if busy_count[sm] > 0:
            busy_ns[sm] += t - busy_last[sm]
        busy_last[sm] = t

    def find_sm(d) -> int | None:
        regs = d.registers_per_block
        for i in range(cfg.num_sms):
            if (
                free_thr[i] >= d.threads_per_block
                and free_smem[i] >= d.shared_mem_per_block
                and free_regs[i] >= regs
                and free_slots[i] >= 1
            ):
                return i
        return None

    def make_eligible(v: int, t: int) -> None:
        nonlocal seq
        eligible_time[v] = t
        heapq.heappush(ee, (seq, v))
        seq += 1

    def dispatch(t: int) -> None:
        nonlocal token
        placed_round: list[tuple[int, int, int]] = []  # (token, op, sm)
        while ee:
            _, v = ee[0]
            d = demand[v]
            stuck = False
            while unplaced[v] > 0:
                sm = find_sm(d)
                if sm is None:
                    stuck = True
                    break
                free_thr[sm] -= d.threads_per_block
                free_smem[sm] -= d.shared_mem_per_block
                free_regs[sm] -= d.registers_per_block
                free_slots[sm] -= 1
                touch(sm, t)
                busy_count[sm] += 1
                live[sm][token] = (v, None)
                placed_round.append((token, v, sm))
                token += 1
                unplaced[v] -= 1
                running[v] += 1
                op_sms[v].add(sm)
                if v not in first_place:
                    first_place[v] = t
            if stuck:
                break
            heapq.heappop(ee)
        # durations are decided after the whole round so that blocks placed at
        # the same instant see each other as co-residents
        for tok, v, sm in placed_round:
            cls = op_cls[v]
            slowed = any(
                other_op != v and op_cls[other_op] is cls
                for other_tok, (other_op, _end) in live[sm].items()
                if other_tok != tok
            )
            base = dur_ns[v]
            length = round(base * cfg.same_class_slowdown) if slowed else base
            end = t + length
            live[sm][tok] = (v, end)
            idx = placed_index[v]
            placed_index[v] = idx + 1
            block_log.append((v, idx, sm, t, end))
            heapq.heappush(events, (end, tok, v, sm, 0))

    # all kernels enter their stream FIFOs up front; the launch sequence
    # orders the time-zero eligibility stamps
    at_head = set()
    for s, members in stream_seq.items():
        if members:
            at_head.add(members[0])
            head_time[members[0]] = 0
    for v in order:
        if v in at_head and pending_syncs[v] == 0:
            make_eligible(v, 0)
    dispatch(0)

    while events:
        t = events[0][0]
        finished_ops: list[int] = []
        while events and events[0][0] == t:
            _, tok, v, sm, _ = heapq.heappop(events)
            d = demand[v]
            touch(sm, t)
            busy_count[sm] -= 1
            free_thr[sm] += d.threads_per_block
            free_smem[sm] += d.shared_mem_per_block
            free_regs[sm] += d.registers_per_block
            free_slots[sm] += 1
            del live[sm][tok]
            running[v] -= 1
            if running[v] == 0 and unplaced[v] == 0 and v not in completed:
                completed.add(v)
                op_end[v] = t
                finished_ops.append(v)
        newly: list[int] = []
        for v in finished_ops:
            s = plan.assignment[v]
            head_idx[s] += 1
            if head_idx[s] < len(stream_seq[s]):
                w = stream_seq[s][head_idx[s]]
                head_time[w] = t
                if pending_syncs[w] == 0:
                    newly.append(w)
            for c in consumers[v]:
                pending_syncs[c] -= 1
                if pending_syncs[c] == 0 and c in head_time and c not in eligible_time:
                    newly.append(c)
        for v in sorted(newly, key=lambda x: plan.assignment[x]):
            make_eligible(v, t)
        dispatch(t)

    if len(completed) != len(order):
        raise RuntimeError("simulation ended with unfinished operators")

    makespan = max(op_end.values())
    ops = tuple(
        OpRecord(
            op_id=v,
            name=g.node(v).name,
            op_class=op_cls[v],
            stream=plan.assignment[v],
            start_ns=first_place[v],
            end_ns=op_end[v],
            sms=tuple(sorted(op_sms[v])),
        )
        for v in sorted(order)
    )
    blocks = tuple(BlockRecord(*row) for row in sorted(block_log))
    blocked = sum(first_place[v] - eligible_time[v] for v in order)
    sync_wait = sum(eligible_time[v] - head_time[v] for v in order)
    busy = tuple(busy_ns)
    eff = sum(busy) / (cfg.num_sms * makespan) if makespan else 0.0
    return SimResult(
        makespan_ns=makespan,
        ops=ops,
        blocks=blocks,
        sm_busy_ns=busy,
        sm_efficiency=eff,
        blocked_ns=blocked,
        sync_wait_ns=sync_wait,
    )


def sequential_makespan_ns(g: ComputationGraph, cfg: GpuConfig) -> int:
    """Makespan of the single-stream topological schedule, in nanoseconds.

    One operator is in flight at a time, so this equals the sum over operators
    of wave count times block duration, where a wave holds as many blocks as
    fit concurrently across the whole device.
    """
    plan = single_stream_plan(g)
    return simulate(g, plan, g.topo_sort(), cfg).makespan_ns


def sequential_makespan(g: ComputationGraph, cfg: GpuConfig) -> float:
    """Single-stream makespan in microseconds."""
    return sequential_makespan_ns(g, cfg) / 1000


def trace(result: SimResult) -> list[OpRecord]:
    """Per-operator timeline rows sorted by start time (ties by op id)."""
    return sorted(result.ops, key=lambda r: (r.start_ns, r.op_id))


TRACE_HEADER = "op_id\tname\tclass\tstream\tstart_ns\tend_ns"


def trace_tsv(result: SimResult) -> str:
    lines = [TRACE_HEADER]
    for r in trace(result):
        lines.append(
            f"{r.op_id}\t{r.name}\t{r.op_class.value}\t{r.stream}\t{r.start_ns}\t{r.end_ns}"
        )
    return "\n".join(lines) + "\n"


def write_trace(result: SimResult, path: str | Path) -> None:
    Path(path).write_text(trace_tsv(result))


def result_to_dict(result: SimResult) -> dict:
    """SimResult as a JSON-serializable dict."""
    return {
        "makespan_ns": result.makespan_ns,
        "makespan_us": result.makespan_ns / 1000,
        "sm_busy_ns": list(result.sm_busy_ns),
        "sm_efficiency": result.sm_efficiency,
        "blocked_ns": result.blocked_ns,
        "sync_wait_ns": result.sync_wait_ns,
        "ops": {
            str(r.op_id): {
                "name": r.name,
                "class": r.op_class.value,
                "stream": r.stream,
                "start_ns": r.start_ns,
                "end_ns": r.end_ns,
                "sms": list(r.sms),
            }
            for r in result.ops
        },
    }
