"""Command line interface.

Subcommands: gen, schedule, simulate, compare, oracle. All machine-readable
output is JSON with sorted keys and no timestamps, so repeated runs over the
same inputs are byte-identical. Exit codes: 0 success, 1 internal error,
2 invalid input or usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .allocator import (
    DEFAULT_SYNC_OVERHEAD_US,
    allocate_streams,
    load_plan,
    plan_to_dict,
    save_plan,
    single_stream_plan,
)
from .errors import SchedulerError
from .generators import build
from .graph import apply_profile, graph_to_dict, load_graph, save_graph
from .orderer import POLICIES, load_schedule, make_order, save_schedule, schedule_to_dict
from .oracle import best_order, best_plan
from .simulator import (
    DEFAULT_GPU,
    load_gpu_config,
    result_to_dict,
    sequential_makespan_ns,
    simulate,
    write_trace,
)


def _dump(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _resolve_config(args) -> "GpuConfig":
    cfg = load_gpu_config(args.gpu_config)
    if getattr(args, "slowdown", None) is not None:
        cfg = dataclasses.replace(cfg, same_class_slowdown=args.slowdown)
    return cfg


def _load_graph_with_profile(args):
    g = load_graph(args.graph)
    if getattr(args, "profile", None):
        g = apply_profile(g, args.profile)
    return g


def cmd_gen(args) -> int:
    params = [int(p) for p in args.params]
    try:
        g = build(args.kind, params, max_width=args.max_width, seed=args.seed)
    except (ValueError, TypeError):
        raise SchedulerError(
            f"bad parameters for {args.kind!r}: {args.params}"
        ) from None
    if args.out:
        save_graph(g, args.out)
        print(f"wrote {args.out}: {len(g)} nodes, {len(g.edges)} edges")
    else:
        _dump(graph_to_dict(g), None)
    return 0


def cmd_schedule(args) -> int:
    g = _load_graph_with_profile(args)
    cfg = _resolve_config(args)
    if args.policy == "sequential":
        plan = single_stream_plan(g)
    else:
        plan = allocate_streams(g)
    sched = make_order(g, args.policy, cfg, seed=args.seed)
    stem = Path(args.graph)
    plan_out = args.plan_out or str(stem.with_suffix(".plan.json"))
    order_out = args.order_out or str(stem.with_suffix(".order.json"))
    save_plan(plan, g, plan_out)
    save_schedule(sched, order_out)
    n, m = plan.num_streams, len(plan.sync_events)
    print(f"{n} stream{'s' if n != 1 else ''}, {m} sync{'s' if m != 1 else ''}")
    return 0


def cmd_simulate(args) -> int:
    g = _load_graph_with_profile(args)
    cfg = _resolve_config(args)
    plan = load_plan(args.plan)
    sched = load_schedule(args.order)
    result = simulate(g, plan, sched, cfg)
    if args.trace:
        write_trace(result, args.trace)
    _dump(result_to_dict(result), args.out)
    return 0


def cmd_compare(args) -> int:
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    if len(policies) < 2:
        raise SchedulerError("compare needs at least two policies")
    for p in policies:
        if p not in POLICIES:
            raise SchedulerError(f"unknown policy {p!r} (choose from {', '.join(POLICIES)})")
    g = _load_graph_with_profile(args)
    cfg = _resolve_config(args)
    seq_ns = sequential_makespan_ns(g, cfg)
    rows = []
    for p in policies:
        plan = single_stream_plan(g) if p == "sequential" else allocate_streams(g)
        sched = make_order(g, p, cfg, seed=args.seed)
        result = simulate(g, plan, sched, cfg)
        rows.append(
            {
                "policy": p,
                "num_streams": plan.num_streams,
                "sync_count": len(plan.sync_events),
                "makespan_ns": result.makespan_ns,
                "makespan_us": result.makespan_ns / 1000,
                "total_us": result.makespan_ns / 1000
                + len(plan.sync_events) * args.t_overhead_us,
                "speedup_vs_sequential": seq_ns / result.makespan_ns if result.makespan_ns else 0.0,
                "sm_efficiency": result.sm_efficiency,
                "blocked_ns": result.blocked_ns,
                "sync_wait_ns": result.sync_wait_ns,
            }
        )
    report = {
        "metadata": {
            "graph": str(args.graph),
            "gpu_config": str(args.gpu_config),
            "seed": args.seed,
            "t_overhead_us": args.t_overhead_us,
            "slowdown": args.slowdown,
            "version": __version__,
        },
        "rows": rows,
    }
    if args.out:
        _dump(report, args.out)
        header = f"{'policy':<12}{'streams':>8}{'syncs':>7}{'makespan_us':>14}{'speedup':>9}{'sm_eff':>8}"
        print(header)
        for r in rows:
            print(
                f"{r['policy']:<12}{r['num_streams']:>8}{r['sync_count']:>7}"
                f"{r['makespan_us']:>14.3f}{r['speedup_vs_sequential']:>9.3f}"
                f"{r['sm_efficiency']:>8.3f}"
            )
    else:
        _dump(report, None)
    return 0


def cmd_oracle(args) -> int:
    g = _load_graph_with_profile(args)
    cfg = _resolve_config(args)
    if args.max_streams is not None:
        res = best_plan(
            g, cfg,
            max_streams=args.max_streams,
            limit=args.max_orders,
            sync_overhead_us=args.t_overhead_us,
        )
        payload = {
            "mode": "plan+order",
            "best_total_ns": res.best_total_ns,
            "best_total_us": res.best_total_ns / 1000,
            "best_makespan_ns": res.best_makespan_ns,
            "best_plan": plan_to_dict(res.best_plan, g),
            "best_order": list(res.best_order),
            "plans_examined": res.plans_examined,
            "orders_examined": res.orders_examined,
            "search_space_exhausted": res.search_space_exhausted,
        }
    else:
        plan = allocate_streams(g)
        res = best_order(g, plan, cfg, limit=args.max_orders)
        payload = {
            "mode": "order",
            "best_makespan_ns": res.best_makespan_ns,
            "best_makespan_us": res.best_makespan_ns / 1000,
            "best_order": list(res.best_order),
            "plan": plan_to_dict(plan, g),
            "orders_examined": res.orders_examined,
            "search_space_exhausted": res.search_space_exhausted,
        }
    _dump(payload, args.out)
    return 0


def _add_common(p: argparse.ArgumentParser, profile: bool = True) -> None:
    p.add_argument("--gpu-config", default=DEFAULT_GPU,
                   help=f"preset name or JSON file (default: {DEFAULT_GPU})")
    p.add_argument("--slowdown", type=float, default=None,
                   help="override same-class co-residency slowdown")
    if profile:
        p.add_argument("--profile", default=None,
                       help="per-operator overlay JSON applied on top of the graph")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsched",
        description="Stream allocation, launch ordering, and simulated execution "
                    "of operator graphs on a modeled multi-SM GPU.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic operator graph")
    p.add_argument("kind", choices=("chain", "fork", "diamond", "inception", "random", "cases"))
    p.add_argument("params", nargs="*", help="kind-specific sizes, e.g. gen chain 3")
    p.add_argument("--max-width", type=int, default=None, help="random: antichain width cap")
    p.add_argument("--seed", type=int, default=None, help="random: generator seed")
    p.add_argument("--out", default=None, help="output graph file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("schedule", help="allocate streams and order launches")
    p.add_argument("graph")
    p.add_argument("--policy", choices=POLICIES, default="opara")
    p.add_argument("--seed", type=int, default=None, help="seed for --policy random")
    p.add_argument("--plan-out", default=None, help="stream plan output (default: GRAPH.plan.json)")
    p.add_argument("--order-out", default=None, help="launch order output (default: GRAPH.order.json)")
    _add_common(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run one plan + order on the modeled GPU")
    p.add_argument("graph")
    p.add_argument("plan")
    p.add_argument("order")
    p.add_argument("--trace", default=None, help="write a per-operator TSV timeline here")
    p.add_argument("--out", default=None, help="result JSON file (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run several policies end to end")
    p.add_argument("graph")
    p.add_argument("--policies", default="sequential,opara",
                   help="comma-separated, at least two (default: sequential,opara)")
    p.add_argument("--seed", type=int, default=0, help="seed for the random policy")
    p.add_argument("--t-overhead-us", type=float, default=DEFAULT_SYNC_OVERHEAD_US,
                   help="per-sync overhead charged in total_us")
    p.add_argument("--out", default=None, help="report JSON file; table prints when set")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="exhaustive search over orders (and plans)")
    p.add_argument("graph")
    p.add_argument("--max-orders", type=int, default=None, help="cap on simulated orders")
    p.add_argument("--max-streams", type=int, default=None,
                   help="search stream plans too, up to this many streams")
    p.add_argument("--t-overhead-us", type=float, default=DEFAULT_SYNC_OVERHEAD_US)
    p.add_argument("--out", default=None, help="result JSON file (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchedulerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
