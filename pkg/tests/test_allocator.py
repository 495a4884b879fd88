"""Stream allocation: frozen placements, plan invariants, cost evaluation."""

import pytest

from opsched import (
    PlanViolationError,
    StreamPlan,
    allocate_streams,
    evaluate_plan,
    load_plan,
    plan_to_dict,
    save_plan,
    single_stream_plan,
    validate_plan,
)
from opsched.generators import chain, diamond, fork, placement_cases, random_dag

from helpers import ample_config, antichain, mk_node

CORPUS = [random_dag(3 + i % 12, max_width=4, seed=200 + i) for i in range(30)]


# -------------------------------------------------------------- frozen traces


def test_single_node_opens_one_stream():
    plan = allocate_streams(antichain(1))
    assert plan.num_streams == 1
    assert plan.assignment == {1: 0}
    assert plan.sync_events == ()


def test_fork3_placement():
    """First successor inherits the root's stream; the others open new ones."""
    plan = allocate_streams(fork(3))
    assert plan.assignment == {1: 0, 2: 0, 3: 1, 4: 2}
    assert plan.num_streams == 3
    assert plan.sync_events == ((1, 3), (1, 4))


def test_diamond_placement():
    plan = allocate_streams(diamond())
    assert plan.assignment == {1: 0, 2: 0, 3: 1, 4: 0}
    assert plan.num_streams == 2
    assert plan.sync_events == ((1, 3), (3, 4))


def test_thirteen_node_placement():
    """Composite covering all four placement situations at once."""
    plan = allocate_streams(placement_cases())
    assert plan.assignment == {
        1: 0, 2: 0, 3: 1, 4: 2, 5: 0, 6: 1, 7: 2,
        8: 0, 9: 2, 10: 3, 11: 0, 12: 4, 13: 2,
    }
    assert plan.num_streams == 5


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_chain_always_single_stream(n):
    plan = allocate_streams(chain(n))
    assert plan.num_streams == 1
    assert plan.sync_events == ()


def test_antichain_gets_one_stream_each():
    plan = allocate_streams(antichain(5))
    assert plan.num_streams == 5
    assert sorted(plan.assignment.values()) == [0, 1, 2, 3, 4]


# ----------------------------------------------------------------- properties


def test_plans_are_always_valid_on_corpus():
    for g in CORPUS:
        assert validate_plan(g, allocate_streams(g)) == []


def test_sync_events_are_exactly_the_cross_stream_edges():
    for g in CORPUS:
        plan = allocate_streams(g)
        expect = tuple(sorted(
            (u, v) for (u, v) in g.edges if plan.assignment[u] != plan.assignment[v]
        ))
        assert plan.sync_events == expect


def test_each_stream_is_a_path_through_the_dag():
    """Donate-once inheritance makes every stream a dependency chain: each
    member after the first is a direct successor of the one before it."""
    for g in CORPUS:
        plan = allocate_streams(g)
        pos = {v: i for i, v in enumerate(g.topo_sort())}
        for members in plan.streams().values():
            members = sorted(members, key=lambda v: pos[v])
            for a, b in zip(members, members[1:]):
                assert (a, b) in g.edges, f"stream break between {a} and {b}"


def test_stream_count_matches_inheritance_count():
    for g in CORPUS:
        plan = allocate_streams(g)
        inherited = 0
        donated = set()
        for v in g.topo_sort():
            for p in g.predecessors(v):
                if p not in donated:
                    donated.add(p)
                    inherited += 1
                    break
        assert plan.num_streams == len(g) - inherited


def test_single_stream_plan_has_no_syncs():
    g = CORPUS[0]
    plan = single_stream_plan(g)
    assert plan.num_streams == 1
    assert plan.sync_events == ()
    assert validate_plan(g, plan) == []


# ------------------------------------------------------------------ validate


def test_validate_reports_unassigned_node():
    g = diamond()
    plan = allocate_streams(g)
    broken = StreamPlan(
        assignment={k: v for k, v in plan.assignment.items() if k != 4},
        num_streams=plan.num_streams,
        sync_events=plan.sync_events,
    )
    assert any("node 4 unassigned" in p for p in validate_plan(g, broken))


def test_validate_reports_missing_sync():
    g = diamond()
    plan = allocate_streams(g)
    broken = StreamPlan(plan.assignment, plan.num_streams, ((3, 4),))
    probs = validate_plan(g, broken)
    assert any("missing sync for cross-stream edge (1, 3)" in p for p in probs)


def test_validate_reports_spurious_sync():
    g = diamond()
    plan = allocate_streams(g)
    probs = validate_plan(g, StreamPlan(plan.assignment, 2, plan.sync_events + ((2, 3),)))
    assert any("not a graph edge" in p for p in probs)


def test_validate_reports_same_stream_sync():
    g = chain(2)
    probs = validate_plan(g, StreamPlan({1: 0, 2: 0}, 1, ((1, 2),)))
    assert any("joins same-stream nodes" in p for p in probs)


def test_validate_reports_sparse_stream_ids():
    g = antichain(2)
    probs = validate_plan(g, StreamPlan({1: 0, 2: 2}, 3, ()))
    assert any("dense" in p for p in probs)


# -------------------------------------------------------------- serialization


def test_plan_round_trip(tmp_path):
    g = random_dag(12, max_width=4, seed=77)
    plan = allocate_streams(g)
    p = tmp_path / "plan.json"
    save_plan(plan, g, p)
    back = load_plan(p)
    assert back == plan


def test_plan_dict_lists_members_in_topo_order():
    g = diamond()
    d = plan_to_dict(allocate_streams(g), g)
    assert d["streams"] == {"0": [1, 2, 4], "1": [3]}
    assert d["sync"] == [[1, 3], [3, 4]]
    assert d["num_streams"] == 2


# ----------------------------------------------------------------- evaluation


def test_evaluate_chain_has_no_parallelism():
    g = chain(3)
    cfg = ample_config()
    plan = allocate_streams(g)
    cost = evaluate_plan(g, plan, g.topo_sort(), cfg)
    assert cost.sync_count == 0
    assert cost.parallel_us == cost.sequential_us == 30.0
    assert cost.parallel_ratio == 1.0
    assert cost.total_us == 30.0
    assert not cost.exceeds_sequential


def test_evaluate_fork2_overlap_ratio():
    """Equal-duration children overlap fully: 2d parallel vs 3d sequential."""
    g = fork(2)
    cost = evaluate_plan(g, allocate_streams(g), [1, 2, 3], ample_config(),
                         sync_overhead_us=0.0)
    assert cost.parallel_us == 20.0
    assert cost.sequential_us == 30.0
    assert cost.parallel_ratio == pytest.approx(2 / 3)
    assert cost.total_us == 20.0


def test_evaluate_diamond_charges_sync_overhead():
    g = diamond()
    cost = evaluate_plan(g, allocate_streams(g), g.topo_sort(), ample_config(),
                         sync_overhead_us=5.0)
    assert cost.sync_count == 2
    assert cost.parallel_us == 30.0
    assert cost.total_us == 30.0 + 2 * 5.0


def test_evaluate_rejects_invalid_plan():
    g = diamond()
    with pytest.raises(PlanViolationError):
        evaluate_plan(g, StreamPlan({1: 0, 2: 0, 3: 0}, 1, ()), g.topo_sort(),
                      ample_config())
