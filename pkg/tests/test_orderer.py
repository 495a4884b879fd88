"""Launch ordering: the alternating two-list policy and the baselines."""

import pytest

from opsched import (
    GpuConfig,
    LaunchSchedule,
    OpClass,
    ResourceScore,
    dominant_share,
    load_schedule,
    make_order,
    order_baseline,
    order_opara,
    resource_score,
    save_schedule,
)
from opsched.generators import chain, diamond, fork, random_dag

from helpers import ample_config, antichain, mk_node, replay_alternating_order

from opsched import ComputationGraph

CFG = GpuConfig(num_sms=1, threads_per_sm=1000, shared_mem_per_sm=65536,
                registers_per_sm=65536, max_blocks_per_sm=16)

CORPUS = [random_dag(3 + i % 12, max_width=4, seed=300 + i) for i in range(30)]


def test_dominant_share_takes_the_scarcest_resource():
    d = mk_node(1, threads=500, smem=32768, regs=16, blocks=2).demand
    # threads 500/1000 = .5, smem 32768/65536 = .5, regs 8000/65536 = .122
    assert dominant_share(d, CFG) == pytest.approx(1.0)  # .5 * 2 blocks


def test_resource_score_orders_by_share_then_id():
    g = antichain(2, threads=100)
    a = resource_score(g, 1, CFG)
    b = resource_score(g, 2, CFG)
    assert a < b
    assert a == ResourceScore(0.1, 1)


# --------------------------------------------------------------- the policy


def test_chain_orders_trivially():
    assert order_opara(chain(3), CFG).order == (1, 2, 3)


def test_four_independent_ops_alternate_cheapest_first():
    """Memory list leads; each launch flips preference to the other class."""
    g = ComputationGraph(
        [
            mk_node(1, "relu", threads=100),   # memory, share .10
            mk_node(2, "conv", threads=50),    # compute, share .05
            mk_node(3, "relu", threads=30),    # memory, share .03
            mk_node(4, "conv", threads=200),   # compute, share .20
        ],
        [],
    )
    assert order_opara(g, CFG).order == (3, 2, 1, 4)


def test_fork_children_start_with_memory_class():
    """After the compute root launches, preference lands on the memory child
    even though the compute child is cheaper."""
    g = ComputationGraph(
        [
            mk_node(1, "conv", threads=100),
            mk_node(2, "relu", threads=20),   # share .02
            mk_node(3, "conv", threads=10),   # share .01
        ],
        [(1, 2), (1, 3)],
    )
    assert order_opara(g, CFG).order == (1, 2, 3)


def test_order_is_linear_extension_on_corpus():
    for g in CORPUS:
        sched = order_opara(g, CFG)
        assert g.is_linear_extension(sched.order)


def test_alternation_and_min_resource_replay():
    """Step-by-step re-derivation must reproduce the emitted order exactly."""
    for g in CORPUS:
        replay_alternating_order(g, CFG, order_opara(g, CFG).order)


def test_uniform_single_class_reduces_to_topo_sort():
    g = ComputationGraph(
        [mk_node(i, "conv", threads=64) for i in range(1, 8)],
        [(1, 3), (1, 4), (2, 5), (3, 6), (4, 6), (5, 7)],
    )
    assert list(order_opara(g, CFG).order) == g.topo_sort()


# ---------------------------------------------------------------- baselines


def test_dfs_diamond_backtracks_before_join():
    """The join must wait for both branches: 1,2 then back out to 3, then 4."""
    assert order_baseline(diamond(), "dfs").order == (1, 2, 3, 4)


def test_dfs_emits_each_node_once_on_corpus():
    for g in CORPUS:
        order = order_baseline(g, "dfs").order
        assert sorted(order) == sorted(g.node_ids)
        assert g.is_linear_extension(order)


def test_dfs_depth_first_shape():
    # two chains from two roots: dfs exhausts the first root's chain first
    g = ComputationGraph(
        [mk_node(i) for i in range(1, 7)],
        [(1, 3), (3, 5), (2, 4), (4, 6)],
    )
    assert order_baseline(g, "dfs").order == (1, 3, 5, 2, 4, 6)


def test_wavefront_emits_levels_in_id_order():
    assert order_baseline(diamond(), "wavefront").order == (1, 2, 3, 4)
    g = fork(3)
    assert order_baseline(g, "wavefront").order == (1, 2, 3, 4)


def test_wavefront_level_property_on_corpus():
    for g in CORPUS:
        order = order_baseline(g, "wavefront").order
        depth = {}
        for v in g.topo_sort():
            preds = g.predecessors(v)
            depth[v] = 0 if not preds else max(depth[p] for p in preds) + 1
        keys = [(depth[v], v) for v in order]
        assert keys == sorted(keys)


def test_random_is_seeded_and_deterministic():
    a = order_baseline(fork(3), "random", seed=1)
    b = order_baseline(fork(3), "random", seed=1)
    assert a.order == b.order
    assert a.seed == 1
    for g in CORPUS:
        assert g.is_linear_extension(order_baseline(g, "random", seed=5).order)


def test_sequential_is_topo_sort():
    for g in CORPUS[:5]:
        assert list(order_baseline(g, "sequential").order) == g.topo_sort()


def test_unknown_policy_rejected():
    with pytest.raises(ValueError, match="unknown baseline policy"):
        order_baseline(chain(2), "hilbert")


def test_make_order_dispatch():
    g = diamond()
    assert make_order(g, "opara", CFG).policy == "opara"
    assert make_order(g, "dfs", CFG).policy == "dfs"
    assert make_order(g, "random", CFG, seed=3).seed == 3


# ------------------------------------------------------------- serialization


def test_schedule_round_trip(tmp_path):
    sched = order_opara(random_dag(10, max_width=3, seed=4), ample_config())
    p = tmp_path / "order.json"
    save_schedule(sched, p)
    assert load_schedule(p) == sched


def test_schedule_load_requires_order(tmp_path):
    p = tmp_path / "order.json"
    p.write_text('{"policy": "dfs"}')
    from opsched import FormatError
    with pytest.raises(FormatError, match="missing 'order'"):
        load_schedule(p)
