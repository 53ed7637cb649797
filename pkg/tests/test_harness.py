"""Scenario parsing, execution, verdict checkers, and the lockstep runner."""

import json

import pytest

from meg.core import EventPayload
from meg.harness import (
    AdversarySpec,
    Equivocate,
    Metrics,
    OrphanFlood,
    ReplicaNode,
    ScenarioError,
    ScenarioSpec,
    Withhold,
    check_eventual_delivery,
    check_strong_convergence,
    equivocate,
    extremities_consistent,
    load_scenario,
    maybe_emit_dummy,
    parse_scenario,
    run_lockstep_rounds,
    run_scenario,
    trace_tsv,
    width_series_csv,
)
from meg.monitor import MembershipDirectory, SigningKey
from meg.network import DeliveryGuarantee, Partition
from meg.width import fixed_point

BASE = {
    "n": 3,
    "f": 0,
    "guarantee": "Reliable",
    "delay": [1, 5],
    "drop": 0.0,
    "duplicate": 0.0,
    "partitions": [],
    "adversary": None,
    "rounds": 4,
    "updates_per_round": 2,
    "d": 2,
    "dummy_threshold": 0,
    "dummy_d": 10,
    "gossip_period": 0,
    "horizon": 200,
    "grace": 30,
    "seed": 5,
}


def spec_with(**overrides) -> ScenarioSpec:
    return parse_scenario({**BASE, **overrides})


# -- parsing -----------------------------------------------------------------------


def test_parse_round_trip():
    spec = spec_with()
    assert spec.n == 3
    assert spec.guarantee is DeliveryGuarantee.RELIABLE
    assert spec.delay == (1, 5)


def test_parse_rejects_missing_and_extra_keys():
    raw = dict(BASE)
    del raw["grace"]
    with pytest.raises(ScenarioError, match="missing"):
        parse_scenario(raw)
    with pytest.raises(ScenarioError, match="unexpected"):
        parse_scenario({**BASE, "bonus": 1})


def test_parse_rejects_bad_values():
    with pytest.raises(ScenarioError):
        spec_with(guarantee="Mostly")
    with pytest.raises(ScenarioError):
        spec_with(f=3)
    with pytest.raises(ScenarioError):
        spec_with(f=1)  # f > 0 without adversary
    with pytest.raises(ScenarioError):
        spec_with(delay=[1])
    with pytest.raises(ScenarioError):
        spec_with(partitions=[[0, 500, [0]]])  # does not heal within horizon
    with pytest.raises(ScenarioError):
        spec_with(partitions=[[0, 100, [0, 1, 2]]])  # not a proper subset
    with pytest.raises(ScenarioError):
        spec_with(drop=0.5)  # Reliable forbids drops
    with pytest.raises(ScenarioError):
        spec_with(adversary={"byzantine": [0], "behaviors": []})  # f says 0
    with pytest.raises(ScenarioError):
        spec_with(
            f=1,
            adversary={"byzantine": [0], "behaviors": [{"kind": "mystery"}]},
        )


def test_parse_adversary_behaviors():
    spec = spec_with(
        n=4,
        f=1,
        adversary={
            "byzantine": [3],
            "behaviors": [
                {"kind": "equivocate", "subset_a": [0, 1], "subset_b": [2], "at_round": 0},
                {"kind": "withhold", "skip": [2]},
                {"kind": "orphan_flood", "rate": 2},
            ],
        },
    )
    assert spec.adversary == AdversarySpec(
        byzantine=frozenset({3}),
        behaviors=(
            Equivocate(subset_a=(0, 1), subset_b=(2,), at_round=0),
            Withhold(skip=(2,)),
            OrphanFlood(rate=2),
        ),
    )


def test_load_scenario_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(BASE))
    assert load_scenario(good) == spec_with()


# -- happy-path execution -----------------------------------------------------------


def test_happy_path_all_verdicts_hold():
    metrics, verdict = run_scenario(spec_with())
    assert verdict.all_ok()
    assert metrics.applied_counts == [24, 24, 24]
    assert metrics.quiescence_tick is not None
    assert metrics.convergence_tick is not None
    assert len(set(metrics.final_digests)) == 1
    assert metrics.rejected_ops == [0, 0, 0]


def test_run_is_deterministic():
    m1, v1 = run_scenario(spec_with())
    m2, v2 = run_scenario(spec_with())
    assert v1 == v2
    assert [ev.line() for ev in m1.trace] == [ev.line() for ev in m2.trace]
    assert m1.final_digests == m2.final_digests
    assert m1.width == m2.width
    m3, _ = run_scenario(spec_with(seed=6))
    assert [ev.line() for ev in m3.trace] != [ev.line() for ev in m1.trace]


def test_csv_and_trace_shapes():
    metrics, _ = run_scenario(spec_with(horizon=50))
    csv = width_series_csv(metrics)
    lines = csv.strip().split("\n")
    assert lines[0] == "tick,replica,width"
    assert len(lines) == 1 + 50 * 3
    assert lines[1] == "0,0,1" or lines[1].startswith("0,0,")
    tsv = trace_tsv(metrics)
    first = tsv.split("\n")[0].split("\t")
    assert len(first) == 5
    assert first[1] in {"SEND", "DELIVER", "DROP", "BACKFILL_REQ", "BACKFILL_RESP", "GOSSIP"}
    assert len(first[4]) == 16


def test_termination_fails_when_horizon_too_short():
    metrics, verdict = run_scenario(spec_with(delay=[1, 100], horizon=30, rounds=3))
    assert not verdict.termination
    assert metrics.quiescence_tick is None


def test_buffers_drain_under_reordering():
    metrics, verdict = run_scenario(spec_with(delay=[1, 100], horizon=600, rounds=5))
    assert verdict.all_ok()
    assert all(occ[-1] == 0 for occ in metrics.buffer_occupancy)
    assert max(max(occ) for occ in metrics.buffer_occupancy) > 0  # reordering actually buffered
    assert sum(metrics.stale_parent_ops) > 0


# -- checker negative controls ---------------------------------------------------------


def test_strong_convergence_checker_rejects_divergence():
    same_set = {b"\x01" * 32}
    assert check_strong_convergence([(same_set, b"d1"), (same_set, b"d1")])
    assert not check_strong_convergence([(same_set, b"d1"), (same_set, b"d2")])
    # different sets with different digests is fine
    assert check_strong_convergence([({b"\x01" * 32}, b"d1"), ({b"\x02" * 32}, b"d2")])


def fabricated_metrics(applied_sets, broadcast, buffered):
    n = len(applied_sets)
    return Metrics(
        width=[[1]] * n,
        buffer_occupancy=[[0]] * n,
        applied_counts=[len(s) for s in applied_sets],
        stale_parent_ops=[0] * n,
        rejected_ops=[0] * n,
        convergence_tick=0,
        quiescence_tick=0,
        trace=[],
        final_digests=[b"d"] * n,
        applied_sets=applied_sets,
        correct_indices=tuple(range(n)),
        correct_broadcast_ids=broadcast,
        buffered_correct_origin=buffered,
    )


def test_eventual_delivery_checker_clauses():
    a, b = b"\x0a" * 32, b"\x0b" * 32
    # all correct replicas hold everything: pass
    m = fabricated_metrics([{a, b}, {a, b}], {a}, [0, 0])
    assert check_eventual_delivery(m)
    # a broadcast op missing somewhere: fail
    m = fabricated_metrics([{a}, set()], {a}, [0, 0])
    assert not check_eventual_delivery(m)
    # op applied by one correct replica but not another: fail
    m = fabricated_metrics([{b}, set()], set(), [0, 0])
    assert not check_eventual_delivery(m)
    # leftover buffered op from a correct sender: fail
    m = fabricated_metrics([{a}, {a}], {a}, [1, 0])
    assert not check_eventual_delivery(m)


# -- node-level helpers ------------------------------------------------------------------


def make_node(idx=0, d=2, n=1):
    keys = [SigningKey.from_seed(f"harness-test:{i}") for i in range(max(n, idx + 1))]
    directory = MembershipDirectory(
        {k.replica_id: k.verification_key for k in keys}, f=0
    )
    return ReplicaNode(idx, keys[idx], directory, "harness-room", d, seed=1)


def test_maybe_emit_dummy_threshold():
    node = make_node(d=2)
    for i in range(12):
        env = node.make_op(EventPayload("msg", bytes([i])))
        node.absorb_own(env)
        # re-parent everything on the root by marking ops as siblings:
    # width after a chain is 1; dummy must not fire
    assert maybe_emit_dummy(node, threshold=10, dummy_d=10) is None
    # widen: many children of the current extremity via distinct nodes is
    # overkill here; instead lower the threshold beneath the current width.
    assert maybe_emit_dummy(node, threshold=0, dummy_d=10) is not None


def test_dummy_content_and_cap():
    node = make_node(d=2)
    env = maybe_emit_dummy(node, threshold=0, dummy_d=10)
    assert env.op.vertex.payload.kind == "dummy"
    assert env.op.vertex.payload.body == b""


def test_equivocate_builds_two_concurrent_ops():
    node = make_node(d=2)
    env_a, env_b = equivocate(node, EventPayload("msg", b"a"), EventPayload("msg", b"b"))
    va, vb = env_a.op.vertex, env_b.op.vertex
    assert va.id != vb.id
    assert va.parents == vb.parents  # same snapshot
    assert {va.id, vb.id} <= set(node.state.applied_ids())
    assert node.state.get_extremities() == {va.id, vb.id}
    assert extremities_consistent(node.state)


def test_serve_backfill_returns_ancestor_closure():
    node = make_node(d=2)
    envs = []
    for i in range(5):
        env = node.make_op(EventPayload("msg", bytes([i])))
        node.absorb_own(env)
        envs.append(env)
    tip = envs[-1].op.vertex.id
    served = node.serve_backfill(frozenset({tip}))
    served_ids = {e.op.vertex.id for e in served}
    assert served_ids == {e.op.vertex.id for e in envs}  # whole chain, root excluded
    assert len(node.serve_backfill(frozenset({tip}), limit=2)) == 2
    assert node.serve_backfill(frozenset({b"\x77" * 32})) == ()


# -- adversarial scenarios ------------------------------------------------------------------


def adversary_spec(behaviors, **overrides):
    return spec_with(
        n=4,
        f=1,
        adversary={"byzantine": [3], "behaviors": behaviors},
        **overrides,
    )


def test_orphan_flood_does_not_break_liveness():
    spec = adversary_spec(
        [{"kind": "orphan_flood", "rate": 2}], rounds=3, horizon=300, grace=40
    )
    metrics, verdict = run_scenario(spec)
    assert verdict.eventual_delivery  # junk from byz senders does not count
    assert verdict.strong_convergence
    assert verdict.termination
    # the junk really is sitting in buffers
    assert any(occ[-1] > 0 for occ in metrics.buffer_occupancy[:3])
    assert metrics.buffered_correct_origin[:3] == [0, 0, 0]


def test_withhold_without_gossip_breaks_delivery():
    spec = adversary_spec(
        [{"kind": "withhold", "skip": [2]}], rounds=2, horizon=300, grace=40
    )
    metrics, verdict = run_scenario(spec)
    assert not verdict.eventual_delivery  # replica 2 never sees byz ops
    assert verdict.strong_convergence  # applied sets differ, so vacuous


def test_withhold_with_gossip_heals():
    spec = adversary_spec(
        [{"kind": "withhold", "skip": [2]}],
        rounds=2,
        horizon=400,
        grace=60,
        gossip_period=15,
    )
    metrics, verdict = run_scenario(spec)
    assert verdict.all_ok()
    backfills = [ev for ev in metrics.trace if ev.kind == "BACKFILL_RESP"]
    assert backfills


def test_equivocation_positive_and_negative():
    behaviors = [
        {"kind": "equivocate", "subset_a": [0, 1], "subset_b": [2], "at_round": 0}
    ]
    pos = adversary_spec(
        behaviors,
        rounds=3,
        updates_per_round=1,
        partitions=[[0, 120, [0, 1]]],
        gossip_period=20,
        horizon=400,
        grace=60,
    )
    metrics, verdict = run_scenario(pos)
    assert verdict.all_ok()
    forked = metrics.applied_sets[3] - metrics.correct_broadcast_ids
    assert len(forked) == 2
    for i in (0, 1, 2):
        assert forked <= metrics.applied_sets[i]

    neg = adversary_spec(
        behaviors,
        rounds=1,
        updates_per_round=1,
        partitions=[[0, 120, [0, 1]]],
        gossip_period=0,
        horizon=400,
        grace=60,
    )
    metrics, verdict = run_scenario(neg)
    assert not verdict.eventual_delivery
    assert verdict.strong_convergence


# -- lockstep rounds ---------------------------------------------------------------------


def test_lockstep_widths_start_at_u0():
    widths = run_lockstep_rounds(3, 2, rounds=0, seed=1, u0=40)
    assert widths == [40]


def test_lockstep_deterministic():
    a = run_lockstep_rounds(4, 2, rounds=10, seed=3)
    b = run_lockstep_rounds(4, 2, rounds=10, seed=3)
    assert a == b


def test_lockstep_dummy_depletion_plateaus():
    widths = run_lockstep_rounds(
        3, 2, rounds=30, seed=2, u0=40, dummy_threshold=10, dummy_d=10
    )
    assert widths[0] == 40
    assert min(widths) <= fixed_point(10, 3)
    # once below the threshold nothing changes any more
    tail = widths[-5:]
    assert len(set(tail)) == 1 and tail[0] <= 10


def test_lockstep_steady_state_tracks_urn_fixed_point():
    # With ongoing updates the width should hover near the analytic plateau.
    widths = run_lockstep_rounds(3, 5, rounds=40, seed=7, u0=30)
    fp = fixed_point(5, 3)
    assert max(widths[20:]) <= 3 * fp
