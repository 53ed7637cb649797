"""Scenario runner: replicas, workload, faults, metrics, and verdict checks.

A scenario wires n replicas to one simulated transport, drives a workload of
client appends for a number of rounds, optionally injects byzantine behavior,
then lets the system settle and grades the run:

* strong_convergence: replicas that applied the same operation set hold
  bit-identical state digests.
* eventual_delivery: every operation sent by a correct replica, and every
  operation applied by at least one correct replica, reached all correct
  replicas; no operation from a correct sender is still stuck in a buffer.
* termination: the run settled (no payload in flight, activity stopped for a
  full grace window inside the horizon).
* dag_invariants: after every delivery each replica's graph stayed a rooted
  DAG with consistent extremity bookkeeping.

There is also a lockstep mode that synchronizes all replicas between rounds.
It exists to compare measured extremity-width trajectories against the urn
analysis in `width`, which models exactly that synchronized round structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .core import (
    AddOperation,
    EventId,
    EventPayload,
    MegState,
    PendingBuffer,
    Vertex,
    generate_add,
    ingest,
    init,
)
from .encoding import compute_event_id
from .monitor import (
    MembershipDirectory,
    SignedEnvelope,
    SigningKey,
    sign_envelope,
    verify_envelope,
)
from .network import (
    BackfillRequest,
    BackfillResponse,
    DeliveryGuarantee,
    GossipMessage,
    Network,
    NetworkConfig,
    OpMessage,
    Partition,
    TraceEvent,
)

BACKFILL_BATCH = 100
DUMMY_THRESHOLD = 10
DUMMY_D = 10


class ScenarioError(ValueError):
    """A scenario file or dict violates a structural constraint."""


# -- adversary description ----------------------------------------------------


@dataclass(frozen=True)
class Equivocate:
    """Send one operation to subset_a and a different one to subset_b."""

    subset_a: tuple[int, ...]
    subset_b: tuple[int, ...]
    at_round: int = 0


@dataclass(frozen=True)
class Withhold:
    """Send workload operations to everyone except `skip`."""

    skip: tuple[int, ...]


@dataclass(frozen=True)
class OrphanFlood:
    """Emit `rate` validly signed operations per round whose parents do not exist."""

    rate: int


Behavior = Equivocate | Withhold | OrphanFlood


@dataclass(frozen=True)
class AdversarySpec:
    byzantine: frozenset[int]
    behaviors: tuple[Behavior, ...] = ()


# -- scenario ------------------------------------------------------------------

SCENARIO_KEYS = (
    "n",
    "f",
    "guarantee",
    "delay",
    "drop",
    "duplicate",
    "partitions",
    "adversary",
    "rounds",
    "updates_per_round",
    "d",
    "dummy_threshold",
    "dummy_d",
    "gossip_period",
    "horizon",
    "grace",
    "seed",
)


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    f: int
    guarantee: DeliveryGuarantee
    delay: tuple[int, int]
    drop: float
    duplicate: float
    partitions: tuple[Partition, ...]
    adversary: AdversarySpec | None
    rounds: int
    updates_per_round: int
    d: int
    dummy_threshold: int
    dummy_d: int
    gossip_period: int
    horizon: int
    grace: int
    seed: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ScenarioError("n must be at least 1")
        if not (0 <= self.f < self.n):
            raise ScenarioError(f"need 0 <= f < n, got f={self.f} n={self.n}")
        if self.d < 2:
            raise ScenarioError("parent cap d must be at least 2")
        if self.rounds < 0 or self.updates_per_round < 0:
            raise ScenarioError("rounds and updates_per_round must be non-negative")
        if self.horizon < 1 or self.grace < 1:
            raise ScenarioError("horizon and grace must be positive")
        if self.dummy_threshold < 0 or self.gossip_period < 0:
            raise ScenarioError("dummy_threshold and gossip_period must be non-negative")
        if self.dummy_threshold > 0 and self.dummy_d < 2:
            raise ScenarioError("dummy_d must be at least 2 when dummies are enabled")
        if self.guarantee is not DeliveryGuarantee.BEST_EFFORT and self.drop > 0:
            raise ScenarioError(f"{self.guarantee.value} forces drop probability 0")
        for part in self.partitions:
            if part.end > self.horizon:
                raise ScenarioError(
                    f"partition [{part.start}, {part.end}) must heal within horizon {self.horizon}"
                )
            if not part.side_a or part.side_a >= set(range(self.n)):
                raise ScenarioError("partition side must be a non-empty proper subset")
        if self.adversary is not None:
            byz = self.adversary.byzantine
            if len(byz) != self.f:
                raise ScenarioError(f"adversary names {len(byz)} replicas but f={self.f}")
            if any(i < 0 or i >= self.n for i in byz):
                raise ScenarioError("byzantine replica index out of range")
        elif self.f != 0:
            raise ScenarioError("f > 0 requires an adversary naming the faulty replicas")


def _parse_behavior(raw: dict) -> Behavior:
    kind = raw.get("kind")
    if kind == "equivocate":
        return Equivocate(
            subset_a=tuple(raw["subset_a"]),
            subset_b=tuple(raw["subset_b"]),
            at_round=int(raw.get("at_round", 0)),
        )
    if kind == "withhold":
        return Withhold(skip=tuple(raw["skip"]))
    if kind == "orphan_flood":
        return OrphanFlood(rate=int(raw["rate"]))
    raise ScenarioError(f"unknown adversary behavior kind: {kind!r}")


def parse_scenario(raw: dict) -> ScenarioSpec:
    """Validate a scenario dict; keys must be exactly the documented set."""
    got = set(raw)
    want = set(SCENARIO_KEYS)
    if got != want:
        missing = sorted(want - got)
        extra = sorted(got - want)
        raise ScenarioError(f"scenario keys mismatch: missing={missing} unexpected={extra}")
    try:
        guarantee = DeliveryGuarantee(raw["guarantee"])
    except ValueError as exc:
        raise ScenarioError(f"unknown guarantee {raw['guarantee']!r}") from exc
    delay = raw["delay"]
    if not (isinstance(delay, (list, tuple)) and len(delay) == 2):
        raise ScenarioError("delay must be a [lo, hi] pair")
    partitions = []
    for item in raw["partitions"]:
        if not (isinstance(item, (list, tuple)) and len(item) == 3):
            raise ScenarioError("each partition must be [start, end, side_a]")
        partitions.append(
            Partition(start=int(item[0]), end=int(item[1]), side_a=frozenset(int(i) for i in item[2]))
        )
    adversary = None
    if raw["adversary"] is not None:
        adv = raw["adversary"]
        adversary = AdversarySpec(
            byzantine=frozenset(int(i) for i in adv["byzantine"]),
            behaviors=tuple(_parse_behavior(b) for b in adv.get("behaviors", [])),
        )
    return ScenarioSpec(
        n=int(raw["n"]),
        f=int(raw["f"]),
        guarantee=guarantee,
        delay=(int(delay[0]), int(delay[1])),
        drop=float(raw["drop"]),
        duplicate=float(raw["duplicate"]),
        partitions=tuple(partitions),
        adversary=adversary,
        rounds=int(raw["rounds"]),
        updates_per_round=int(raw["updates_per_round"]),
        d=int(raw["d"]),
        dummy_threshold=int(raw["dummy_threshold"]),
        dummy_d=int(raw["dummy_d"]),
        gossip_period=int(raw["gossip_period"]),
        horizon=int(raw["horizon"]),
        grace=int(raw["grace"]),
        seed=int(raw["seed"]),
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return parse_scenario(raw)


# -- replica -------------------------------------------------------------------


def extremities_consistent(state: MegState) -> bool:
    """Recompute extremities from the edge set and compare with bookkeeping."""
    with_child = {parent for (_, parent) in state.edges}
    expected = set(state.vertices) - with_child
    return bool(expected) and state.get_extremities() == expected


class ReplicaNode:
    """One replica: verification gate, DAG state, pending buffer, envelope store."""

    def __init__(
        self,
        idx: int,
        key: SigningKey,
        directory: MembershipDirectory,
        room: str,
        d: int,
        seed: int,
        byzantine: bool = False,
    ) -> None:
        self.idx = idx
        self.key = key
        self.directory = directory
        self.d = d
        self.byzantine = byzantine
        self.state = init(room)
        self.buffer = PendingBuffer()
        self.store: dict[EventId, SignedEnvelope] = {}
        self.applied: set[EventId] = set()
        self.parent_rng = Random(f"{seed}:parents:{idx}")
        self.payload_rng = Random(f"{seed}:payload:{idx}")
        self.seq = 0
        self.stale_parent_ops = 0
        self.rejected_ops = 0
        self.invariant_failures = 0

    def make_op(self, payload: EventPayload) -> SignedEnvelope:
        op = generate_add(
            self.state, payload, self.d, (), self.parent_rng, self.key.replica_id, self.seq
        )
        self.seq += 1
        return sign_envelope(op, self.key)

    def absorb_own(self, env: SignedEnvelope) -> None:
        """Apply the replica's own operation synchronously at broadcast time."""
        self.store[env.op.vertex.id] = env
        applied = ingest(self.state, self.buffer, env.op)
        self.applied.update(applied)
        self._check_invariants(applied)

    def receive_envelope(self, env: SignedEnvelope) -> list[EventId]:
        """Verify, then apply or buffer.  Returns the event ids applied."""
        if verify_envelope(env, self.directory) is not None:
            self.rejected_ops += 1
            return []
        op = env.op
        self.store[op.vertex.id] = env
        if self.state.precondition_holds(op):
            ext = self.state.get_extremities()
            if any(p not in ext for p in op.vertex.parents):
                # Parents that already have children: late or deliberately
                # old references.  Accepted, but worth counting.
                self.stale_parent_ops += 1
        applied = ingest(self.state, self.buffer, op)
        self.applied.update(applied)
        self._check_invariants(applied)
        return applied

    def _check_invariants(self, applied: list[EventId]) -> None:
        if applied and not (self.state.is_rooted_dag() and extremities_consistent(self.state)):
            self.invariant_failures += 1

    def missing_parents_of(self, op: AddOperation) -> set[EventId]:
        return {p for p in op.vertex.parents if not self.state.lookup(p)}

    def serve_backfill(
        self, missing: frozenset[EventId], limit: int = BACKFILL_BATCH
    ) -> tuple[SignedEnvelope, ...]:
        """Ancestor closure of the requested ids from the local envelope store.

        Breadth-first from the requested ids so the requested events and near
        ancestors come first; capped at `limit` envelopes per response, the
        requester retries for the rest on its next trigger.
        """
        out: list[SignedEnvelope] = []
        seen: set[EventId] = set()
        frontier = sorted(missing)
        while frontier and len(out) < limit:
            nxt: list[EventId] = []
            for mid in frontier:
                if mid in seen:
                    continue
                seen.add(mid)
                env = self.store.get(mid)
                if env is None:
                    continue
                out.append(env)
                if len(out) >= limit:
                    break
                for p in env.op.vertex.parents:
                    if p not in seen and p in self.store:
                        nxt.append(p)
            frontier = sorted(set(nxt) - seen)
        return tuple(out)


def maybe_emit_dummy(
    node: ReplicaNode,
    threshold: int = DUMMY_THRESHOLD,
    dummy_d: int = DUMMY_D,
) -> SignedEnvelope | None:
    """Emit an empty add to soak up extremities, if there are more than `threshold`.

    The dummy references up to `dummy_d` parents, so idle replicas pull the
    width down toward the level the urn analysis predicts for k emitters.
    """
    if len(node.state.get_extremities()) <= threshold:
        return None
    payload = EventPayload(kind="dummy", body=b"")
    op = generate_add(
        node.state, payload, dummy_d, (), node.parent_rng, node.key.replica_id, node.seq
    )
    node.seq += 1
    return sign_envelope(op, node.key)


def equivocate(
    node: ReplicaNode,
    payload_a: EventPayload,
    payload_b: EventPayload,
) -> tuple[SignedEnvelope, SignedEnvelope]:
    """Create two concurrent, individually valid operations from one state.

    Both are generated against the same snapshot before either is applied, so
    they share parents but differ in content and sequence number, hence in
    id.  The equivocator keeps its own state valid by absorbing both.  On the
    wire this is indistinguishable from two senders that each crashed after
    reaching part of the group.
    """
    state = node.state
    op_a = generate_add(
        state, payload_a, node.d, (), node.parent_rng, node.key.replica_id, node.seq
    )
    op_b = generate_add(
        state, payload_b, node.d, (), node.parent_rng, node.key.replica_id, node.seq + 1
    )
    node.seq += 2
    env_a = sign_envelope(op_a, node.key)
    env_b = sign_envelope(op_b, node.key)
    node.absorb_own(env_a)
    node.absorb_own(env_b)
    return env_a, env_b


# -- metrics and verdict ---------------------------------------------------------


@dataclass
class Metrics:
    width: list[list[int]]
    buffer_occupancy: list[list[int]]
    applied_counts: list[int]
    stale_parent_ops: list[int]
    rejected_ops: list[int]
    convergence_tick: int | None
    quiescence_tick: int | None
    trace: list[TraceEvent]
    final_digests: list[bytes]
    applied_sets: list[set[EventId]]
    correct_indices: tuple[int, ...]
    correct_broadcast_ids: set[EventId]
    buffered_correct_origin: list[int]


@dataclass(frozen=True)
class Verdict:
    strong_convergence: bool
    eventual_delivery: bool
    termination: bool
    dag_invariants: bool

    def all_ok(self) -> bool:
        return (
            self.strong_convergence
            and self.eventual_delivery
            and self.termination
            and self.dag_invariants
        )


def check_strong_convergence(replicas: list[tuple[set[EventId], bytes]]) -> bool:
    """Equal applied sets must imply equal digests, for every pair."""
    for i in range(len(replicas)):
        for j in range(i + 1, len(replicas)):
            seta, diga = replicas[i]
            setb, digb = replicas[j]
            if seta == setb and diga != digb:
                return False
    return True


def check_eventual_delivery(metrics: Metrics) -> bool:
    """Correct-origin and correct-applied operations must reach every correct replica.

    Operations a byzantine replica kept to itself do not count, but once any
    correct replica has applied an operation, all of them must.  Buffers may
    hold leftovers only if those operations came from byzantine senders.
    """
    correct = metrics.correct_indices
    if not correct:
        return True
    applied_union: set[EventId] = set()
    for i in correct:
        applied_union |= metrics.applied_sets[i]
    required = metrics.correct_broadcast_ids | applied_union
    for i in correct:
        if not required <= metrics.applied_sets[i]:
            return False
        if metrics.buffered_correct_origin[i]:
            return False
    return True


def check_termination(metrics: Metrics) -> bool:
    return metrics.quiescence_tick is not None


def width_series_csv(metrics: Metrics) -> str:
    lines = ["tick,replica,width"]
    horizon = len(metrics.width[0]) if metrics.width else 0
    for t in range(horizon):
        for r in range(len(metrics.width)):
            lines.append(f"{t},{r},{metrics.width[r][t]}")
    return "\n".join(lines) + "\n"


def trace_tsv(metrics: Metrics) -> str:
    return "\n".join(ev.line() for ev in metrics.trace) + "\n"


# -- scenario execution ----------------------------------------------------------


def run_scenario(spec: ScenarioSpec) -> tuple[Metrics, Verdict]:
    """Execute one scenario deterministically and grade it."""
    byz = spec.adversary.byzantine if spec.adversary else frozenset()
    behaviors = spec.adversary.behaviors if spec.adversary else ()
    correct = tuple(i for i in range(spec.n) if i not in byz)
    room = f"scenario:{spec.seed}"

    keys = [SigningKey.from_seed(f"{spec.seed}:replica:{i}") for i in range(spec.n)]
    directory = MembershipDirectory(
        {k.replica_id: k.verification_key for k in keys}, f=spec.f
    )
    nodes = [
        ReplicaNode(i, keys[i], directory, room, spec.d, spec.seed, byzantine=i in byz)
        for i in range(spec.n)
    ]
    idx_of = {keys[i].replica_id: i for i in range(spec.n)}
    net = Network(
        spec.n,
        spec.guarantee,
        NetworkConfig(
            delay=spec.delay,
            drop=spec.drop,
            duplicate=spec.duplicate,
            partitions=spec.partitions,
            seed=spec.seed,
        ),
        initial_ids=(nodes[0].state.root,),
    )
    orphan_rng = Random(f"{spec.seed}:orphans")

    correct_broadcast: set[EventId] = set()
    width = [[0] * spec.horizon for _ in range(spec.n)]
    occupancy = [[0] * spec.horizon for _ in range(spec.n)]
    all_equal = [False] * spec.horizon
    last_activity = -1

    def send_own(i: int, env: SignedEnvelope, targets=None) -> None:
        nodes[i].absorb_own(env)
        net.broadcast(i, env, targets)
        if i in byz:
            return
        correct_broadcast.add(env.op.vertex.id)

    def run_behaviors(b_idx: int, t: int) -> bool:
        acted = False
        node = nodes[b_idx]
        for behavior in behaviors:
            if isinstance(behavior, Equivocate):
                if t == behavior.at_round:
                    pa = EventPayload("msg", node.payload_rng.randbytes(8))
                    pb = EventPayload("msg", node.payload_rng.randbytes(8))
                    env_a, env_b = equivocate(node, pa, pb)
                    net.broadcast(b_idx, env_a, targets=behavior.subset_a)
                    net.broadcast(b_idx, env_b, targets=behavior.subset_b)
                    acted = True
            elif isinstance(behavior, Withhold):
                if t < spec.rounds:
                    for _ in range(spec.updates_per_round):
                        env = node.make_op(EventPayload("msg", node.payload_rng.randbytes(8)))
                        node.absorb_own(env)
                        targets = set(range(spec.n)) - set(behavior.skip)
                        net.broadcast(b_idx, env, targets=targets)
                        acted = True
            elif isinstance(behavior, OrphanFlood):
                if t < spec.rounds:
                    for _ in range(behavior.rate):
                        parents = (orphan_rng.randbytes(32), orphan_rng.randbytes(32))
                        payload = EventPayload("msg", node.payload_rng.randbytes(8))
                        vid = compute_event_id(
                            payload.kind, payload.body, node.key.replica_id, node.seq, parents
                        )
                        vertex = Vertex(
                            payload=payload,
                            id=vid,
                            parents=parents,
                            sender=node.key.replica_id,
                            seq=node.seq,
                        )
                        node.seq += 1
                        net.broadcast(b_idx, sign_envelope(AddOperation(vertex), node.key))
                        acted = True
        return acted

    def route(receiver: int, sender: int, msg: object) -> bool:
        """Handle one delivery; returns True if it moved payload."""
        node = nodes[receiver]
        if isinstance(msg, OpMessage):
            if node.byzantine:
                node.receive_envelope(msg.env)
                return False
            applied = node.receive_envelope(msg.env)
            op_id = msg.env.op.vertex.id
            if op_id in node.buffer:
                missing = node.missing_parents_of(msg.env.op)
                net.request_backfill(receiver, sender, missing)
            return bool(applied)
        if node.byzantine:
            # Byzantine replicas stay silent on auxiliary protocols.
            return False
        if isinstance(msg, GossipMessage):
            unknown = {
                w
                for w in msg.extremities
                if not node.state.lookup(w) and w not in node.buffer
            }
            unknown |= node.buffer.missing_parent_ids(node.state)
            if unknown:
                net.request_backfill(receiver, sender, unknown)
            return False
        if isinstance(msg, BackfillRequest):
            net.respond_backfill(receiver, sender, node.serve_backfill(msg.missing))
            return False
        if isinstance(msg, BackfillResponse):
            moved = False
            for env in msg.envelopes:
                if node.receive_envelope(env):
                    moved = True
            return moved and bool(msg.envelopes)
        return False

    for t in range(spec.horizon):
        activity = False
        if t < spec.rounds:
            for i in correct:
                for _ in range(spec.updates_per_round):
                    env = nodes[i].make_op(
                        EventPayload("msg", nodes[i].payload_rng.randbytes(8))
                    )
                    send_own(i, env)
                    activity = True
        for b_idx in sorted(byz):
            if run_behaviors(b_idx, t):
                activity = True
        if spec.dummy_threshold > 0:
            for i in correct:
                env = maybe_emit_dummy(nodes[i], spec.dummy_threshold, spec.dummy_d)
                if env is not None:
                    send_own(i, env)
                    activity = True
        if spec.gossip_period > 0 and t > 0 and t % spec.gossip_period == 0:
            for i in correct:
                net.gossip_extremities(i, nodes[i].state.get_extremities())
        for receiver, sender, msg in net.step():
            if route(receiver, sender, msg):
                activity = True
        for i in range(spec.n):
            width[i][t] = len(nodes[i].state.get_extremities())
            occupancy[i][t] = len(nodes[i].buffer)
        digests = {nodes[i].state.state_digest() for i in correct}
        all_equal[t] = len(digests) == 1
        if activity:
            last_activity = t

    quiescence_tick: int | None = last_activity + spec.grace if last_activity >= 0 else 0
    if quiescence_tick >= spec.horizon or net.pending_payload():
        quiescence_tick = None
    convergence_tick = None
    if quiescence_tick is not None:
        for t in range(quiescence_tick, spec.horizon):
            if all_equal[t]:
                convergence_tick = t
                break

    correct_ids = {keys[i].replica_id for i in correct}
    buffered_correct = [
        sum(1 for op in nodes[i].buffer.operations() if op.vertex.sender in correct_ids)
        for i in range(spec.n)
    ]
    metrics = Metrics(
        width=width,
        buffer_occupancy=occupancy,
        applied_counts=[len(nodes[i].applied) for i in range(spec.n)],
        stale_parent_ops=[nodes[i].stale_parent_ops for i in range(spec.n)],
        rejected_ops=[nodes[i].rejected_ops for i in range(spec.n)],
        convergence_tick=convergence_tick,
        quiescence_tick=quiescence_tick,
        trace=list(net.trace),
        final_digests=[nodes[i].state.state_digest() for i in range(spec.n)],
        applied_sets=[set(nodes[i].applied) for i in range(spec.n)],
        correct_indices=correct,
        correct_broadcast_ids=correct_broadcast,
        buffered_correct_origin=buffered_correct,
    )
    verdict = Verdict(
        strong_convergence=check_strong_convergence(
            [(metrics.applied_sets[i], metrics.final_digests[i]) for i in correct]
        ),
        eventual_delivery=check_eventual_delivery(metrics),
        termination=check_termination(metrics),
        dag_invariants=all(
            nodes[i].invariant_failures == 0
            and nodes[i].state.is_rooted_dag()
            and extremities_consistent(nodes[i].state)
            for i in range(spec.n)
        ),
    )
    return metrics, verdict


# -- lockstep round mode -----------------------------------------------------------


def run_lockstep_rounds(
    n: int,
    d: int,
    rounds: int,
    seed: int,
    u0: int | None = None,
    dummy_threshold: int | None = None,
    dummy_d: int = DUMMY_D,
    room: str = "lockstep",
) -> list[int]:
    """Synchronized rounds: everyone appends concurrently, then full sync.

    Each round, every replica generates one operation against the identical
    shared state (their parent picks are concurrent), then all operations are
    applied everywhere before the next round.  With `dummy_threshold` set the
    workload is idle and replicas emit dummies only while the width exceeds
    the threshold.  Returns the extremity count per round, index 0 being the
    starting width.
    """
    if n < 1 or rounds < 0:
        raise ValueError("need n >= 1 and rounds >= 0")
    state = init(room)
    senders = [SigningKey.from_seed(f"{seed}:lockstep:{i}").replica_id for i in range(n)]
    rngs = [Random(f"{seed}:lockstep-rng:{i}") for i in range(n)]
    seqs = [0] * n
    if u0:
        root = state.root
        for j in range(u0):
            payload = EventPayload("msg", j.to_bytes(4, "big"))
            sender = senders[j % n]
            vid = compute_event_id(payload.kind, payload.body, sender, seqs[j % n], (root,))
            state.apply_add(
                AddOperation(
                    Vertex(payload=payload, id=vid, parents=(root,), sender=sender, seq=seqs[j % n])
                )
            )
            seqs[j % n] += 1
    widths = [len(state.get_extremities())]
    for _ in range(rounds):
        ops: list[AddOperation] = []
        current_width = len(state.get_extremities())
        for i in range(n):
            if dummy_threshold is not None:
                if current_width <= dummy_threshold:
                    continue
                payload = EventPayload("dummy", b"")
                cap = dummy_d
            else:
                payload = EventPayload("msg", rngs[i].randbytes(8))
                cap = d
            ops.append(
                generate_add(state, payload, cap, (), rngs[i], senders[i], seqs[i])
            )
            seqs[i] += 1
        for op in ops:
            state.apply_add(op)
        widths.append(len(state.get_extremities()))
    return widths
