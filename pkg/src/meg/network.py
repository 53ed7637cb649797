"""Deterministic discrete-event message transport between replicas.

Time advances in integer ticks.  Sends schedule deliveries after a bounded
random delay; `step` hands back everything due at the current tick, ordered
by (due tick, enqueue sequence number), so identical configurations and seeds
replay the identical event trace.

Three delivery guarantees are simulated for operation messages:

* BEST_EFFORT: links may silently drop or duplicate; partitions discard
  crossing traffic.
* RELIABLE: per-recipient exactly-once for whatever the sender actually
  addressed.  Duplicates are filtered at the receiver, drops are disallowed,
  and traffic crossing a partition is deferred until the cut heals.
* CAUSAL_ORDER_RELIABLE: RELIABLE plus receiver-side holdback so no operation
  is handed over before its parents or before earlier sends from the same
  sender.  Parent links plus per-sender FIFO cover the happened-before
  relation that matters for the DAG; no extra vector bookkeeping is kept.

Gossip and backfill messages are auxiliary and always best-effort: partitions
drop them and the periodic retry cadence is expected to absorb losses.

A sender's own copy is not routed through the scheduler; callers apply their
own operations synchronously at broadcast time, which the transport records
for ordering purposes.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Iterable

from .core import EventId
from .monitor import SignedEnvelope


class DeliveryGuarantee(Enum):
    CAUSAL_ORDER_RELIABLE = "CausalOrderReliable"
    RELIABLE = "Reliable"
    BEST_EFFORT = "BestEffort"


@dataclass(frozen=True)
class Partition:
    """Bipartition active on ticks [start, end); must heal (finite end)."""

    start: int
    end: int
    side_a: frozenset[int]

    def separates(self, a: int, b: int, tick: int) -> bool:
        if not (self.start <= tick < self.end):
            return False
        return (a in self.side_a) != (b in self.side_a)


@dataclass(frozen=True)
class NetworkConfig:
    """Transport parameters.  Delays are uniform integer ticks in [lo, hi]."""

    delay: tuple[int, int] = (1, 10)
    drop: float = 0.0
    duplicate: float = 0.0
    partitions: tuple[Partition, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.delay
        if lo < 1 or hi < lo:
            raise ValueError(f"delay bounds must satisfy 1 <= lo <= hi, got {self.delay}")
        if not (0.0 <= self.drop <= 1.0) or not (0.0 <= self.duplicate <= 1.0):
            raise ValueError("drop and duplicate probabilities must lie in [0, 1]")
        for part in self.partitions:
            if part.start < 0 or part.end <= part.start:
                raise ValueError(f"partition interval invalid: [{part.start}, {part.end})")


@dataclass(frozen=True)
class OpMessage:
    env: SignedEnvelope
    send_index: int


@dataclass(frozen=True)
class GossipMessage:
    extremities: frozenset[EventId]


@dataclass(frozen=True)
class BackfillRequest:
    missing: frozenset[EventId]


@dataclass(frozen=True)
class BackfillResponse:
    envelopes: tuple[SignedEnvelope, ...]


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: str  # SEND | DELIVER | DROP | BACKFILL_REQ | BACKFILL_RESP | GOSSIP
    sender: str
    receiver: str
    event_hex: str

    def line(self) -> str:
        return f"{self.tick}\t{self.kind}\t{self.sender}\t{self.receiver}\t{self.event_hex}"


_AUX_KINDS = {
    GossipMessage: "GOSSIP",
    BackfillRequest: "BACKFILL_REQ",
    BackfillResponse: "BACKFILL_RESP",
}


def _msg_hex(msg: object) -> str:
    if isinstance(msg, OpMessage):
        return msg.env.op.vertex.id.hex()[:16]
    if isinstance(msg, BackfillRequest) and msg.missing:
        return sorted(msg.missing)[0].hex()[:16]
    if isinstance(msg, BackfillResponse) and msg.envelopes:
        return msg.envelopes[0].op.vertex.id.hex()[:16]
    return "-"


@dataclass(order=True)
class _Scheduled:
    due: int
    seq: int
    sender: int = field(compare=False)
    receiver: int = field(compare=False)
    msg: object = field(compare=False)


class Network:
    """Message scheduler shared by all replicas of one scenario."""

    def __init__(
        self,
        n: int,
        guarantee: DeliveryGuarantee,
        config: NetworkConfig,
        initial_ids: Iterable[EventId] = (),
    ) -> None:
        if n < 1:
            raise ValueError("need at least one replica")
        if guarantee is not DeliveryGuarantee.BEST_EFFORT and config.drop > 0:
            raise ValueError(f"{guarantee.value} requires drop probability 0")
        self.n = n
        self.guarantee = guarantee
        self.config = config
        self.tick = 0
        self.trace: list[TraceEvent] = []
        self._queue: list[_Scheduled] = []
        self._seq = 0
        self._rng = Random(f"{config.seed}:net")
        self._send_counters = [0] * n
        # Per receiver: operation ids already handed over (dedup and holdback).
        self._delivered_ops: list[set[EventId]] = [set(initial_ids) for _ in range(n)]
        # Per receiver, per sender: next expected send index (FIFO holdback).
        self._fifo_next = [[0] * n for _ in range(n)]
        self._held: list[list[_Scheduled]] = [[] for _ in range(n)]

    # -- helpers -----------------------------------------------------------

    def _name(self, idx: int | None) -> str:
        return "*" if idx is None else f"r{idx}"

    def _log(self, kind: str, sender: int | None, receiver: int | None, hex_id: str) -> None:
        self.trace.append(TraceEvent(self.tick, kind, self._name(sender), self._name(receiver), hex_id))

    def _separated(self, a: int, b: int, tick: int) -> bool:
        return any(p.separates(a, b, tick) for p in self.config.partitions)

    def _next_open_tick(self, a: int, b: int, tick: int) -> int:
        t = tick
        horizon = max((p.end for p in self.config.partitions), default=tick)
        while t <= horizon and self._separated(a, b, t):
            t += 1
        return t

    def _push(self, due: int, sender: int, receiver: int, msg: object) -> None:
        heapq.heappush(self._queue, _Scheduled(due, self._seq, sender, receiver, msg))
        self._seq += 1

    def _sample_delay(self) -> int:
        lo, hi = self.config.delay
        return self._rng.randint(lo, hi)

    # -- sends -------------------------------------------------------------

    def broadcast(
        self,
        sender: int,
        env: SignedEnvelope,
        targets: Iterable[int] | None = None,
    ) -> None:
        """Address an operation to `targets` (default: everyone).

        The caller is expected to apply its own copy synchronously; the
        transport just records it as delivered to the sender so later causal
        holdback sees it as available.  A correct replica always targets all;
        restricted target sets model crash-mid-send and byzantine behavior.
        """
        vid = env.op.vertex.id
        send_index = self._send_counters[sender]
        self._send_counters[sender] += 1
        self._log("SEND", sender, None, vid.hex()[:16])
        self._delivered_ops[sender].add(vid)
        self._fifo_next[sender][sender] = send_index + 1
        recipients = set(range(self.n)) if targets is None else set(targets)
        recipients.discard(sender)
        best_effort = self.guarantee is DeliveryGuarantee.BEST_EFFORT
        for r in sorted(recipients):
            if best_effort and self.config.drop > 0 and self._rng.random() < self.config.drop:
                self._log("DROP", sender, r, vid.hex()[:16])
                continue
            self._push(self.tick + self._sample_delay(), sender, r, OpMessage(env, send_index))
            if self.config.duplicate > 0 and self._rng.random() < self.config.duplicate:
                self._push(self.tick + self._sample_delay(), sender, r, OpMessage(env, send_index))

    def gossip_extremities(self, sender: int, extremities: frozenset[EventId]) -> None:
        """Advertise the sender's extremity ids to every other replica."""
        msg = GossipMessage(extremities)
        for r in range(self.n):
            if r != sender:
                self._push(self.tick + self._sample_delay(), sender, r, msg)

    def request_backfill(self, requester: int, peer: int, missing: Iterable[EventId]) -> None:
        missing = frozenset(missing)
        if missing:
            self._push(self.tick + self._sample_delay(), requester, peer, BackfillRequest(missing))

    def respond_backfill(self, sender: int, peer: int, envelopes: Iterable[SignedEnvelope]) -> None:
        self._push(self.tick + self._sample_delay(), sender, peer, BackfillResponse(tuple(envelopes)))

    # -- delivery ----------------------------------------------------------

    def step(self) -> list[tuple[int, int, object]]:
        """Process everything due at the current tick, then advance one tick.

        Returns (receiver index, sender index, message) triples in delivery
        order; the caller routes them into replica logic.
        """
        t = self.tick
        out: list[tuple[int, int, object]] = []
        while self._queue and self._queue[0].due <= t:
            item = heapq.heappop(self._queue)
            msg = item.msg
            if isinstance(msg, OpMessage):
                self._handle_op(item, out)
            else:
                if self._separated(item.sender, item.receiver, t):
                    self._log("DROP", item.sender, item.receiver, _msg_hex(msg))
                    continue
                self._log(_AUX_KINDS[type(msg)], item.sender, item.receiver, _msg_hex(msg))
                out.append((item.receiver, item.sender, msg))
        self.tick = t + 1
        return out

    def _handle_op(self, item: _Scheduled, out: list[tuple[int, int, object]]) -> None:
        msg: OpMessage = item.msg  # type: ignore[assignment]
        vid = msg.env.op.vertex.id
        if self._separated(item.sender, item.receiver, self.tick):
            if self.guarantee is DeliveryGuarantee.BEST_EFFORT:
                self._log("DROP", item.sender, item.receiver, vid.hex()[:16])
            else:
                self._push(
                    self._next_open_tick(item.sender, item.receiver, self.tick),
                    item.sender,
                    item.receiver,
                    msg,
                )
            return
        if self.guarantee is DeliveryGuarantee.BEST_EFFORT:
            self._log("DELIVER", item.sender, item.receiver, vid.hex()[:16])
            out.append((item.receiver, item.sender, msg))
            return
        if vid in self._delivered_ops[item.receiver]:
            self._log("DROP", item.sender, item.receiver, vid.hex()[:16])
            return
        if self.guarantee is DeliveryGuarantee.RELIABLE:
            self._deliver(item, out)
            return
        # Causal order: hold back until parents are available at the receiver
        # and all earlier sends from this sender went through.
        self._held[item.receiver].append(item)
        self._drain_holdback(item.receiver, out)

    def _deliverable(self, receiver: int, item: _Scheduled) -> bool:
        msg: OpMessage = item.msg  # type: ignore[assignment]
        if msg.send_index != self._fifo_next[receiver][item.sender]:
            return False
        return all(p in self._delivered_ops[receiver] for p in msg.env.op.vertex.parents)

    def _drain_holdback(self, receiver: int, out: list[tuple[int, int, object]]) -> None:
        progress = True
        while progress:
            progress = False
            for item in sorted(self._held[receiver], key=lambda it: (it.sender, it.msg.send_index, it.seq)):
                msg: OpMessage = item.msg  # type: ignore[assignment]
                vid = msg.env.op.vertex.id
                if vid in self._delivered_ops[receiver]:
                    # A duplicate copy got held while the first went through.
                    self._held[receiver].remove(item)
                    self._log("DROP", item.sender, receiver, vid.hex()[:16])
                    progress = True
                    break
                if self._deliverable(receiver, item):
                    self._held[receiver].remove(item)
                    self._deliver(item, out)
                    progress = True
                    break

    def _deliver(self, item: _Scheduled, out: list[tuple[int, int, object]]) -> None:
        msg: OpMessage = item.msg  # type: ignore[assignment]
        vid = msg.env.op.vertex.id
        self._delivered_ops[item.receiver].add(vid)
        if msg.send_index == self._fifo_next[item.receiver][item.sender]:
            self._fifo_next[item.receiver][item.sender] = msg.send_index + 1
        self._log("DELIVER", item.sender, item.receiver, vid.hex()[:16])
        out.append((item.receiver, item.sender, msg))

    # -- introspection -----------------------------------------------------

    def queue_empty(self) -> bool:
        return not self._queue and not any(self._held)

    def pending_payload(self) -> bool:
        """True if an operation (or non-empty backfill) is still in flight.

        Gossip that nobody will answer and empty responses do not count as
        pending work; undelivered operations and held-back operations do.
        """
        for item in self._queue:
            if isinstance(item.msg, OpMessage):
                return True
            if isinstance(item.msg, BackfillResponse) and item.msg.envelopes:
                return True
        return any(self._held)

    def trace_lines(self) -> list[str]:
        return [ev.line() for ev in self.trace]
