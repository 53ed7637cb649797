"""Deterministic op-set construction and schedule replay for convergence checks.

`make_op_soup` builds a fixed set of interdependent add operations containing
genuine concurrency (several ops generated against the same snapshot).  The
same set can then be replayed in arbitrary delivery orders; every complete
schedule must drain the pending buffer and end at the same state digest.
"""

from __future__ import annotations

import hashlib
from random import Random
from typing import Callable

from .core import (
    AddOperation,
    EventPayload,
    MegState,
    PendingBuffer,
    generate_add,
    ingest,
    init,
)


def soup_sender(i: int) -> bytes:
    return hashlib.sha256(f"soup-sender-{i}".encode()).digest()


def make_op_soup(
    n_replicas: int,
    n_ops: int,
    seed: int,
    d: int = 2,
    room: str = "soup",
) -> list[AddOperation]:
    """Build `n_ops` operations with concurrent batches; replay with the same room.

    Each batch picks a random subset of replicas that all generate against the
    current snapshot before any of the batch is applied, so ops within a batch
    are mutually concurrent (often sharing parents), while later batches depend
    on earlier ones.
    """
    if n_replicas < 1 or n_ops < 0:
        raise ValueError("need n_replicas >= 1 and n_ops >= 0")
    state = init(room)
    rng = Random(f"{seed}:soup")
    senders = [soup_sender(i) for i in range(n_replicas)]
    seqs = [0] * n_replicas
    ops: list[AddOperation] = []
    while len(ops) < n_ops:
        emitters = rng.sample(range(n_replicas), rng.randint(1, n_replicas))
        batch: list[AddOperation] = []
        for i in emitters:
            if len(ops) + len(batch) >= n_ops:
                break
            payload = EventPayload("msg", rng.randbytes(4))
            batch.append(generate_add(state, payload, d, (), rng, senders[i], seqs[i]))
            seqs[i] += 1
        for op in batch:
            state.apply_add(op)
            ops.append(op)
    return ops


def replay_schedule(ops: list[AddOperation], room: str = "soup") -> bytes:
    """Ingest ops in the given order; returns the final state digest.

    Raises if the schedule leaves anything undelivered, which for a complete
    permutation of a soup would mean the buffering logic lost an op.
    """
    state = init(room)
    buffer = PendingBuffer()
    for op in ops:
        ingest(state, buffer, op)
    if len(buffer):
        raise ValueError(f"schedule left {len(buffer)} ops buffered")
    return state.state_digest()


def replay_with_invariants(
    ops: list[AddOperation],
    room: str = "soup",
    check: Callable[[MegState], None] | None = None,
) -> bytes:
    """Like replay_schedule but calls `check(state)` after every applied op.

    The cascade drains buffered ops lowest-id first, re-scanning after each
    application; the applied set per delivery matches `ingest`, only the
    instrumentation granularity differs.
    """
    state = init(room)
    buffer = PendingBuffer()

    def apply_checked(op: AddOperation) -> None:
        if state.apply_add(op) and check is not None:
            check(state)

    for op in ops:
        if not state.precondition_holds(op):
            buffer.add(op)
            continue
        apply_checked(op)
        while True:
            ready = buffer.ready_ops(state)
            if not ready:
                break
            nxt = ready[0]
            buffer.remove(nxt.vertex.id)
            apply_checked(nxt)
    if len(buffer):
        raise ValueError(f"schedule left {len(buffer)} ops buffered")
    return state.state_digest()
