"""Replicated append-only event DAG with commutative, idempotent add effectors.

State is a rooted DAG.  Vertices are immutable events; each edge points from
a new event to a parent it acknowledged.  The single update operation, add,
splits into a side-effect-free generator (choose parents among the current
forward extremities, derive the content id) and an effector (union the vertex
and its edges into the local graph).  An effector may only run once all
parents are present; operations arriving early wait in a pending buffer and
are drained as their parents show up.  Effectors for distinct events commute
and re-applying an event is a no-op, which together make replicas converge to
identical states once they have applied the same set of operations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from random import Random
from typing import Iterable

from .encoding import compute_event_id

EventId = bytes
ReplicaId = bytes

ROOT_SENDER = bytes(32)
DEFAULT_ROOM = "room-0"
MAX_PAYLOAD_BYTES = 64 * 1024


class MegError(Exception):
    """Base error for DAG state handling."""


class UnknownVertexError(MegError):
    """A queried vertex id is not part of the state."""


class PreconditionError(MegError):
    """An effector ran although some parent is missing."""


class EmptyExtremitiesError(MegError):
    """Parent selection was asked to choose from an empty extremity set."""


@dataclass(frozen=True)
class EventPayload:
    """Application content of an event.

    The body size bound (64 KiB by default) is enforced where untrusted input
    enters the system, not here, so that oversized test inputs can be built.
    """

    kind: str
    body: bytes

    def __post_init__(self) -> None:
        if not self.kind:
            raise ValueError("payload kind must be non-empty")


@dataclass(frozen=True)
class Vertex:
    """Immutable event: payload plus the parent ids it acknowledged.

    `id` is a claim that inbound verification checks against the canonical
    content hash; locally generated vertices always satisfy it.  Parents are
    kept in generation order; hashing sorts them, so order does not affect
    the id.
    """

    payload: EventPayload
    id: EventId
    parents: tuple[EventId, ...]
    sender: ReplicaId
    seq: int


@dataclass(frozen=True)
class AddOperation:
    """The one update operation: append a single vertex."""

    vertex: Vertex


class MegState:
    """Rooted event DAG owned by a single logical writer.

    Queries hand out immutable snapshots, so readers never observe a
    half-applied effector.
    """

    def __init__(self, root: Vertex) -> None:
        if root.parents:
            raise ValueError("root vertex must have no parents")
        self.root: EventId = root.id
        self.vertices: dict[EventId, Vertex] = {root.id: root}
        self.edges: set[tuple[EventId, EventId]] = set()
        self._extremities: set[EventId] = {root.id}

    # -- queries -----------------------------------------------------------

    def lookup(self, w: EventId) -> bool:
        return w in self.vertices

    def has_child(self, w: EventId) -> bool:
        if w not in self.vertices:
            raise UnknownVertexError(f"unknown vertex {w.hex()[:16]}")
        return w not in self._extremities

    def get_extremities(self) -> frozenset[EventId]:
        """Exactly the vertices with no incoming edge.  Never empty."""
        return frozenset(self._extremities)

    def get_state(self) -> tuple[frozenset[Vertex], frozenset[tuple[EventId, EventId]]]:
        """Immutable (vertex set, edge set) snapshot."""
        return frozenset(self.vertices.values()), frozenset(self.edges)

    def applied_ids(self) -> set[EventId]:
        """Ids of all applied operations (the root is initial state, not an op)."""
        out = set(self.vertices)
        out.discard(self.root)
        return out

    def precondition_holds(self, op: AddOperation) -> bool:
        """Delivery precondition: every parent is already in the state."""
        return all(p in self.vertices for p in op.vertex.parents)

    # -- effector ----------------------------------------------------------

    def apply_add(self, op: AddOperation) -> bool:
        """Union the vertex and its parent edges into the graph.

        Returns True when the vertex is new, False when it was already
        present (idempotent re-delivery).  Raises PreconditionError when a
        parent is missing; callers should route through `ingest` instead of
        calling this on unchecked input.
        """
        v = op.vertex
        if v.id in self.vertices:
            return False
        if not v.parents:
            raise PreconditionError("add operation must reference at least one parent")
        if len(set(v.parents)) != len(v.parents):
            raise PreconditionError("duplicate parent ids")
        missing = [p for p in v.parents if p not in self.vertices]
        if missing:
            raise PreconditionError(f"missing parents: {[m.hex()[:16] for m in missing]}")
        self.vertices[v.id] = v
        for p in v.parents:
            self.edges.add((v.id, p))
            self._extremities.discard(p)
        self._extremities.add(v.id)
        return True

    # -- structural checks -------------------------------------------------

    def is_rooted_dag(self) -> bool:
        """Explicit traversal check: single root, acyclic, weakly connected.

        Recomputes everything from the vertex and edge sets, on purpose
        ignoring the incremental extremity bookkeeping, so it can catch
        corruption of that bookkeeping.
        """
        ids = set(self.vertices)
        if not ids:
            return False
        for child, parent in self.edges:
            if child not in ids or parent not in ids:
                return False
        outdeg = dict.fromkeys(ids, 0)
        incoming: dict[EventId, list[EventId]] = {w: [] for w in ids}
        for child, parent in self.edges:
            outdeg[child] += 1
            incoming[parent].append(child)
        roots = [w for w, deg in outdeg.items() if deg == 0]
        if len(roots) != 1:
            return False
        # Kahn's algorithm on child->parent edges: all vertices must drain.
        remaining = dict(outdeg)
        stack = [w for w, deg in remaining.items() if deg == 0]
        seen = 0
        while stack:
            w = stack.pop()
            seen += 1
            for child in incoming[w]:
                remaining[child] -= 1
                if remaining[child] == 0:
                    stack.append(child)
        if seen != len(ids):
            return False
        # Weak connectivity over undirected adjacency.
        adj: dict[EventId, list[EventId]] = {w: [] for w in ids}
        for child, parent in self.edges:
            adj[child].append(parent)
            adj[parent].append(child)
        start = roots[0]
        visited = {start}
        frontier = [start]
        while frontier:
            w = frontier.pop()
            for nb in adj[w]:
                if nb not in visited:
                    visited.add(nb)
                    frontier.append(nb)
        return len(visited) == len(ids)

    def state_digest(self) -> bytes:
        """SHA-256 over sorted vertex id bytes, then sorted (child, parent) id pairs."""
        h = hashlib.sha256()
        for w in sorted(self.vertices):
            h.update(w)
        for child, parent in sorted(self.edges):
            h.update(child)
            h.update(parent)
        return h.digest()

    def copy(self) -> "MegState":
        dup = object.__new__(MegState)
        dup.root = self.root
        dup.vertices = dict(self.vertices)
        dup.edges = set(self.edges)
        dup._extremities = set(self._extremities)
        return dup


def init(room: str = DEFAULT_ROOM) -> MegState:
    """Fresh state holding only the root vertex derived from the room identifier.

    The root id is a pure function of the room string, so replicas agree on
    the initial state without communicating.
    """
    payload = EventPayload(kind="create", body=room.encode("utf-8"))
    rid = compute_event_id(payload.kind, payload.body, ROOT_SENDER, 0, ())
    return MegState(Vertex(payload=payload, id=rid, parents=(), sender=ROOT_SENDER, seq=0))


def select_parents(
    extremities: Iterable[EventId],
    d: int,
    required: Iterable[EventId],
    rng: Random,
) -> list[EventId]:
    """Choose parent ids for a new event.

    All required ids are always included.  If required plus extremities fit
    within the cap d, everything is taken; otherwise the required ids are
    topped up with a uniformly random subset of the remaining extremities to
    max(d, len(required)) parents.  Sampling runs over a sorted pool so the
    result is a pure function of the rng state.
    """
    if d < 2:
        raise ValueError("parent cap d must be at least 2")
    ext = set(extremities)
    if not ext:
        raise EmptyExtremitiesError("cannot select parents from empty extremity set")
    req = sorted(set(required))
    pool = sorted(ext - set(req))
    if len(req) + len(pool) <= d:
        return req + pool
    fill = max(d, len(req)) - len(req)
    return req + (rng.sample(pool, fill) if fill else [])


def generate_add(
    state: MegState,
    payload: EventPayload,
    d: int,
    required: Iterable[EventId],
    rng: Random,
    sender: ReplicaId,
    seq: int,
) -> AddOperation:
    """Generator half of add: pick parents, derive the id, leave state untouched."""
    required = list(required)
    for w in required:
        if not state.lookup(w):
            raise UnknownVertexError(f"required parent {w.hex()[:16]} is unknown")
    parents = select_parents(state.get_extremities(), d, required, rng)
    vid = compute_event_id(payload.kind, payload.body, sender, seq, parents)
    return AddOperation(
        Vertex(payload=payload, id=vid, parents=tuple(parents), sender=sender, seq=seq)
    )


class PendingBuffer:
    """Operations whose parents have not all arrived yet.

    Indexed by the missing parent ids; an operation is stored once no matter
    how many parents are outstanding.  An optional cap bounds memory under
    hostile input: when full, new arrivals are counted and discarded.  The
    eviction choice is pragmatic, nothing in the replication scheme depends
    on it.
    """

    def __init__(self, max_ops: int | None = None) -> None:
        self._ops: dict[EventId, AddOperation] = {}
        self.max_ops = max_ops
        self.dropped = 0

    def __len__(self) -> int:
        return len(self._ops)

    def __contains__(self, op_id: EventId) -> bool:
        return op_id in self._ops

    def add(self, op: AddOperation) -> bool:
        if op.vertex.id in self._ops:
            return True
        if self.max_ops is not None and len(self._ops) >= self.max_ops:
            self.dropped += 1
            return False
        self._ops[op.vertex.id] = op
        return True

    def remove(self, op_id: EventId) -> None:
        self._ops.pop(op_id, None)

    def operations(self) -> list[AddOperation]:
        return [self._ops[k] for k in sorted(self._ops)]

    def ready_ops(self, state: MegState) -> list[AddOperation]:
        """Buffered ops whose precondition now holds, ascending by event id."""
        return [
            self._ops[k]
            for k in sorted(self._ops)
            if state.precondition_holds(self._ops[k])
        ]

    def missing_parent_ids(self, state: MegState) -> set[EventId]:
        out: set[EventId] = set()
        for op in self._ops.values():
            for p in op.vertex.parents:
                if not state.lookup(p) and p not in self._ops:
                    out.add(p)
        return out


def ingest(state: MegState, buffer: PendingBuffer, op: AddOperation) -> list[EventId]:
    """Apply an operation if its parents are present, else buffer it.

    After a successful apply, drains the buffer to fixpoint: any buffered
    operation whose precondition became true is applied, in ascending event
    id order for determinism.  Returns the ids applied by this call; a
    re-delivered duplicate applies nothing.
    """
    applied: list[EventId] = []
    if not state.precondition_holds(op):
        buffer.add(op)
        return applied
    if state.apply_add(op):
        applied.append(op.vertex.id)
    while True:
        ready = buffer.ready_ops(state)
        if not ready:
            break
        for pending in ready:
            buffer.remove(pending.vertex.id)
            if state.apply_add(pending):
                applied.append(pending.vertex.id)
    return applied
