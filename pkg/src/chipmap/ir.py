"""Logical IR: gate dependency DAG plus the partition registry.

Contains:
- GateKind / GateNode: the gate vocabulary (unknown names load as opaque)
- CircuitDag: immutable DAG built from per-qubit last-writer chains
- InteractionGraph: weighted qubit graph counting two-qubit gates
- Partition / PartitionRegistry / Stage: patch metadata enriched stage by
  stage; every enrichment returns a new registry and never rewrites a
  field that was already set
- circuit_from_json / gates_to_json: the circuit interchange format

The DAG and the registry travel together through the pipeline: the DAG
never changes after construction, the registry only gains fields.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Iterator, Mapping, Sequence

from .errors import StageError, ValidationError

if TYPE_CHECKING:
    from .backend import PhysCoord


class GateKind(Enum):
    OPAQUE_1Q = "op1"
    OPAQUE_2Q = "op2"
    CNOT = "cx"
    SWAP = "swap"
    MEASURE = "measure"
    RESET = "reset"
    BARRIER = "barrier"

    @property
    def is_two_qubit(self) -> bool:
        return self in (GateKind.OPAQUE_2Q, GateKind.CNOT, GateKind.SWAP)


# Recognized op names; anything else becomes opaque by arity.
_KIND_BY_NAME = {
    "cx": GateKind.CNOT,
    "cnot": GateKind.CNOT,
    "swap": GateKind.SWAP,
    "measure": GateKind.MEASURE,
    "m": GateKind.MEASURE,
    "reset": GateKind.RESET,
    "barrier": GateKind.BARRIER,
}


@dataclass(frozen=True)
class GateNode:
    """One gate. ``qubits`` are virtual ids before routing, physical after."""

    kind: GateKind
    qubits: tuple[int, ...]
    tag: str = ""

    def __post_init__(self) -> None:
        n = len(self.qubits)
        if self.kind.is_two_qubit:
            if n != 2 or self.qubits[0] == self.qubits[1]:
                raise ValidationError(
                    f"{self.kind.value} needs two distinct operands, got {self.qubits}"
                )
        elif self.kind is GateKind.BARRIER:
            if n == 0 or len(set(self.qubits)) != n:
                raise ValidationError(f"barrier operands must be nonempty and distinct: {self.qubits}")
        else:
            if n != 1:
                raise ValidationError(f"{self.kind.value} takes one operand, got {self.qubits}")


def cx(a: int, b: int, tag: str = "") -> GateNode:
    return GateNode(GateKind.CNOT, (a, b), tag)


def swap(a: int, b: int, tag: str = "") -> GateNode:
    return GateNode(GateKind.SWAP, (a, b), tag)


def measure(q: int, tag: str = "") -> GateNode:
    return GateNode(GateKind.MEASURE, (q,), tag)


def reset(q: int, tag: str = "") -> GateNode:
    return GateNode(GateKind.RESET, (q,), tag)


def barrier(*qs: int, tag: str = "") -> GateNode:
    return GateNode(GateKind.BARRIER, tuple(qs), tag)


def op1(q: int, name: str = "u") -> GateNode:
    return GateNode(GateKind.OPAQUE_1Q, (q,), name)


def op2(a: int, b: int, name: str = "u2") -> GateNode:
    return GateNode(GateKind.OPAQUE_2Q, (a, b), name)


class CircuitDag:
    """Gate list plus dependency edges from per-qubit last-writer chains.

    Node ids are indices into ``nodes``; the list order is a topological
    order by construction. Barriers depend on, and are depended on by,
    every listed operand, which keeps round structure intact.
    """

    __slots__ = ("nodes", "edges", "n_virt", "_preds", "_succs")

    def __init__(
        self,
        nodes: tuple[GateNode, ...],
        edges: tuple[tuple[int, int], ...],
        n_virt: int,
        preds: tuple[tuple[int, ...], ...],
        succs: tuple[tuple[int, ...], ...],
    ):
        self.nodes = nodes
        self.edges = edges
        self.n_virt = n_virt
        self._preds = preds
        self._succs = succs

    def __len__(self) -> int:
        return len(self.nodes)

    def preds(self, i: int) -> tuple[int, ...]:
        return self._preds[i]

    def succs(self, i: int) -> tuple[int, ...]:
        return self._succs[i]

    def two_qubit_nodes(self) -> Iterator[tuple[int, GateNode]]:
        for i, g in enumerate(self.nodes):
            if g.kind.is_two_qubit:
                yield i, g

    def depth(self) -> int:
        """Critical path length with unit gate weight; barriers weigh zero."""
        finish = [0] * len(self.nodes)
        best = 0
        for i, g in enumerate(self.nodes):
            w = 0 if g.kind is GateKind.BARRIER else 1
            longest = 0
            for p in self._preds[i]:
                if finish[p] > longest:
                    longest = finish[p]
            finish[i] = w + longest
            if finish[i] > best:
                best = finish[i]
        return best


def build_dag(gates: Sequence[GateNode], n_virt: int) -> CircuitDag:
    """Build the dependency DAG for ``gates`` over ``n_virt`` virtual qubits.

    Each gate depends on the previous gate touching any of its operands;
    parallel edges between the same node pair are collapsed.
    """
    if n_virt < 0:
        raise ValidationError(f"n_virt must be nonnegative, got {n_virt}")
    last: list[int | None] = [None] * n_virt
    edges: list[tuple[int, int]] = []
    preds: list[tuple[int, ...]] = []
    succs: list[list[int]] = [[] for _ in gates]
    for i, g in enumerate(gates):
        for q in g.qubits:
            if not 0 <= q < n_virt:
                raise ValidationError(f"gate {i}: operand {q} out of range for n_virt={n_virt}")
        srcs = sorted({last[q] for q in g.qubits if last[q] is not None})
        for s in srcs:
            edges.append((s, i))
            succs[s].append(i)
        preds.append(tuple(srcs))
        for q in g.qubits:
            last[q] = i
    return CircuitDag(
        tuple(gates),
        tuple(edges),
        n_virt,
        tuple(preds),
        tuple(tuple(s) for s in succs),
    )


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected qubit graph; an edge weight counts spanning 2q gates."""

    nodes: tuple[int, ...]
    weights: dict[tuple[int, int], int]  # keys (a, b) with a < b

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def total_weight(self) -> int:
        return sum(self.weights.values())


def interaction_graph(dag: CircuitDag) -> InteractionGraph:
    weights: dict[tuple[int, int], int] = {}
    for _, g in dag.two_qubit_nodes():
        a, b = g.qubits
        key = (a, b) if a < b else (b, a)
        weights[key] = weights.get(key, 0) + 1
    return InteractionGraph(tuple(range(dag.n_virt)), weights)


class Stage(IntEnum):
    """Registry enrichment trajectory; each stage adds one field."""

    PARTITIONED = 0  # qubit sets and boxes
    SEQUENCED = 1    # + placement order
    PLACED = 2       # + chiplet assignment
    MAPPED = 3       # + physical coordinates


@dataclass(frozen=True, eq=False)
class Partition:
    """One patch: qubit set, bounding box, and placement data as it lands.

    ``cells`` holds declared (row, col) positions per qubit when the
    circuit shipped explicit geometry; otherwise the local mapper fills
    the box row-major. ``order_index``, ``chiplet``, and ``coords`` are
    set by the sequencing, global mapping, and local mapping stages.
    """

    pid: int
    qubits: frozenset[int]
    width: int
    height: int
    cells: Mapping[int, tuple[int, int]] | None = None
    order_index: int | None = None
    chiplet: int | None = None
    coords: Mapping[int, "PhysCoord"] | None = None

    def __post_init__(self) -> None:
        if not self.qubits:
            raise ValidationError(f"partition {self.pid} has no qubits")
        if self.width < 1 or self.height < 1 or self.width * self.height < len(self.qubits):
            raise ValidationError(
                f"partition {self.pid}: box {self.width}x{self.height} cannot hold "
                f"{len(self.qubits)} qubits"
            )
        if self.cells is not None:
            if set(self.cells) != self.qubits:
                raise ValidationError(f"partition {self.pid}: cell map must cover exactly its qubits")
            seen: set[tuple[int, int]] = set()
            for q, (r, c) in self.cells.items():
                if not (0 <= r < self.height and 0 <= c < self.width):
                    raise ValidationError(
                        f"partition {self.pid}: qubit {q} cell ({r}, {c}) outside "
                        f"{self.width}x{self.height} box"
                    )
                if (r, c) in seen:
                    raise ValidationError(f"partition {self.pid}: duplicate cell ({r}, {c})")
                seen.add((r, c))

    @property
    def size(self) -> int:
        return len(self.qubits)


@dataclass(frozen=True)
class PartitionRegistry:
    """All partitions of one circuit, at a common enrichment stage."""

    partitions: tuple[Partition, ...]
    stage: Stage = Stage.PARTITIONED

    def __post_init__(self) -> None:
        ids = [p.pid for p in self.partitions]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate partition ids")
        seen: set[int] = set()
        for p in self.partitions:
            overlap = seen & p.qubits
            if overlap:
                raise ValidationError(f"qubits {sorted(overlap)} appear in more than one partition")
            seen |= p.qubits

    def __iter__(self) -> Iterator[Partition]:
        return iter(self.partitions)

    def __len__(self) -> int:
        return len(self.partitions)

    def by_id(self, pid: int) -> Partition:
        for p in self.partitions:
            if p.pid == pid:
                return p
        raise KeyError(pid)

    def qubit_map(self) -> dict[int, int]:
        """Map each covered virtual qubit to its partition id."""
        out: dict[int, int] = {}
        for p in self.partitions:
            for q in p.qubits:
                out[q] = p.pid
        return out

    def covered_qubits(self) -> frozenset[int]:
        out: set[int] = set()
        for p in self.partitions:
            out |= p.qubits
        return frozenset(out)

    def enrich(self, target: Stage, payload: Mapping[int, object]) -> "PartitionRegistry":
        """Return a copy advanced to ``target`` with the stage's field filled.

        ``payload`` maps partition id to the new value: placement order for
        SEQUENCED, chiplet id for PLACED, qubit coordinate maps for MAPPED.
        Stage skips and regressions are rejected.
        """
        if target != self.stage + 1:
            raise StageError(
                f"registry at stage {self.stage.name} cannot be enriched to {Stage(target).name}"
            )
        missing = [p.pid for p in self.partitions if p.pid not in payload]
        if missing:
            raise ValidationError(f"enrichment payload missing partitions {missing}")
        if target is Stage.SEQUENCED:
            parts = tuple(replace(p, order_index=int(payload[p.pid])) for p in self.partitions)  # type: ignore[call-overload]
        elif target is Stage.PLACED:
            parts = tuple(replace(p, chiplet=int(payload[p.pid])) for p in self.partitions)  # type: ignore[call-overload]
        else:
            fixed = []
            for p in self.partitions:
                coords = dict(payload[p.pid])  # type: ignore[call-overload]
                if set(coords) != p.qubits:
                    raise ValidationError(
                        f"partition {p.pid}: coordinate map must cover exactly its qubits"
                    )
                fixed.append(replace(p, coords=coords))
            parts = tuple(fixed)
        return PartitionRegistry(parts, Stage(target))


@dataclass(frozen=True)
class VirtualQubit:
    """Loader-side view of one circuit qubit and its declared layout."""

    qid: int
    partition_hint: int | None = None
    local_pos: tuple[int, int] | None = None  # (row, col) inside its patch


@dataclass(frozen=True)
class PartitionGeometry:
    width: int
    height: int
    cells: dict[int, tuple[int, int]]  # qubit -> (row, col)


@dataclass(frozen=True)
class LayoutHint:
    direction: str  # "below" | "right"
    ref: int        # partition to sit next to


@dataclass(frozen=True)
class CircuitInput:
    """Parsed circuit document: DAG plus optional partition declarations."""

    dag: CircuitDag
    qubits: tuple[VirtualQubit, ...]
    partitions: dict[int, int] | None = None              # qubit -> partition id
    geometry: dict[int, PartitionGeometry] | None = None  # partition id -> box
    layout_hints: dict[int, LayoutHint] | None = None     # partition id -> hint


def _parse_gate(i: int, obj: object) -> GateNode:
    if not isinstance(obj, Mapping):
        raise ValidationError(f"gates[{i}]: expected an object, got {type(obj).__name__}")
    op = obj.get("op")
    qs = obj.get("qubits")
    if not isinstance(op, str) or not op:
        raise ValidationError(f"gates[{i}]: missing op name")
    if not isinstance(qs, Sequence) or isinstance(qs, (str, bytes)) or not all(
        isinstance(q, int) and not isinstance(q, bool) for q in qs
    ):
        raise ValidationError(f"gates[{i}]: qubits must be a list of ints")
    tag = obj.get("tag", "")
    if not isinstance(tag, str):
        raise ValidationError(f"gates[{i}]: tag must be a string")
    kind = _KIND_BY_NAME.get(op.lower())
    if kind is None:
        if len(qs) == 1:
            kind = GateKind.OPAQUE_1Q
        elif len(qs) == 2:
            kind = GateKind.OPAQUE_2Q
        else:
            raise ValidationError(f"gates[{i}]: unknown op {op!r} with arity {len(qs)}")
        if not tag:
            tag = op  # keep the original name on opaque gates
    try:
        return GateNode(kind, tuple(qs), tag)
    except ValidationError as exc:
        raise ValidationError(f"gates[{i}]: {exc}") from None


def circuit_from_json(obj: Mapping) -> CircuitInput:
    """Parse a circuit document (already JSON-decoded) into a CircuitInput."""
    if not isinstance(obj, Mapping):
        raise ValidationError("circuit document must be an object")
    n = obj.get("n_qubits")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValidationError("n_qubits must be a nonnegative integer")
    raw_gates = obj.get("gates", [])
    if not isinstance(raw_gates, Sequence) or isinstance(raw_gates, (str, bytes)):
        raise ValidationError("gates must be a list")
    gates = [_parse_gate(i, g) for i, g in enumerate(raw_gates)]
    dag = build_dag(gates, n)

    partitions: dict[int, int] | None = None
    if "partitions" in obj and obj["partitions"] is not None:
        raw = obj["partitions"]
        if not isinstance(raw, Mapping):
            raise ValidationError("partitions must map qubit id to partition id")
        partitions = {}
        for k, v in raw.items():
            q = _int_key("partitions", k)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValidationError(f"partitions[{k}]: partition id must be an int")
            if not 0 <= q < n:
                raise ValidationError(f"partitions[{k}]: qubit out of range")
            partitions[q] = v

    geometry: dict[int, PartitionGeometry] | None = None
    if "partition_geometry" in obj and obj["partition_geometry"] is not None:
        raw = obj["partition_geometry"]
        if not isinstance(raw, Mapping):
            raise ValidationError("partition_geometry must be an object")
        geometry = {}
        for k, v in raw.items():
            pid = _int_key("partition_geometry", k)
            if not isinstance(v, Mapping):
                raise ValidationError(f"partition_geometry[{k}]: expected an object")
            try:
                width, height = int(v["width"]), int(v["height"])
            except (KeyError, TypeError, ValueError):
                raise ValidationError(f"partition_geometry[{k}]: needs integer width and height") from None
            cells: dict[int, tuple[int, int]] = {}
            raw_cells = v.get("locals", {})
            if not isinstance(raw_cells, Mapping):
                raise ValidationError(f"partition_geometry[{k}]: locals must be an object")
            for qk, pos in raw_cells.items():
                q = _int_key(f"partition_geometry[{k}].locals", qk)
                if (
                    not isinstance(pos, Sequence)
                    or len(pos) != 2
                    or not all(isinstance(c, int) and not isinstance(c, bool) for c in pos)
                ):
                    raise ValidationError(
                        f"partition_geometry[{k}].locals[{qk}]: expected [row, col]"
                    )
                cells[q] = (pos[0], pos[1])
            geometry[pid] = PartitionGeometry(width, height, cells)

    hints: dict[int, LayoutHint] | None = None
    if "layout_hints" in obj and obj["layout_hints"] is not None:
        raw = obj["layout_hints"]
        if not isinstance(raw, Mapping):
            raise ValidationError("layout_hints must be an object")
        hints = {}
        for k, v in raw.items():
            pid = _int_key("layout_hints", k)
            if not isinstance(v, Mapping) or v.get("dir") not in ("below", "right"):
                raise ValidationError(f"layout_hints[{k}]: dir must be 'below' or 'right'")
            ref = v.get("ref")
            if not isinstance(ref, int) or isinstance(ref, bool):
                raise ValidationError(f"layout_hints[{k}]: ref must be a partition id")
            hints[pid] = LayoutHint(v["dir"], ref)

    qubits = []
    for q in range(n):
        hint = partitions.get(q) if partitions else None
        pos = None
        if hint is not None and geometry and hint in geometry:
            pos = geometry[hint].cells.get(q)
        qubits.append(VirtualQubit(q, hint, pos))
    return CircuitInput(dag, tuple(qubits), partitions, geometry, hints)


def _int_key(where: str, key: object) -> int:
    try:
        return int(key)  # JSON object keys arrive as strings
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: key {key!r} is not an integer") from None


def gates_to_json(nodes: Sequence[GateNode]) -> list[dict]:
    """Serialize gates back to the interchange form."""
    out = []
    for g in nodes:
        if g.kind in (GateKind.OPAQUE_1Q, GateKind.OPAQUE_2Q):
            op = g.tag or g.kind.value
            entry = {"op": op, "qubits": list(g.qubits)}
        else:
            entry = {"op": g.kind.value, "qubits": list(g.qubits)}
            if g.tag:
                entry["tag"] = g.tag
        out.append(entry)
    return out
