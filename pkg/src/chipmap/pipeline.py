"""Five-stage compilation pipeline.

partition -> sequence -> global map -> local map -> route, with
per-stage wall times and a metrics report at the end. Every stage is
also callable on its own; this module only wires them together.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .backend import ChipletBackend
from .errors import ValidationError
from .gmap import Placement, global_map
from .ir import CircuitInput, PartitionRegistry, gates_to_json, interaction_graph
from .lmap import local_map
from .metrics import CompileStats, stats
from .partition import (
    DEFAULT_DETECTION_BUDGET,
    estimate_partition_count,
    kway_partition,
    predefined_partitions,
)
from .route import CompiledCircuit, RoutingConfig, route_circuit
from .sequence import SequencedOrder, build_partition_graph, sequence_registry

log = logging.getLogger(__name__)

_PARTITION_MODES = ("auto", "predefined", "detect")
_PLACEMENT_MODES = ("center", "size-aware")
_REF_MODES = ("weight", "order")


@dataclass(frozen=True)
class CompileOptions:
    """Knobs for a full compilation run.

    ``partitions="auto"`` adopts circuit-declared patches when present
    and falls back to community detection; the other values force one
    source. ``use_hints`` controls whether declared layout hints steer
    relative placement.
    """

    partitions: str = "auto"
    imbalance: float = 0.03
    detection_budget: int = DEFAULT_DETECTION_BUDGET
    placement: str = "center"
    relative_ref: str = "weight"
    use_hints: bool = True
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    util_all_chiplets: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.partitions not in _PARTITION_MODES:
            raise ValidationError(f"partitions must be one of {_PARTITION_MODES}")
        if self.placement not in _PLACEMENT_MODES:
            raise ValidationError(f"placement must be one of {_PLACEMENT_MODES}")
        if self.relative_ref not in _REF_MODES:
            raise ValidationError(f"relative_ref must be one of {_REF_MODES}")
        if self.imbalance < 0:
            raise ValidationError("imbalance must be nonnegative")
        if self.detection_budget < 1:
            raise ValidationError("detection_budget must be positive")


@dataclass
class CompileResult:
    compiled: CompiledCircuit
    registry: PartitionRegistry
    placements: dict[int, Placement]
    order: SequencedOrder
    stats: CompileStats
    timings: dict[str, float]


def compile_circuit(
    circuit: CircuitInput,
    backend: ChipletBackend,
    options: CompileOptions | None = None,
) -> CompileResult:
    """Run the whole pipeline on one circuit and backend."""
    opts = options or CompileOptions()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()

    t0 = t_start
    if opts.partitions == "predefined" and circuit.partitions is None:
        raise ValidationError("circuit declares no partitions but predefined mode was forced")
    if circuit.partitions is not None and opts.partitions != "detect":
        registry = predefined_partitions(circuit.dag, circuit.partitions, circuit.geometry)
    else:
        if opts.partitions == "auto" and circuit.partitions is None:
            log.info("no declared partitions, detecting communities")
        g = interaction_graph(circuit.dag)
        k, sizes = estimate_partition_count(g, opts.detection_budget)
        registry = kway_partition(g, k, sizes, opts.imbalance, opts.seed)
    timings["partition"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pg = build_partition_graph(registry, circuit.dag)
    registry, order = sequence_registry(registry, pg)
    timings["sequence"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    hints = circuit.layout_hints if opts.use_hints else None
    registry, placements, _bins = global_map(
        backend,
        order,
        registry,
        mode=opts.placement,
        relative_ref=opts.relative_ref,
        pg=pg,
        hints=hints,
    )
    timings["global_map"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    registry = local_map(backend, registry, placements)
    timings["local_map"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    compiled = route_circuit(circuit.dag, registry, backend, opts.routing)
    timings["route"] = time.perf_counter() - t0

    timings["total"] = time.perf_counter() - t_start
    report = stats(
        circuit.dag,
        compiled,
        backend,
        util_all_chiplets=opts.util_all_chiplets,
        wall_time_s=timings["total"],
    )
    return CompileResult(
        compiled=compiled,
        registry=registry,
        placements=placements,
        order=order,
        stats=report,
        timings=timings,
    )


def result_to_json(result: CompileResult, backend: ChipletBackend) -> dict:
    """Serialize a compilation result to the compiled-circuit document."""
    compiled = result.compiled

    def pairs(counts: dict[tuple[int, int], int]) -> list[dict]:
        return [
            {"a": a, "b": b, "count": n} for (a, b), n in sorted(counts.items())
        ]

    return {
        "schema_version": 1,
        "n_physical": backend.n_qubits,
        "gates": gates_to_json(compiled.dag.nodes),
        "mapping": {
            str(v): {"chip": c.chip, "x": c.x, "y": c.y}
            for v, c in sorted(compiled.mapping.items())
        },
        "placements": [
            {"pid": p.pid, "chip": p.chip, "x": p.x, "y": p.y, "w": p.w, "h": p.h}
            for p in (result.placements[pid] for pid in sorted(result.placements))
        ],
        "link_usage": pairs(compiled.link_usage),
        "link_traversals": pairs(compiled.link_traversals),
        "stats": result.stats.as_dict(),
        "timings": {k: round(v, 6) for k, v in result.timings.items()},
    }
