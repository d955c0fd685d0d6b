"""Quality metrics for compiled circuits.

All counters are exact integers; ratios are derived from them at the
end, so repeated runs on the same inputs report identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backend import ChipletBackend
from .ir import CircuitDag, GateKind
from .route import CompiledCircuit


@dataclass(frozen=True)
class CompileStats:
    """Headline numbers comparing the compiled circuit to its source."""

    n_virtual: int
    n_physical: int
    depth_original: int
    depth_compiled: int
    depth_ratio: float
    gates_original: int
    gates_compiled: int
    two_qubit_original: int
    two_qubit_compiled: int
    gate_overhead: float
    cx_expanded_two_qubit: int
    cx_expanded_overhead: float
    swap_count: int
    inter_chiplet_two_qubit: int
    chiplets_used: int
    utilization: float
    patch_violations: int
    wall_time_s: float | None = None

    def as_dict(self) -> dict:
        out = {
            "n_virtual": self.n_virtual,
            "n_physical": self.n_physical,
            "depth_original": self.depth_original,
            "depth_compiled": self.depth_compiled,
            "depth_ratio": self.depth_ratio,
            "gates_original": self.gates_original,
            "gates_compiled": self.gates_compiled,
            "two_qubit_original": self.two_qubit_original,
            "two_qubit_compiled": self.two_qubit_compiled,
            "gate_overhead": self.gate_overhead,
            "cx_expanded_two_qubit": self.cx_expanded_two_qubit,
            "cx_expanded_overhead": self.cx_expanded_overhead,
            "swap_count": self.swap_count,
            "inter_chiplet_two_qubit": self.inter_chiplet_two_qubit,
            "chiplets_used": self.chiplets_used,
            "utilization": self.utilization,
            "patch_violations": self.patch_violations,
        }
        if self.wall_time_s is not None:
            out["wall_time_s"] = self.wall_time_s
        return out


def count_two_qubit(dag: CircuitDag) -> int:
    return sum(1 for g in dag.nodes if g.kind.is_two_qubit)


def _ratio(num: int, den: int) -> float:
    if den == 0:
        return 1.0 if num == 0 else float("inf")
    return num / den


def stats(
    original: CircuitDag,
    compiled: CompiledCircuit,
    backend: ChipletBackend,
    *,
    util_all_chiplets: bool = False,
    wall_time_s: float | None = None,
) -> CompileStats:
    """Measure ``compiled`` against ``original``.

    Utilization divides mapped qubits by the capacity of the chiplets
    that hold at least one partition, or of the whole device when
    ``util_all_chiplets`` is set.
    """
    two_orig = count_two_qubit(original)
    two_comp = count_two_qubit(compiled.dag)
    gates_orig = sum(1 for g in original.nodes if g.kind is not GateKind.BARRIER)
    gates_comp = sum(1 for g in compiled.dag.nodes if g.kind is not GateKind.BARRIER)

    inter = 0
    for g in compiled.dag.nodes:
        if g.kind.is_two_qubit:
            a, b = g.qubits
            if backend.chip_of(a) != backend.chip_of(b):
                inter += 1
    traversed = sum(compiled.link_traversals.values())
    assert inter == traversed, (
        f"cross-chiplet gate count {inter} disagrees with link traversals {traversed}"
    )

    used_chips = {coord.chip for coord in compiled.mapping.values()}
    denom_chips = backend.n_chiplets if util_all_chiplets else max(1, len(used_chips))
    mapped = len(compiled.mapping)

    depth_orig = original.depth()
    depth_comp = compiled.dag.depth()
    return CompileStats(
        n_virtual=original.n_virt,
        n_physical=backend.n_qubits,
        depth_original=depth_orig,
        depth_compiled=depth_comp,
        depth_ratio=_ratio(depth_comp, depth_orig),
        gates_original=gates_orig,
        gates_compiled=gates_comp,
        two_qubit_original=two_orig,
        two_qubit_compiled=two_comp,
        gate_overhead=_ratio(two_comp, two_orig),
        cx_expanded_two_qubit=two_comp + 2 * compiled.swap_count,
        cx_expanded_overhead=_ratio(two_comp + 2 * compiled.swap_count, two_orig),
        swap_count=compiled.swap_count,
        inter_chiplet_two_qubit=inter,
        chiplets_used=len(used_chips),
        utilization=mapped / (backend.chip_area * denom_chips),
        patch_violations=compiled.patch_violations,
        wall_time_s=wall_time_s,
    )
