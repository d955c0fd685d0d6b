"""Noise- and congestion-aware routing onto the fixed physical mapping.

Gates whose operands are already coupled pass through untouched. A
non-adjacent pair gets a shortest coupling path (breadth-first layers,
ties resolved toward the lexicographically smallest predecessor) and a
bifurcated SWAP chain: both tokens walk toward the middle edge, the
source side taking the extra hop on uneven splits. By default mirrored
un-SWAPs restore the mapping after every routed gate; persistent-SWAP
mode leaves tokens where they land.

Inter-chiplet hops pick a link by cost

    |P| + alpha * eps + beta * usage

over the k candidate links nearest the unweighted-shortest crossing,
scanning one boundary at a time along the chiplet-grid route. Selecting
a link increments its usage counter, which the beta term feeds back as
congestion pressure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .backend import ChipletBackend, CouplingGraph, InterChipLink, PhysCoord, coupling_graph
from .errors import NoRouteError, StrictPatchViolationError, ValidationError
from .ir import CircuitDag, GateKind, GateNode, PartitionRegistry, Stage, build_dag
from .lmap import flat_mapping

log = logging.getLogger(__name__)

# policy name -> (alpha, beta)
_POLICIES = {
    "basic": (0.0, 0.0),
    "focus": (1e4, 0.0),
    "tradeoff": (1e3, 1.0),
}


@dataclass(frozen=True)
class RoutingConfig:
    """Link-selection weights and routing behavior switches.

    ``alpha`` scales the link error rate (raw physical rate, not a log),
    ``beta`` the link usage counter. The policy label must match the
    weights: basic ignores both terms, focus weighs only noise, tradeoff
    weighs noise and congestion.
    """

    alpha: float = 0.0
    beta: float = 0.0
    k_nearest: int = 3
    policy: str = "basic"
    restore_mapping: bool = True
    strict_patches: bool = False

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("alpha and beta must be nonnegative")
        if self.k_nearest < 1:
            raise ValidationError("k_nearest must be >= 1")
        if self.policy not in _POLICIES:
            raise ValidationError(f"unknown routing policy {self.policy!r}")
        ok = {
            "basic": self.alpha == 0 and self.beta == 0,
            "focus": self.alpha > 0 and self.beta == 0,
            "tradeoff": self.alpha > 0 and self.beta > 0,
        }[self.policy]
        if not ok:
            raise ValidationError(
                f"policy {self.policy!r} is inconsistent with alpha={self.alpha}, "
                f"beta={self.beta}"
            )

    @classmethod
    def from_policy(
        cls,
        policy: str,
        *,
        alpha: float | None = None,
        beta: float | None = None,
        k_nearest: int = 3,
        restore_mapping: bool = True,
        strict_patches: bool = False,
    ) -> "RoutingConfig":
        if policy not in _POLICIES:
            raise ValidationError(f"unknown routing policy {policy!r}")
        da, db = _POLICIES[policy]
        return cls(
            alpha=da if alpha is None else alpha,
            beta=db if beta is None else beta,
            k_nearest=k_nearest,
            policy=policy,
            restore_mapping=restore_mapping,
            strict_patches=strict_patches,
        )


def path_cost(path: Sequence[int], link: InterChipLink, cfg: RoutingConfig) -> float:
    """Cost of routing over ``path`` through ``link``: |P| + a*eps + b*usage."""
    if len(path) < 1:
        raise ValidationError("path must contain at least one qubit")
    return (len(path) - 1) + cfg.alpha * link.eps + cfg.beta * link.usage


@dataclass
class CompiledCircuit:
    """Routing output: the physical-gate DAG plus bookkeeping.

    ``dag`` runs over global physical qubit ids. ``mapping`` is the fixed
    coordinate assignment the circuit starts from (and, with
    restore_mapping, ends at). ``link_usage`` counts link selections,
    ``link_traversals`` emitted two-qubit gates per link.
    """

    dag: CircuitDag
    mapping: dict[int, PhysCoord]
    swap_count: int
    link_usage: dict[tuple[int, int], int]
    link_traversals: dict[tuple[int, int], int]
    patch_violations: int
    restore_mapping: bool


def _bfs_dist(graph: CouplingGraph, start: int, chip: int, chip_area: int) -> dict[int, int]:
    """Hop distances from ``start`` within one chiplet."""
    dist = {start: 0}
    frontier = [start]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for w in graph.neighbors(u):
                if w not in dist and w // chip_area == chip:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def _walk_back(
    graph: CouplingGraph, dist: dict[int, int], src: int, dst: int, chip: int, chip_area: int
) -> list[int]:
    """Reconstruct the src -> dst path from a distance map rooted at src.

    At every step the smallest eligible predecessor id wins, which pins
    the path down uniquely.
    """
    path = [dst]
    cur = dst
    while cur != src:
        step = None
        want = dist[cur] - 1
        for u in graph.neighbors(cur):  # neighbors are sorted ascending
            if u // chip_area == chip and dist.get(u) == want:
                step = u
                break
        assert step is not None, "distance map is inconsistent"
        path.append(step)
        cur = step
    path.reverse()
    return path


def _chip_route(backend: ChipletBackend, chip_a: int, chip_b: int) -> list[int]:
    """Chiplets visited on a shortest grid route, columns first."""
    ra, ca = backend.grid_pos(chip_a)
    rb, cb = backend.grid_pos(chip_b)
    chips = [chip_a]
    r, c = ra, ca
    while c != cb:
        c += 1 if cb > c else -1
        chips.append(backend.chip_at(r, c))
    while r != rb:
        r += 1 if rb > r else -1
        chips.append(backend.chip_at(r, c))
    return chips


def _select_crossing(
    graph: CouplingGraph,
    backend: ChipletBackend,
    cfg: RoutingConfig,
    u: int,
    to_chip: int,
    v: int | None,
) -> tuple[InterChipLink, list[int]]:
    """Pick the boundary link for one crossing and build the path through it.

    Returns the chosen link and the path from ``u`` over the link; when
    the far-side target ``v`` is known the path continues down to it.
    Increments the chosen link's usage counter.
    """
    chip_u = backend.chip_of(u)
    area = backend.chip_area
    links = [
        l for l in backend.links_between(chip_u, to_chip)
        if graph.alive[l.a] and graph.alive[l.b]
    ]
    if not links:
        raise NoRouteError(f"no functional link between chiplets {chip_u} and {to_chip}")

    def near(l: InterChipLink) -> int:
        return l.a if backend.chip_of(l.a) == chip_u else l.b

    def far(l: InterChipLink) -> int:
        return l.b if backend.chip_of(l.a) == chip_u else l.a

    dist_u = _bfs_dist(graph, u, chip_u, area)
    dist_v = _bfs_dist(graph, v, to_chip, area) if v is not None else None
    reachable: list[tuple[InterChipLink, int, int]] = []
    for l in links:
        du = dist_u.get(near(l))
        if du is None:
            continue
        dv = 0
        if dist_v is not None:
            dv_opt = dist_v.get(far(l))
            if dv_opt is None:
                continue
            dv = dv_opt
        reachable.append((l, du, dv))
    if not reachable:
        raise NoRouteError(
            f"no link between chiplets {chip_u} and {to_chip} is reachable around defects"
        )

    # crossing point: where the unweighted shortest path would cross
    cross = min(reachable, key=lambda t: (t[1] + 1 + t[2], near(t[0])))
    cpt = backend.coord(near(cross[0]))

    def boundary_offset(t: tuple[InterChipLink, int, int]) -> int:
        c = backend.coord(near(t[0]))
        return abs(c.x - cpt.x) + abs(c.y - cpt.y)

    reachable.sort(key=lambda t: (boundary_offset(t), near(t[0])))
    candidates = reachable[: cfg.k_nearest]
    best, best_du, best_dv = min(
        candidates,
        key=lambda t: (
            t[1] + 1 + t[2] + cfg.alpha * t[0].eps + cfg.beta * t[0].usage,
            t[1] + 1 + t[2],
            near(t[0]),
        ),
    )
    best.usage += 1
    path = _walk_back(graph, dist_u, u, near(best), chip_u, area)
    path.append(far(best))
    if v is not None and far(best) != v:
        assert dist_v is not None
        tail = _walk_back(graph, dist_v, v, far(best), to_chip, area)
        tail.reverse()  # far -> v
        path.extend(tail[1:])
    return best, path


def select_link(
    graph: CouplingGraph,
    backend: ChipletBackend,
    src: int,
    dst: int,
    cfg: RoutingConfig,
) -> tuple[InterChipLink, list[int]]:
    """Single-crossing link selection between adjacent chiplets.

    ``src`` and ``dst`` are global qubit ids on grid-adjacent chiplets.
    Returns the selected link and the full src -> dst coupling path, and
    bumps the link's usage counter.
    """
    ca, cb = backend.chip_of(src), backend.chip_of(dst)
    (ra, cca), (rb, ccb) = backend.grid_pos(ca), backend.grid_pos(cb)
    if abs(ra - rb) + abs(cca - ccb) != 1:
        raise ValidationError("select_link expects endpoints on adjacent chiplets")
    return _select_crossing(graph, backend, cfg, src, cb, dst)


class _RoutingRun:
    def __init__(
        self,
        dag: CircuitDag,
        registry: PartitionRegistry,
        backend: ChipletBackend,
        graph: CouplingGraph,
        cfg: RoutingConfig,
    ):
        self.dag = dag
        self.backend = backend
        self.graph = graph
        self.cfg = cfg
        self.phi = flat_mapping(registry, backend)
        self.pos = dict(self.phi)  # virtual -> current physical id
        self.owner = [-1] * backend.n_qubits
        for virt, gid in self.phi.items():
            if not graph.alive[gid]:
                raise ValidationError(f"qubit {virt} mapped onto defective cell {gid}")
            self.owner[gid] = virt
        qpid = registry.qubit_map()
        self.pid_of_cell = {gid: qpid[virt] for virt, gid in self.phi.items()}
        self.qpid = qpid
        self.out: list[GateNode] = []
        self.swap_count = 0
        self.traversals: dict[tuple[int, int], int] = {}
        self.violations = 0
        for link in backend.links:
            link.usage = 0  # this run owns the congestion counters

    # -- emission -----------------------------------------------------

    def _emit(self, node: GateNode) -> None:
        self.out.append(node)
        if node.kind.is_two_qubit:
            link = self.graph.link_on(*node.qubits)
            if link is not None:
                self.traversals[link.key] = self.traversals.get(link.key, 0) + 1

    def _emit_swap(self, p: int, q: int) -> None:
        self._emit(GateNode(GateKind.SWAP, (p, q), "route"))
        self.swap_count += 1
        va, vb = self.owner[p], self.owner[q]
        self.owner[p], self.owner[q] = vb, va
        if vb != -1:
            self.pos[vb] = p
        if va != -1:
            self.pos[va] = q
        pa = self.pid_of_cell.get(p)
        if pa is not None and pa == self.pid_of_cell.get(q):
            self.violations += 1
            log.warning("SWAP between cells %d and %d inside partition %d", p, q, pa)

    # -- per-gate routing ---------------------------------------------

    def route_node(self, g: GateNode) -> None:
        if g.kind is GateKind.BARRIER:
            self._emit(GateNode(GateKind.BARRIER, tuple(self.pos[q] for q in g.qubits), g.tag))
        elif not g.kind.is_two_qubit:
            self._emit(GateNode(g.kind, (self.pos[g.qubits[0]],), g.tag))
        else:
            self._route_two_qubit(g)

    def _route_two_qubit(self, g: GateNode) -> None:
        v1, v2 = g.qubits
        p1, p2 = self.pos[v1], self.pos[v2]
        if self.graph.has_edge(p1, p2):
            self._emit(GateNode(g.kind, (p1, p2), g.tag))
            return
        if self.qpid[v1] == self.qpid[v2]:
            msg = (
                f"{g.kind.value} on qubits {v1}, {v2} of partition {self.qpid[v1]} "
                "needs routing inside a patch"
            )
            if self.cfg.strict_patches:
                raise StrictPatchViolationError(msg)
            log.warning("%s", msg)
            self.violations += 1
        path = self._find_path(p1, p2)
        self._bifurcate(path, g)

    def _find_path(self, p1: int, p2: int) -> list[int]:
        c1, c2 = self.backend.chip_of(p1), self.backend.chip_of(p2)
        area = self.backend.chip_area
        if c1 == c2:
            dist = _bfs_dist(self.graph, p1, c1, area)
            if p2 not in dist:
                raise NoRouteError(
                    f"no coupling path between {p1} and {p2} on chiplet {c1}"
                )
            return _walk_back(self.graph, dist, p1, p2, c1, area)
        path = [p1]
        cur = p1
        for chip in _chip_route(self.backend, c1, c2)[1:]:
            target = p2 if chip == c2 else None
            _, seg = _select_crossing(self.graph, self.backend, self.cfg, cur, chip, target)
            path.extend(seg[1:])
            cur = path[-1]
        return path

    def _bifurcate(self, path: list[int], g: GateNode) -> None:
        """SWAP both tokens toward the middle edge, apply the gate, undo."""
        hops = len(path) - 1
        ka = hops // 2          # source side, takes the extra hop
        kb = (hops - 1) // 2    # target side
        for i in range(ka):
            self._emit_swap(path[i], path[i + 1])
        for j in range(kb):
            self._emit_swap(path[hops - j], path[hops - j - 1])
        p1, p2 = self.pos[g.qubits[0]], self.pos[g.qubits[1]]
        assert self.graph.has_edge(p1, p2), "tokens not adjacent after bifurcation"
        self._emit(GateNode(g.kind, (p1, p2), g.tag))
        if self.cfg.restore_mapping:
            for j in reversed(range(kb)):
                self._emit_swap(path[hops - j - 1], path[hops - j])
            for i in reversed(range(ka)):
                self._emit_swap(path[i + 1], path[i])


def route_circuit(
    dag: CircuitDag,
    registry: PartitionRegistry,
    backend: ChipletBackend,
    cfg: RoutingConfig | None = None,
    graph: CouplingGraph | None = None,
) -> CompiledCircuit:
    """Route every gate of ``dag`` in topological order onto ``backend``."""
    if registry.stage is not Stage.MAPPED:
        raise ValidationError(f"route_circuit needs a mapped registry, got {registry.stage.name}")
    cfg = cfg or RoutingConfig()
    graph = graph or coupling_graph(backend)
    run = _RoutingRun(dag, registry, backend, graph, cfg)
    for g in dag.nodes:  # node order is a topological order
        run.route_node(g)
    if cfg.restore_mapping:
        assert run.pos == run.phi, "restored mapping drifted from the initial assignment"
    mapping = {}
    for part in registry:
        assert part.coords is not None
        mapping.update(part.coords)
    return CompiledCircuit(
        dag=build_dag(run.out, backend.n_qubits),
        mapping=mapping,
        swap_count=run.swap_count,
        link_usage={l.key: l.usage for l in backend.links if l.usage},
        link_traversals=dict(sorted(run.traversals.items())),
        patch_violations=run.violations,
        restore_mapping=cfg.restore_mapping,
    )
