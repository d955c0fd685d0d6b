"""Circuit partitioning.

Two routes produce a partition registry at the first enrichment stage:

- auto: estimate how many patches the interaction graph naturally forms
  (edge-betweenness community detection, keeping the maximum-modularity
  level of the removal dendrogram), then split qubits into that many
  capacity-bounded blocks with recursive bisection plus a
  move-and-rollback boundary refinement pass.
- predefined: adopt patch labels shipped with the circuit, attaching
  declared geometry or inferring the squarest box that holds each block.

Detection is capped at a node budget; larger circuits must ship labels.
"""

from __future__ import annotations

import math
import random
from typing import Mapping, Sequence

import networkx as nx

from .errors import ValidationError
from .ir import (
    CircuitDag,
    InteractionGraph,
    Partition,
    PartitionGeometry,
    PartitionRegistry,
)

DEFAULT_DETECTION_BUDGET = 200

_BETWEENNESS_TIE_TOL = 1e-9
_MODULARITY_TIE_TOL = 1e-12


def _ekey(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def estimate_partition_count(
    g: InteractionGraph, node_budget: int = DEFAULT_DETECTION_BUDGET
) -> tuple[int, list[int]]:
    """Estimate the number of qubit communities in the interaction graph.

    Removes edges in descending betweenness order (ties broken toward the
    lexicographically smallest endpoint pair) and scores every community
    structure the removal sequence produces by weighted modularity on the
    original graph. Returns the community count and sizes of the best
    structure; modularity ties resolve toward fewer communities. The
    result is invariant under uniform edge-weight scaling.
    """
    n = g.n_nodes
    if n == 0:
        raise ValidationError("interaction graph has no nodes")
    if n > node_budget:
        raise ValidationError(
            f"interaction graph has {n} nodes, over the detection budget of "
            f"{node_budget}; supply predefined partitions"
        )
    if not g.weights:
        return n, [1] * n

    orig = nx.Graph()
    orig.add_nodes_from(g.nodes)
    for (a, b), w in sorted(g.weights.items()):
        if w <= 0:
            raise ValidationError(f"interaction edge {(a, b)} has nonpositive weight {w}")
        orig.add_edge(a, b, weight=w)

    def communities(graph: nx.Graph) -> list[set[int]]:
        return sorted(nx.connected_components(graph), key=min)

    work = orig.copy()
    bc: dict[tuple[int, int], float] = {}

    def recompute(nodes: set[int]) -> None:
        sub = work.subgraph(nodes)
        for (u, v), val in nx.edge_betweenness_centrality(sub, normalized=False).items():
            bc[_ekey(u, v)] = val

    comps = communities(work)
    for comp in comps:
        recompute(comp)

    best = comps
    best_q = nx.algorithms.community.modularity(orig, comps, weight="weight")
    n_comps = len(comps)
    while work.number_of_edges() > 0:
        top = max(bc.values())
        cut = top - _BETWEENNESS_TIE_TOL * max(1.0, abs(top))
        edge = min(e for e, val in bc.items() if val >= cut)
        work.remove_edge(*edge)
        del bc[edge]
        side_a = nx.node_connected_component(work, edge[0])
        if edge[1] in side_a:
            recompute(side_a)
        else:
            recompute(side_a)
            recompute(nx.node_connected_component(work, edge[1]))
            comps = communities(work)
            if len(comps) > n_comps:
                n_comps = len(comps)
                q = nx.algorithms.community.modularity(orig, comps, weight="weight")
                if q > best_q + _MODULARITY_TIE_TOL:
                    best, best_q = comps, q
    sizes = sorted((len(c) for c in best), reverse=True)
    return len(best), sizes


def _infer_box(n: int) -> tuple[int, int]:
    """Squarest w x h box with w*h >= n (width never shorter than height)."""
    w = math.isqrt(n)
    if w * w < n:
        w += 1
    h = -(-n // w)
    return w, h


def _make_partition(pid: int, qubits: frozenset[int],
                    geometry: PartitionGeometry | None) -> Partition:
    if geometry is not None:
        return Partition(pid, qubits, geometry.width, geometry.height, dict(geometry.cells))
    w, h = _infer_box(len(qubits))
    return Partition(pid, qubits, w, h)


def predefined_partitions(
    dag: CircuitDag,
    qubit_to_pid: Mapping[int, int],
    geometry: Mapping[int, PartitionGeometry] | None = None,
) -> PartitionRegistry:
    """Adopt circuit-supplied patch labels as the partition registry."""
    missing = [q for q in range(dag.n_virt) if q not in qubit_to_pid]
    if missing:
        raise ValidationError(f"qubits {missing[:8]} missing from the partition map")
    blocks: dict[int, set[int]] = {}
    for q in range(dag.n_virt):
        blocks.setdefault(qubit_to_pid[q], set()).add(q)
    parts = []
    for pid in sorted(blocks):
        geo = geometry.get(pid) if geometry else None
        parts.append(_make_partition(pid, frozenset(blocks[pid]), geo))
    return PartitionRegistry(tuple(parts))


def kway_partition(
    g: InteractionGraph,
    k: int,
    capacities: Sequence[int],
    imbalance: float = 0.03,
    seed: int = 0,
) -> PartitionRegistry:
    """Split the interaction graph into k capacity-bounded blocks.

    Minimizes the weighted edge cut by recursive bisection: each bisection
    grows one side greedily from several seeds, then runs move-and-rollback
    refinement passes until no pass improves the cut. Block i holds at
    most capacities[i] * (1 + imbalance) qubits; empty blocks are dropped.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if len(capacities) != k:
        raise ValidationError(f"expected {k} capacities, got {len(capacities)}")
    caps = [int(c) for c in capacities]
    if any(c < 0 for c in caps):
        raise ValidationError("capacities must be nonnegative")
    nodes = sorted(g.nodes)
    if sum(caps) < len(nodes):
        raise ValidationError(
            f"capacities sum to {sum(caps)} but the graph has {len(nodes)} nodes"
        )
    if imbalance < 0:
        raise ValidationError("imbalance must be nonnegative")

    adj: dict[int, dict[int, int]] = {v: {} for v in nodes}
    for (a, b), w in g.weights.items():
        adj[a][b] = adj[a].get(b, 0) + w
        adj[b][a] = adj[b].get(a, 0) + w

    rng = random.Random(seed)
    assign: dict[int, int] = {}
    _split(nodes, caps, 0, adj, imbalance, rng, assign)

    blocks: dict[int, set[int]] = {}
    for v, b in assign.items():
        blocks.setdefault(b, set()).add(v)
    parts = [
        _make_partition(pid, frozenset(blocks[pid]), None) for pid in sorted(blocks)
    ]
    return PartitionRegistry(tuple(parts))


def _cap_limit(cap: int, imbalance: float) -> int:
    return int(cap * (1.0 + imbalance) + 1e-9)


def _split(
    nodes: list[int],
    caps: list[int],
    pid_base: int,
    adj: dict[int, dict[int, int]],
    imbalance: float,
    rng: random.Random,
    assign: dict[int, int],
) -> None:
    if len(caps) == 1:
        if len(nodes) > _cap_limit(caps[0], imbalance):
            raise ValidationError(
                f"block {pid_base} would hold {len(nodes)} qubits, over its "
                f"capacity {caps[0]} with imbalance {imbalance}"
            )
        for v in nodes:
            assign[v] = pid_base
        return
    k1 = (len(caps) + 1) // 2
    caps_l, caps_r = caps[:k1], caps[k1:]
    hi_l = _cap_limit(sum(caps_l), imbalance)
    hi_r = _cap_limit(sum(caps_r), imbalance)
    lo_l = max(0, len(nodes) - hi_r)
    if lo_l > hi_l:
        raise ValidationError("capacities infeasible under the imbalance bound")
    total = sum(caps_l) + sum(caps_r)
    target = round(len(nodes) * sum(caps_l) / total) if total else len(nodes) // 2
    target = min(max(target, lo_l), hi_l)
    side_a = _bisect(nodes, adj, lo_l, hi_l, target, rng)
    left = [v for v in nodes if v in side_a]
    right = [v for v in nodes if v not in side_a]
    _split(left, caps_l, pid_base, adj, imbalance, rng, assign)
    _split(right, caps_r, pid_base + k1, adj, imbalance, rng, assign)


def _bisect(
    nodes: list[int],
    adj: dict[int, dict[int, int]],
    lo: int,
    hi: int,
    target: int,
    rng: random.Random,
) -> set[int]:
    """Best bisection over several growth seeds, refined to a local optimum."""
    if hi <= 0:
        return set()
    sset = set(nodes)
    ladj = {v: {u: w for u, w in adj[v].items() if u in sset} for v in nodes}
    wdeg = {v: sum(ladj[v].values()) for v in nodes}
    if len(nodes) <= 24:
        seeds = list(nodes)  # restarts are cheap at this size
    else:
        seeds = []
        for cand in [max(nodes, key=lambda v: (wdeg[v], -v)), nodes[0], nodes[-1]]:
            if cand not in seeds:
                seeds.append(cand)
        for cand in rng.sample(nodes, min(3, len(nodes))):
            if cand not in seeds:
                seeds.append(cand)

    best: tuple[int, tuple[int, ...]] | None = None
    best_side: set[int] | None = None
    for seed_node in seeds:
        side = _grow(nodes, ladj, seed_node, target)
        cut = _refine(nodes, ladj, side, lo, hi)
        key = (cut, tuple(sorted(side)))
        if best is None or key < best:
            best, best_side = key, side
    assert best_side is not None
    return best_side


def _grow(nodes: list[int], ladj: dict[int, dict[int, int]],
          seed_node: int, target: int) -> set[int]:
    side = {seed_node}
    attraction = {v: 0 for v in nodes if v != seed_node}
    for u, w in ladj[seed_node].items():
        attraction[u] = w
    while len(side) < target:
        pick = max(attraction, key=lambda v: (attraction[v], -v))
        del attraction[pick]
        side.add(pick)
        for u, w in ladj[pick].items():
            if u in attraction:
                attraction[u] += w
    return side


def _refine(nodes: list[int], ladj: dict[int, dict[int, int]],
            side: set[int], lo: int, hi: int) -> int:
    """Move-and-rollback passes; mutates ``side``, returns the final cut."""
    cut = sum(
        w for v in side for u, w in ladj[v].items() if u not in side
    )
    while True:
        improved, cut = _refine_pass(nodes, ladj, side, lo, hi, cut)
        if not improved:
            return cut


def _refine_pass(nodes: list[int], ladj: dict[int, dict[int, int]],
                 side: set[int], lo: int, hi: int, cut: int) -> tuple[bool, int]:
    gains = {
        v: sum(w if (u in side) != (v in side) else -w for u, w in ladj[v].items())
        for v in nodes
    }
    in_a = {v: v in side for v in nodes}
    size_a = sum(1 for v in nodes if in_a[v])
    locked: set[int] = set()
    moves: list[int] = []
    best_cut, best_len = cut, 0
    cur = cut
    for _ in range(len(nodes)):
        pick = None
        for v in nodes:
            if v in locked:
                continue
            new_a = size_a + (-1 if in_a[v] else 1)
            if not lo <= new_a <= hi:
                continue
            if pick is None or gains[v] > gains[pick]:
                pick = v
        if pick is None:
            break
        was_a = in_a[pick]
        cur -= gains[pick]
        for u, w in ladj[pick].items():
            if in_a[u] == was_a:
                gains[u] += 2 * w
            else:
                gains[u] -= 2 * w
        gains[pick] = -gains[pick]
        in_a[pick] = not was_a
        size_a += -1 if was_a else 1
        locked.add(pick)
        moves.append(pick)
        if cur < best_cut:
            best_cut, best_len = cur, len(moves)
    # roll back moves past the best prefix
    for v in moves[best_len:]:
        in_a[v] = not in_a[v]
    side.clear()
    side.update(v for v in nodes if in_a[v])
    return best_len > 0 and best_cut < cut, best_cut
