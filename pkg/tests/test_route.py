"""Routing: path construction, SWAP bifurcation, and link selection."""

import logging
import random

import networkx as nx
import pytest

from chipmap.backend import build_backend, coupling_graph
from chipmap.errors import NoRouteError, StrictPatchViolationError, ValidationError
from chipmap.gmap import Placement
from chipmap.ir import GateKind, PartitionGeometry, Stage, build_dag, cx, measure
from chipmap.lmap import local_map
from chipmap.partition import predefined_partitions
from chipmap.route import (
    RoutingConfig,
    _chip_route,
    path_cost,
    route_circuit,
    select_link,
)
from chipmap.sequence import build_partition_graph, sequence_registry
from oracles import TokenTracker


def _route(gates, n, labels, placements, be, cfg=None, geometry=None):
    dag = build_dag(gates, n)
    reg = predefined_partitions(dag, labels, geometry)
    pg = build_partition_graph(reg, dag)
    reg, _ = sequence_registry(reg, pg)
    reg = reg.enrich(Stage.PLACED, {p.pid: placements[p.pid].chip for p in reg})
    reg = local_map(be, reg, placements)
    return route_circuit(dag, reg, be, cfg)


def _replay(compiled, be):
    """Token replay against a fresh coupling relation; asserts adjacency."""
    graph = coupling_graph(be)
    init = {v: be.gid(*pc) for v, pc in compiled.mapping.items()}
    tracker = TokenTracker(init, set(graph.edges()))
    for g in compiled.dag.nodes:
        tracker.apply(g.kind.value, g.qubits)
    return tracker, init


def _chip(w=5, h=5):
    return build_backend({"grid": [1, 1], "chiplet": [w, h], "allow_non_pow2": True})


def _pair_chips(links=None, auto=None, w=3, h=3):
    doc = {"grid": [1, 2], "chiplet": [w, h], "allow_non_pow2": True}
    if links is not None:
        doc["links"] = links
    if auto is not None:
        doc["auto_links"] = auto
    return build_backend(doc)


def _singletons(cells):
    """labels and 1x1 placements for one virtual qubit per (chip, x, y)."""
    labels = {v: v for v in range(len(cells))}
    placements = {
        v: Placement(v, chip, x, y, 1, 1) for v, (chip, x, y) in enumerate(cells)
    }
    return labels, placements


class TestConfig:
    def test_defaults_are_basic(self):
        cfg = RoutingConfig()
        assert (cfg.policy, cfg.alpha, cfg.beta, cfg.k_nearest) == ("basic", 0.0, 0.0, 3)
        assert cfg.restore_mapping and not cfg.strict_patches

    def test_from_policy_fills_weights(self):
        assert RoutingConfig.from_policy("focus").alpha == 1e4
        cfg = RoutingConfig.from_policy("tradeoff")
        assert (cfg.alpha, cfg.beta) == (1e3, 1.0)

    def test_from_policy_allows_overrides(self):
        cfg = RoutingConfig.from_policy("tradeoff", alpha=50.0, beta=2.0)
        assert (cfg.alpha, cfg.beta) == (50.0, 2.0)

    @pytest.mark.parametrize(
        "policy,alpha,beta",
        [
            ("basic", 1.0, 0.0),
            ("basic", 0.0, 1.0),
            ("focus", 0.0, 0.0),
            ("focus", 1e4, 1.0),
            ("tradeoff", 0.0, 1.0),
            ("tradeoff", 1e3, 0.0),
        ],
    )
    def test_inconsistent_weights_rejected(self, policy, alpha, beta):
        with pytest.raises(ValidationError, match="inconsistent"):
            RoutingConfig(alpha=alpha, beta=beta, policy=policy)

    def test_bad_values_rejected(self):
        with pytest.raises(ValidationError, match="policy"):
            RoutingConfig(policy="greedy")
        with pytest.raises(ValidationError, match="nonnegative"):
            RoutingConfig(alpha=-1.0)
        with pytest.raises(ValidationError, match="k_nearest"):
            RoutingConfig(k_nearest=0)


class TestPathCost:
    def test_combines_three_terms(self):
        from chipmap.backend import InterChipLink

        link = InterChipLink(0, 9, 0.01)
        link.usage = 2
        cfg = RoutingConfig.from_policy("tradeoff")  # alpha 1e3, beta 1
        assert path_cost([1, 2, 3], link, cfg) == 2 + 10.0 + 2.0
        assert path_cost([5], link, RoutingConfig()) == 0.0

    def test_empty_path_rejected(self):
        from chipmap.backend import InterChipLink

        with pytest.raises(ValidationError):
            path_cost([], InterChipLink(0, 9, 0.0), RoutingConfig())


class TestChipRoute:
    def test_columns_before_rows(self):
        be = build_backend({"grid": [2, 2], "chiplet": [2, 2]})
        assert _chip_route(be, 0, 3) == [0, 1, 3]
        assert _chip_route(be, 3, 0) == [3, 2, 0]
        assert _chip_route(be, 2, 2) == [2]


class TestIntraChip:
    def test_exact_swap_sequence_on_one_chip(self):
        be = _chip()
        labels, placements = _singletons([(0, 0, 0), (0, 2, 2)])
        compiled = _route([cx(0, 1)], 2, labels, placements, be)
        got = [(g.kind, g.qubits) for g in compiled.dag.nodes]
        assert got == [
            (GateKind.SWAP, (0, 1)),
            (GateKind.SWAP, (1, 2)),
            (GateKind.SWAP, (12, 7)),
            (GateKind.CNOT, (2, 7)),
            (GateKind.SWAP, (7, 12)),
            (GateKind.SWAP, (2, 1)),
            (GateKind.SWAP, (1, 0)),
        ]
        assert compiled.swap_count == 6
        assert compiled.patch_violations == 0
        assert compiled.link_usage == {} and compiled.link_traversals == {}

    def test_adjacent_gate_passes_through(self):
        be = _chip()
        labels, placements = _singletons([(0, 1, 1), (0, 1, 2)])
        compiled = _route([cx(0, 1)], 2, labels, placements, be)
        assert compiled.swap_count == 0
        assert [(g.kind, g.qubits) for g in compiled.dag.nodes] == [
            (GateKind.CNOT, (6, 11))
        ]

    def test_swap_count_matches_distance_oracle(self):
        rng = random.Random(31)
        for _ in range(25):
            defects = set()
            while len(defects) < 4:
                defects.add((rng.randrange(6), rng.randrange(6)))
            free = [(x, y) for x in range(6) for y in range(6) if (x, y) not in defects]
            (ax, ay), (bx, by) = rng.sample(free, 2)
            be = build_backend(
                {
                    "grid": [1, 1],
                    "chiplet": [6, 6],
                    "defects": [{"chip": 0, "x": x, "y": y} for x, y in defects],
                    "allow_non_pow2": True,
                }
            )
            g = nx.Graph(list(coupling_graph(be).edges()))
            labels, placements = _singletons([(0, ax, ay), (0, bx, by)])
            src, dst = be.gid(0, ax, ay), be.gid(0, bx, by)
            try:
                d = nx.shortest_path_length(g, src, dst)
            except nx.NetworkXNoPath:
                with pytest.raises(NoRouteError):
                    _route([cx(0, 1)], 2, labels, placements, be)
                continue
            compiled = _route([cx(0, 1)], 2, labels, placements, be)
            assert compiled.swap_count == 2 * (d - 1)
            tracker, init = _replay(compiled, be)
            assert tracker.pos == init

    def test_restore_off_leaves_tokens_and_reuses_adjacency(self):
        be = _chip()
        labels, placements = _singletons([(0, 0, 0), (0, 2, 2)])
        cfg = RoutingConfig(restore_mapping=False)
        compiled = _route([cx(0, 1), cx(0, 1)], 2, labels, placements, be, cfg)
        # first gate pays 3 swaps; the second finds the tokens adjacent
        assert compiled.swap_count == 3
        assert not compiled.restore_mapping
        kinds = [g.kind for g in compiled.dag.nodes]
        assert kinds.count(GateKind.CNOT) == 2 and kinds.count(GateKind.SWAP) == 3
        tracker, init = _replay(compiled, be)
        assert tracker.pos != init

    def test_single_qubit_gates_follow_the_token(self):
        be = _chip()
        labels, placements = _singletons([(0, 0, 0), (0, 2, 2)])
        cfg = RoutingConfig(restore_mapping=False)
        compiled = _route([cx(0, 1), measure(0)], 2, labels, placements, be, cfg)
        last = compiled.dag.nodes[-1]
        assert last.kind is GateKind.MEASURE
        assert last.qubits == (2,)  # token moved off cell 0


class TestPatches:
    def _diag(self):
        geo = {0: PartitionGeometry(2, 2, {0: (0, 0), 1: (1, 1)})}
        labels = {0: 0, 1: 0}
        placements = {0: Placement(0, 0, 0, 0, 2, 2)}
        return labels, placements, geo

    def test_lax_mode_warns_and_counts(self, caplog):
        labels, placements, geo = self._diag()
        with caplog.at_level(logging.WARNING, logger="chipmap.route"):
            compiled = _route([cx(0, 1)], 2, labels, placements, _chip(), None, geo)
        assert compiled.patch_violations == 1
        assert compiled.swap_count == 2
        assert "inside a patch" in caplog.text

    def test_strict_mode_raises(self):
        labels, placements, geo = self._diag()
        cfg = RoutingConfig(strict_patches=True)
        with pytest.raises(StrictPatchViolationError):
            _route([cx(0, 1)], 2, labels, placements, _chip(), cfg, geo)


class TestLinks:
    def test_gate_over_link_counts_traversal_not_usage(self):
        be = _pair_chips(
            links=[{"a": {"chip": 0, "x": 2, "y": 0}, "b": {"chip": 1, "x": 0, "y": 0}, "eps": 0.01}]
        )
        labels, placements = _singletons([(0, 2, 0), (1, 0, 0)])
        compiled = _route([cx(0, 1)], 2, labels, placements, be)
        assert compiled.swap_count == 0
        assert compiled.link_usage == {}
        assert compiled.link_traversals == {(2, 9): 1}

    def test_equidistant_equal_noise_links_round_robin(self):
        be = _pair_chips(auto={"per_edge": 3, "eps": 0.01})
        assert sorted(l.key for l in be.links) == [(2, 9), (5, 12), (8, 15)]
        labels, placements = _singletons([(0, 2, 0), (1, 0, 2)])
        cfg = RoutingConfig.from_policy("tradeoff")
        compiled = _route([cx(0, 1)] * 6, 2, labels, placements, be, cfg)
        # all three crossings cost the same, so usage feedback cycles them
        assert compiled.link_usage == {(2, 9): 2, (5, 12): 2, (8, 15): 2}
        assert compiled.swap_count == 6 * 4
        tracker, init = _replay(compiled, be)
        assert tracker.pos == init

    def test_focus_takes_the_quiet_link(self):
        be = _pair_chips(
            links=[
                {"a": {"chip": 0, "x": 2, "y": 0}, "b": {"chip": 1, "x": 0, "y": 0}, "eps": 0.1},
                {"a": {"chip": 0, "x": 2, "y": 2}, "b": {"chip": 1, "x": 0, "y": 2}, "eps": 0.001},
            ]
        )
        labels, placements = _singletons([(0, 2, 0), (1, 1, 0)])
        cfg = RoutingConfig.from_policy("focus")
        compiled = _route([cx(0, 1)] * 10, 2, labels, placements, be, cfg)
        assert compiled.link_usage == {(8, 15): 10}

    def test_k_nearest_one_pins_the_crossing_link(self):
        be = _pair_chips(
            links=[
                {"a": {"chip": 0, "x": 2, "y": 0}, "b": {"chip": 1, "x": 0, "y": 0}, "eps": 0.1},
                {"a": {"chip": 0, "x": 2, "y": 2}, "b": {"chip": 1, "x": 0, "y": 2}, "eps": 0.001},
            ]
        )
        labels, placements = _singletons([(0, 2, 0), (1, 1, 0)])
        cfg = RoutingConfig.from_policy("focus", k_nearest=1)
        compiled = _route([cx(0, 1)] * 10, 2, labels, placements, be, cfg)
        # the low-noise link sits outside the candidate window
        assert compiled.link_usage == {(2, 9): 10}

    def test_two_crossings_through_intermediate_chiplet(self):
        be = build_backend(
            {"grid": [2, 2], "chiplet": [3, 3], "auto_links": {"per_edge": 1, "eps": 0.01}}
        )
        labels, placements = _singletons([(0, 0, 0), (3, 2, 2)])
        compiled = _route([cx(0, 1)], 2, labels, placements, be)
        assert len(compiled.link_usage) == 2
        assert sum(compiled.link_usage.values()) == 2
        chips = {be.chip_of(g) for key in compiled.link_usage for g in key}
        assert chips == {0, 1, 3}  # columns first, then rows
        tracker, init = _replay(compiled, be)
        assert tracker.pos == init

    def test_usage_counters_reset_between_runs(self):
        be = _pair_chips(auto={"per_edge": 3, "eps": 0.01})
        labels, placements = _singletons([(0, 2, 0), (1, 0, 2)])
        cfg = RoutingConfig.from_policy("tradeoff")
        first = _route([cx(0, 1)] * 5, 2, labels, placements, be, cfg)
        second = _route([cx(0, 1)] * 5, 2, labels, placements, be, cfg)
        assert first.link_usage == second.link_usage

    def test_no_link_between_chiplets(self):
        be = _pair_chips(links=[])
        labels, placements = _singletons([(0, 0, 0), (1, 2, 2)])
        with pytest.raises(NoRouteError, match="link"):
            _route([cx(0, 1)], 2, labels, placements, be)


class TestSelectLink:
    def test_picks_min_cost_and_bumps_usage(self):
        be = _pair_chips(auto={"per_edge": 3, "eps": 0.01})
        graph = coupling_graph(be)
        link, path = select_link(graph, be, 2, 15, RoutingConfig())
        assert link.key == (2, 9)
        assert path == [2, 9, 12, 15]
        assert link.usage == 1

    def test_rejects_non_adjacent_chiplets(self):
        be = build_backend(
            {"grid": [2, 2], "chiplet": [3, 3], "auto_links": {"per_edge": 1, "eps": 0.01}}
        )
        graph = coupling_graph(be)
        with pytest.raises(ValidationError, match="adjacent"):
            select_link(graph, be, 0, be.gid(3, 0, 0), RoutingConfig())


class TestInvariants:
    def test_stage_guard(self):
        be = _chip()
        dag = build_dag([], 2)
        reg = predefined_partitions(dag, {0: 0, 1: 1})
        with pytest.raises(ValidationError, match="mapped"):
            route_circuit(dag, reg, be)

    def test_random_circuits_replay_cleanly(self):
        rng = random.Random(47)
        for trial in range(20):
            if trial % 2:
                be = build_backend(
                    {"grid": [2, 2], "chiplet": [3, 3], "auto_links": {"per_edge": 2, "eps": 0.01}}
                )
            else:
                be = _chip(4, 4)
            n = rng.randint(2, 5)
            cells = rng.sample(
                [
                    (c, x, y)
                    for c in range(be.n_chiplets)
                    for x in range(be.chip_w)
                    for y in range(be.chip_h)
                ],
                n,
            )
            labels, placements = _singletons(cells)
            gates = [
                cx(*rng.sample(range(n), 2)) for _ in range(rng.randint(1, 12))
            ]
            compiled = _route(gates, n, labels, placements, be)
            tracker, init = _replay(compiled, be)
            assert tracker.pos == init
            assert compiled.swap_count % 2 == 0
