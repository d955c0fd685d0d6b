"""Chiplet hardware model.

A backend is a rectangular grid of identical chiplets. Each chiplet is a
chip_w x chip_h qubit grid with 4-neighbor coupling; sparse inter-chiplet
links join facing edge qubits of adjacent chiplets and carry their own
error rate. Defective qubits lose every incident coupling, and a link
whose endpoint is defective is dropped entirely.

Global physical ids are row-major inside a chiplet, chiplets row-major in
the grid: gid = chip * chip_w * chip_h + y * chip_w + x.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence

from .errors import ValidationError

log = logging.getLogger(__name__)


class PhysCoord(NamedTuple):
    chip: int
    x: int
    y: int


@dataclass(eq=False)
class InterChipLink:
    """Dedicated coupler between facing edge qubits of adjacent chiplets.

    ``usage`` is the congestion counter consulted by routing; it belongs
    to a single routing run, which resets it before selecting links.
    """

    a: int  # global qubit id on the lower-numbered chiplet
    b: int  # global qubit id on the higher-numbered chiplet
    eps: float  # physical error rate of the coupler, stored raw
    usage: int = 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(eq=False)
class ChipletBackend:
    grid_rows: int
    grid_cols: int
    chip_w: int
    chip_h: int
    links: tuple[InterChipLink, ...] = ()
    defects: frozenset[int] = frozenset()
    _links_between: dict[tuple[int, int], tuple[InterChipLink, ...]] = field(
        init=False, repr=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        for name in ("grid_rows", "grid_cols", "chip_w", "chip_h"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        for gid in self.defects:
            if not 0 <= gid < self.n_qubits:
                raise ValidationError(f"defect id {gid} out of range")
        by_pair: dict[tuple[int, int], list[InterChipLink]] = {}
        endpoint_seen: set[int] = set()
        for link in self.links:
            self._check_link(link)
            for q in (link.a, link.b):
                if q in endpoint_seen:
                    raise ValidationError(f"qubit {q} carries more than one inter-chiplet link")
                endpoint_seen.add(q)
            pair = (self.chip_of(link.a), self.chip_of(link.b))
            by_pair.setdefault(pair, []).append(link)
        self._links_between = {k: tuple(v) for k, v in by_pair.items()}

    # -- geometry -----------------------------------------------------

    @property
    def n_chiplets(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def chip_area(self) -> int:
        return self.chip_w * self.chip_h

    @property
    def n_qubits(self) -> int:
        return self.n_chiplets * self.chip_area

    def gid(self, chip: int, x: int, y: int) -> int:
        return chip * self.chip_area + y * self.chip_w + x

    def coord(self, gid: int) -> PhysCoord:
        chip, off = divmod(gid, self.chip_area)
        y, x = divmod(off, self.chip_w)
        return PhysCoord(chip, x, y)

    def chip_of(self, gid: int) -> int:
        return gid // self.chip_area

    def grid_pos(self, chip: int) -> tuple[int, int]:
        return divmod(chip, self.grid_cols)

    def chip_at(self, row: int, col: int) -> int:
        return row * self.grid_cols + col

    def is_defective(self, gid: int) -> bool:
        return gid in self.defects

    def links_between(self, chip_a: int, chip_b: int) -> tuple[InterChipLink, ...]:
        if chip_a > chip_b:
            chip_a, chip_b = chip_b, chip_a
        return self._links_between.get((chip_a, chip_b), ())

    # -- validation ---------------------------------------------------

    def _check_link(self, link: InterChipLink) -> None:
        if link.eps < 0:
            raise ValidationError(f"link {link.key}: negative error rate")
        ca, cb = self.chip_of(link.a), self.chip_of(link.b)
        if ca >= cb:
            raise ValidationError(f"link {link.key}: endpoints must sit on ascending chiplet ids")
        (ra, cca), (rb, ccb) = self.grid_pos(ca), self.grid_pos(cb)
        if abs(ra - rb) + abs(cca - ccb) != 1:
            raise ValidationError(f"link {link.key}: chiplets {ca} and {cb} are not grid-adjacent")
        _, ax, ay = self.coord(link.a)
        _, bx, by = self.coord(link.b)
        if rb == ra:  # horizontal neighbors: right edge meets left edge
            ok = ax == self.chip_w - 1 and bx == 0
        else:  # vertical neighbors: bottom edge meets top edge
            ok = ay == self.chip_h - 1 and by == 0
        if not ok:
            raise ValidationError(f"link {link.key}: endpoints must lie on the facing edges")

    def functional_qubits(self) -> Iterator[int]:
        for gid in range(self.n_qubits):
            if gid not in self.defects:
                yield gid


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def build_backend(spec: Mapping) -> ChipletBackend:
    """Construct a backend from its JSON document.

    Expected shape::

        {"grid": [rows, cols], "chiplet": [w, h],
         "links": [{"a": {"chip", "x", "y"}, "b": {...}, "eps": f}, ...],
         "defects": [{"chip", "x", "y"}, ...],
         "auto_links": {"per_edge": n,
                        "eps": f | {"base": f, "scale_range": [lo, hi], "seed": s}},
         "allow_non_pow2": false}

    Chiplet counts must be a power of two unless ``allow_non_pow2`` is set.
    Links touching a defective qubit are dropped with a warning.
    """
    if not isinstance(spec, Mapping):
        raise ValidationError("backend document must be an object")
    grid = spec.get("grid")
    chiplet = spec.get("chiplet")
    for name, val in (("grid", grid), ("chiplet", chiplet)):
        if (
            not isinstance(val, Sequence)
            or len(val) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in val)
        ):
            raise ValidationError(f"{name} must be a pair of positive integers")
    rows, cols = grid
    chip_w, chip_h = chiplet
    if not _is_power_of_two(rows * cols) and not spec.get("allow_non_pow2", False):
        raise ValidationError(
            f"chiplet count {rows * cols} is not a power of two "
            "(set allow_non_pow2 to override)"
        )

    shell = ChipletBackend(rows, cols, chip_w, chip_h)  # geometry helpers only

    defects: set[int] = set()
    for i, d in enumerate(spec.get("defects", []) or []):
        defects.add(shell.gid(*_parse_site(shell, f"defects[{i}]", d)))

    links: list[InterChipLink] = []
    for i, entry in enumerate(spec.get("links", []) or []):
        if not isinstance(entry, Mapping):
            raise ValidationError(f"links[{i}]: expected an object")
        a = shell.gid(*_parse_site(shell, f"links[{i}].a", entry.get("a")))
        b = shell.gid(*_parse_site(shell, f"links[{i}].b", entry.get("b")))
        eps = entry.get("eps")
        if not isinstance(eps, (int, float)) or isinstance(eps, bool) or eps < 0:
            raise ValidationError(f"links[{i}]: eps must be a nonnegative number")
        if a > b:
            a, b = b, a
        links.append(InterChipLink(a, b, float(eps)))

    auto = spec.get("auto_links")
    if auto is not None:
        links.extend(_auto_links(shell, auto, taken={l.a for l in links} | {l.b for l in links}))

    kept = []
    for link in links:
        if link.a in defects or link.b in defects:
            log.warning("dropping link %s: defective endpoint", link.key)
            continue
        kept.append(link)

    return ChipletBackend(rows, cols, chip_w, chip_h, tuple(kept), frozenset(defects))


def _parse_site(backend: ChipletBackend, where: str, obj: object) -> tuple[int, int, int]:
    if not isinstance(obj, Mapping):
        raise ValidationError(f"{where}: expected an object with chip, x, y")
    try:
        chip, x, y = int(obj["chip"]), int(obj["x"]), int(obj["y"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError(f"{where}: expected integer chip, x, y") from None
    if not 0 <= chip < backend.n_chiplets:
        raise ValidationError(f"{where}: chip {chip} out of range")
    if not (0 <= x < backend.chip_w and 0 <= y < backend.chip_h):
        raise ValidationError(f"{where}: cell ({x}, {y}) outside the chiplet")
    return chip, x, y


def _auto_links(
    backend: ChipletBackend, auto: object, taken: set[int]
) -> list[InterChipLink]:
    """Spread per_edge links evenly along every facing chiplet edge."""
    if not isinstance(auto, Mapping):
        raise ValidationError("auto_links must be an object")
    per_edge = auto.get("per_edge")
    if not isinstance(per_edge, int) or isinstance(per_edge, bool) or per_edge < 1:
        raise ValidationError("auto_links.per_edge must be a positive integer")
    eps_spec = auto.get("eps", 0.0)
    rng: random.Random | None = None
    if isinstance(eps_spec, Mapping):
        base = eps_spec.get("base")
        lo, hi = eps_spec.get("scale_range", (1.0, 10.0))
        if not isinstance(base, (int, float)) or base < 0 or not lo <= hi:
            raise ValidationError("auto_links.eps: base must be >= 0 and scale_range ordered")
        rng = random.Random(eps_spec.get("seed", 0))

        def draw() -> float:
            return float(base) * rng.uniform(lo, hi)

    elif isinstance(eps_spec, (int, float)) and not isinstance(eps_spec, bool) and eps_spec >= 0:

        def draw() -> float:
            return float(eps_spec)

    else:
        raise ValidationError("auto_links.eps must be a number or a scale spec")

    out: list[InterChipLink] = []
    for row in range(backend.grid_rows):
        for col in range(backend.grid_cols):
            chip = backend.chip_at(row, col)
            if col + 1 < backend.grid_cols:
                out.extend(
                    _edge_links(
                        backend, chip, backend.chip_at(row, col + 1),
                        horizontal=True, count=per_edge, draw=draw, taken=taken,
                    )
                )
            if row + 1 < backend.grid_rows:
                out.extend(
                    _edge_links(
                        backend, chip, backend.chip_at(row + 1, col),
                        horizontal=False, count=per_edge, draw=draw, taken=taken,
                    )
                )
    return out


def _edge_links(
    backend: ChipletBackend,
    chip_a: int,
    chip_b: int,
    *,
    horizontal: bool,
    count: int,
    draw,
    taken: set[int],
) -> list[InterChipLink]:
    edge_len = backend.chip_h if horizontal else backend.chip_w
    if count > edge_len:
        log.warning(
            "auto_links: %d links requested on a %d-cell edge, clipping to %d",
            count, edge_len, edge_len,
        )
        count = edge_len
    out = []
    for j in range(count):
        pos = int((j + 0.5) * edge_len / count)
        if horizontal:
            a = backend.gid(chip_a, backend.chip_w - 1, pos)
            b = backend.gid(chip_b, 0, pos)
        else:
            a = backend.gid(chip_a, pos, backend.chip_h - 1)
            b = backend.gid(chip_b, pos, 0)
        if a in taken or b in taken:
            continue  # explicit links keep their endpoints
        taken.add(a)
        taken.add(b)
        out.append(InterChipLink(a, b, draw()))
    return out


class CouplingGraph:
    """Adjacency view of a backend with defects removed.

    Nodes are functional global qubit ids; edges are intra-chiplet grid
    couplings plus inter-chiplet links. ``link_on`` returns the link
    record for a link edge, None for grid edges.
    """

    __slots__ = ("n", "alive", "_adj", "_links")

    def __init__(self, backend: ChipletBackend):
        n = backend.n_qubits
        self.n = n
        self.alive = [gid not in backend.defects for gid in range(n)]
        adj: list[list[int]] = [[] for _ in range(n)]
        for chip in range(backend.n_chiplets):
            for y in range(backend.chip_h):
                for x in range(backend.chip_w):
                    gid = backend.gid(chip, x, y)
                    if not self.alive[gid]:
                        continue
                    if x + 1 < backend.chip_w:
                        right = gid + 1
                        if self.alive[right]:
                            adj[gid].append(right)
                            adj[right].append(gid)
                    if y + 1 < backend.chip_h:
                        down = gid + backend.chip_w
                        if self.alive[down]:
                            adj[gid].append(down)
                            adj[down].append(gid)
        self._links: dict[tuple[int, int], InterChipLink] = {}
        for link in backend.links:
            if self.alive[link.a] and self.alive[link.b]:
                adj[link.a].append(link.b)
                adj[link.b].append(link.a)
                self._links[link.key] = link
        self._adj: list[tuple[int, ...]] = [tuple(sorted(ns)) for ns in adj]

    def neighbors(self, gid: int) -> tuple[int, ...]:
        return self._adj[gid]

    def has_edge(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def link_on(self, a: int, b: int) -> InterChipLink | None:
        return self._links.get((a, b) if a < b else (b, a))

    @property
    def n_nodes(self) -> int:
        return sum(self.alive)

    @property
    def n_edges(self) -> int:
        return sum(len(ns) for ns in self._adj) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        for a in range(self.n):
            for b in self._adj[a]:
                if a < b:
                    yield a, b


def coupling_graph(backend: ChipletBackend) -> CouplingGraph:
    return CouplingGraph(backend)


def backend_to_json(backend: ChipletBackend) -> dict:
    """Serialize a backend back to its document form."""

    def site(gid: int) -> dict:
        chip, x, y = backend.coord(gid)
        return {"chip": chip, "x": x, "y": y}

    return {
        "schema_version": 1,
        "grid": [backend.grid_rows, backend.grid_cols],
        "chiplet": [backend.chip_w, backend.chip_h],
        "links": [
            {"a": site(l.a), "b": site(l.b), "eps": l.eps} for l in backend.links
        ],
        "defects": [site(d) for d in sorted(backend.defects)],
    }
