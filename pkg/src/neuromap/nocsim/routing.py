"""Routing strategies: turn models on meshes, lookup tables anywhere."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .. import kernels
from ..errors import ParseError, ValidationError
from ..hardware import Mesh, Topology

E, W, N, S, LOCAL, NO_DIR = kernels.E, kernels.W, kernels.N, kernels.S, kernels.LOCAL, kernels.NO_DIR
PORT_NAMES = "EWNS"

# strategy name -> kernel code
STRATEGIES = {
    "xy": 0,
    "westfirst": 1,
    "northlast": 2,
    "negfirst": 3,
    "oddeven": 4,
    "dyad": 5,
}


@dataclass(frozen=True)
class Routing:
    """``name`` is a key of STRATEGIES or ``table``; ``table`` maps
    ``(node, dst_node) -> next_node``."""

    name: str = "xy"
    table: dict[tuple[int, int], int] | None = field(default=None, compare=False)
    dyad_threshold: int = 3

    def __post_init__(self):
        if self.name != "table" and self.name not in STRATEGIES:
            raise ValidationError(f"unknown routing {self.name!r}; expected one of {sorted(STRATEGIES)} or table:<file>")
        if self.name == "table" and self.table is None:
            raise ValidationError("table routing needs a table")
        if self.dyad_threshold < 1:
            raise ValidationError("dyad threshold must be >= 1")

    @property
    def code(self) -> int:
        return STRATEGIES.get(self.name, -1)

    @property
    def adaptive(self) -> bool:
        return self.name == "dyad"


def parse_routing(text: str, dyad_threshold: int = 3) -> Routing:
    kind, _, arg = text.partition(":")
    if kind == "table":
        if not arg:
            raise ValidationError("table routing needs a file: table:<file>")
        return Routing("table", load_route_table(arg), dyad_threshold)
    return Routing(text, None, dyad_threshold)


def parse_route_table(text: str, source: str = "<routes>") -> dict[tuple[int, int], int]:
    """CSV ``node,dst,next`` with node indices; header optional."""
    table: dict[tuple[int, int], int] = {}
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or row[0].strip().startswith("#"):
            continue
        if lineno == 1 and row[0].strip() == "node":
            continue
        if len(row) != 3:
            raise ParseError(source, lineno, f"expected node,dst,next, got {','.join(row)!r}")
        try:
            node, dst, nxt = (int(x) for x in row)
        except ValueError:
            raise ParseError(source, lineno, f"non-integer field in {','.join(row)!r}") from None
        if (node, dst) in table:
            raise ParseError(source, lineno, f"duplicate entry for node {node} -> {dst}")
        table[(node, dst)] = nxt
    return table


def load_route_table(path: str | Path) -> dict[tuple[int, int], int]:
    path = Path(path)
    return parse_route_table(path.read_text(), str(path))


def format_route_table(table: dict[tuple[int, int], int]) -> str:
    rows = ["node,dst,next"] + [f"{a},{b},{c}" for (a, b), c in sorted(table.items())]
    return "\n".join(rows) + "\n"


def shortest_path_table(topo: Topology) -> dict[tuple[int, int], int]:
    nh = topo.next_hop
    return {(u, d): int(nh[u, d]) for u in range(topo.n_nodes) for d in range(topo.n_tiles) if u != d}


def validate_table(table: dict[tuple[int, int], int], topo: Topology) -> None:
    """Every entry must name a neighbour, and following entries must never revisit a node."""
    for (node, dst), nxt in table.items():
        if not (0 <= node < topo.n_nodes and 0 <= dst < topo.n_tiles):
            raise ValidationError(f"route table entry {node}->{dst} is off the topology")
        if nxt not in topo.neighbors(node):
            raise ValidationError(f"route table sends {node}->{dst} via non-neighbour {nxt}")
    for (start, dst) in table:
        seen = {start}
        node = start
        while node != dst and (node, dst) in table:
            node = table[(node, dst)]
            if node in seen:
                raise ValidationError(f"route table loops on the way from {start} to {dst}")
            seen.add(node)


def port_between(mesh: Mesh, a: int, b: int) -> int:
    ax, ay = mesh.coord(a)
    bx, by = mesh.coord(b)
    if (bx - ax, by - ay) == (1, 0):
        return E
    if (bx - ax, by - ay) == (-1, 0):
        return W
    if (bx - ax, by - ay) == (0, 1):
        return N
    if (bx - ax, by - ay) == (0, -1):
        return S
    raise ValidationError(f"nodes {a} and {b} are not mesh neighbours")


def mesh_route(routing: Routing, mesh: Mesh, src: int, dst: int) -> list[int]:
    """Node sequence an uncongested flit follows from ``src`` to ``dst``."""
    if routing.name == "table":
        path = [src]
        while path[-1] != dst:
            key = (path[-1], dst)
            if key not in routing.table:
                raise ValidationError(f"route table has no entry for node {key[0]} -> {dst}")
            path.append(routing.table[key])
        return path
    sx, sy = mesh.coord(src)
    dx, dy = mesh.coord(dst)
    path = [src]
    x, y = sx, sy
    for p in kernels.trace_route(routing.code, sx, sy, dx, dy, routing.dyad_threshold):
        x += (1, -1, 0, 0)[p]
        y += (0, 0, 1, -1)[p]
        path.append(mesh.node_at(x, y))
    return path


# -- turn auditing --------------------------------------------------------------

# (incoming direction, outgoing direction) pairs each turn model rules out
_FORBIDDEN = {
    "xy": {(N, E), (N, W), (S, E), (S, W)},
    "westfirst": {(N, W), (S, W)},
    "northlast": {(N, E), (N, W)},
    "negfirst": {(E, S), (N, W)},
}
_EVEN_FORBIDDEN = {(E, N), (E, S)}
_ODD_FORBIDDEN = {(N, W), (S, W)}


def forbidden_turns(name: str, column: int) -> set[tuple[int, int]]:
    if name in ("oddeven", "dyad"):
        return _EVEN_FORBIDDEN if column % 2 == 0 else _ODD_FORBIDDEN
    return _FORBIDDEN.get(name, set())


def audit_route(name: str, mesh: Mesh, path: list[int]) -> list[tuple[int, str]]:
    """Forbidden turns and 180-degree reversals on a mesh route.

    Returns ``(node, "XY")`` pairs naming where each bad turn happened and
    the two port letters; an empty list means the route is compliant.
    """
    bad = []
    dirs = [port_between(mesh, a, b) for a, b in zip(path, path[1:])]
    for k in range(1, len(dirs)):
        a, b = dirs[k - 1], dirs[k]
        node = path[k]
        if a == b:
            continue
        reversal = {a, b} in ({E, W}, {N, S})
        if reversal or (a, b) in forbidden_turns(name, mesh.coord(node)[0]):
            bad.append((node, PORT_NAMES[a] + PORT_NAMES[b]))
    return bad


def is_minimal(mesh: Mesh, path: list[int]) -> bool:
    return len(path) - 1 == int(mesh.tile_dist[path[0], path[-1]])
