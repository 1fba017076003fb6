"""Assign clusters to tiles so heavy traffic travels few links."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InfeasibleError, ParseError, ValidationError
from .hardware import Mesh, Topology
from .model import ClusteredGraph
from .pso import PsoParams, step


class PlaceAlgorithm(str, enum.Enum):
    PSO = "pso"
    ARBITRARY = "arbitrary"


@dataclass(frozen=True)
class PlacementConfig:
    algorithm: PlaceAlgorithm = PlaceAlgorithm.PSO
    seed: int = 0
    pso: PsoParams = field(default_factory=PsoParams)
    restarts: int = 1


@dataclass(frozen=True)
class Placement:
    """``tiles[c]`` is the tile index of cluster ``c``."""

    tiles: tuple[int, ...]
    topology: Topology

    def __post_init__(self):
        if len(set(self.tiles)) != len(self.tiles):
            raise ValidationError("placement puts two clusters on one tile")
        for t in self.tiles:
            if not 0 <= t < self.topology.n_tiles:
                raise ValidationError(f"tile {t} is not on {self.topology.spec}")

    def __getitem__(self, cluster: int):
        return self.topology.label(self.tiles[cluster])

    def __len__(self) -> int:
        return len(self.tiles)

    @property
    def map(self) -> dict[int, object]:
        return {c: self[c] for c in range(len(self.tiles))}


def segments(a, b, topo: Topology) -> int:
    """Links traversed between two tiles on a shortest path."""
    return topo.segments(a, b)


def hops(a, b, topo: Topology) -> int:
    """Intermediate switches on a shortest path."""
    return topo.hops(a, b)


def _traffic_arrays(g: ClusteredGraph):
    traffic = g.traffic_matrix()
    keys = sorted(traffic)
    src = np.array([a for a, _ in keys], dtype=np.int64)
    dst = np.array([b for _, b in keys], dtype=np.int64)
    w = np.array([traffic[k] for k in keys], dtype=np.float64)
    return src, dst, w


def placement_cost(g: ClusteredGraph, p: Placement, topo: Topology | None = None) -> float:
    topo = topo or p.topology
    if len(p.tiles) != g.n_clusters:
        raise ValidationError(f"placement covers {len(p.tiles)} of {g.n_clusters} clusters")
    src, dst, w = _traffic_arrays(g)
    perm = np.ascontiguousarray([p.tiles], dtype=np.int64)
    return float(kernels.placement_costs(perm, src, dst, w, np.ascontiguousarray(topo.tile_dist, dtype=np.int64))[0])


def placement_hops(g: ClusteredGraph, p: Placement) -> float:
    """Spike-weighted switch count, reported next to the segment-based cost."""
    return float(sum(s.spikes * p.topology.hops(p[s.src_cluster], p[s.dst_cluster]) for s in g.global_synapses))


def _check_fit(g: ClusteredGraph, topo: Topology) -> None:
    if g.n_clusters > topo.n_tiles:
        raise InfeasibleError(f"{g.n_clusters} clusters do not fit on {topo.n_tiles} tiles of {topo.spec}")


def place_arbitrary(g: ClusteredGraph, topo: Topology, cfg: PlacementConfig = PlacementConfig()) -> Placement:
    _check_fit(g, topo)
    perm = np.random.default_rng(cfg.seed).permutation(topo.n_tiles)
    return Placement(tuple(int(t) for t in perm[: g.n_clusters]), topo)


def place_pso(g: ClusteredGraph, topo: Topology, cfg: PlacementConfig = PlacementConfig()) -> Placement:
    """Random-key PSO: each particle carries one key per tile; sorting the keys
    (stable, so equal keys keep index order) gives the tile order, and cluster
    ``c`` takes the c-th tile. Independent restarts run as separate swarms in
    one array; the arbitrary placement seeds particle 0 of the first swarm.
    """
    _check_fit(g, topo)
    n_c, n_t = g.n_clusters, topo.n_tiles
    if n_c == 0:
        return Placement((), topo)
    src, dst, w = _traffic_arrays(g)
    dist = np.ascontiguousarray(topo.tile_dist, dtype=np.int64)
    params = cfg.pso
    restarts = max(1, cfg.restarts)
    rng = np.random.default_rng(cfg.seed)
    shape = (restarts, params.swarm_size, n_t)

    pos = rng.random(shape)
    vel = rng.uniform(-1.0, 1.0, shape)
    baseline = place_arbitrary(g, topo, cfg)
    order = list(baseline.tiles) + [t for t in range(n_t) if t not in set(baseline.tiles)]
    pos[0, 0, order] = np.arange(n_t) / n_t

    def evaluate(keys):
        perm = np.argsort(keys.reshape(-1, n_t), axis=1, kind="stable")[:, :n_c]
        cost = kernels.placement_costs(np.ascontiguousarray(perm, dtype=np.int64), src, dst, w, dist)
        return perm.reshape(restarts, params.swarm_size, n_c), cost.reshape(restarts, params.swarm_size)

    perm, cost = evaluate(pos)
    pbest, pbest_cost, pbest_perm = pos.copy(), cost, perm
    for _ in range(params.iterations):
        g_idx = np.argmin(pbest_cost, axis=1)
        gbest = pbest[np.arange(restarts), g_idx][:, None, :]
        step(params, rng, pos, vel, pbest, gbest)
        perm, cost = evaluate(pos)
        better = cost < pbest_cost
        pbest[better] = pos[better]
        pbest_cost = np.where(better, cost, pbest_cost)
        pbest_perm = np.where(better[..., None], perm, pbest_perm)

    flat = int(np.argmin(pbest_cost.reshape(-1)))
    best = pbest_perm.reshape(-1, n_c)[flat]
    return Placement(tuple(int(t) for t in best), topo)


def place(g: ClusteredGraph, topo: Topology, cfg: PlacementConfig) -> Placement:
    if cfg.algorithm is PlaceAlgorithm.PSO:
        return place_pso(g, topo, cfg)
    return place_arbitrary(g, topo, cfg)


# -- placement files --------------------------------------------------------------

_LINE = re.compile(r"^cluster\s+(\d+)\s*->\s*(?:\((-?\d+)\s*,\s*(-?\d+)\)|(-?\d+))$")


def format_placement(p: Placement) -> str:
    lines = []
    for c, t in enumerate(p.tiles):
        label = p.topology.label(t)
        text = f"({label[0]},{label[1]})" if isinstance(label, tuple) else str(label)
        lines.append(f"cluster {c} -> {text}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_placement(text: str, topo: Topology, source: str = "<placement>") -> Placement:
    found: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ParseError(source, lineno, f"expected 'cluster <id> -> (<x>,<y>)', got {raw.strip()!r}")
        cid = int(m.group(1))
        if m.group(4) is not None:
            if isinstance(topo, Mesh):
                raise ParseError(source, lineno, "mesh placements need (x,y) coordinates")
            tile = topo.index(int(m.group(4)))
        else:
            tile = topo.index((int(m.group(2)), int(m.group(3))))
        if cid in found:
            raise ValidationError(f"{source}:{lineno}: cluster {cid} placed twice")
        found[cid] = tile
    if sorted(found) != list(range(len(found))):
        raise ValidationError(f"{source}: cluster ids must be 0..{len(found) - 1}")
    return Placement(tuple(found[c] for c in range(len(found))), topo)


def load_placement(path: str | Path, topo: Topology) -> Placement:
    path = Path(path)
    return parse_placement(path.read_text(), topo, str(path))
