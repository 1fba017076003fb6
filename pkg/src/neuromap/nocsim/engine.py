"""Cycle-accurate flit engine shared by every topology.

Each node owns one FIFO per incoming link plus an unbounded injection queue.
Every cycle the head flit of each queue asks for one resource: the outgoing
link toward its next node (a bus segment is one resource for both
directions) or the node's ejection port. Each resource grants one request
per cycle, round robin over the requesting queues. A request toward a full
downstream FIFO is not made (backpressure); flits are never dropped.
A granted flit crosses its link in one cycle, so an uncontended flit is
delivered exactly ``segments`` cycles after injection.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

from .. import kernels
from ..errors import NeuromapError, ValidationError
from ..hardware import Mesh, Topology
from .routing import LOCAL, NO_DIR, Routing, validate_table


@dataclass(frozen=True)
class SimConfig:
    max_cycles: int = 1_000_000
    buffer_depth: int = 4
    # extra cycles a flit waits in each router before it may leave again
    router_delay: int = 0
    record_routes: bool = False
    check_conservation: bool = True

    def __post_init__(self):
        if self.max_cycles <= 0:
            raise ValidationError("max_cycles must be > 0")
        if self.buffer_depth < 1:
            raise ValidationError("buffer_depth must be >= 1")
        if self.router_delay < 0:
            raise ValidationError("router_delay must be >= 0")


@dataclass(slots=True, eq=False)
class Flit:
    fid: int
    src: int
    dst: int
    inject: int
    aer: tuple[int, int] = (-1, -1)
    conn: int = -1
    arrival: int = -1
    segments: int = 0
    last: int = NO_DIR
    ready: int = 0
    path: list | None = None

    @property
    def delivered(self) -> bool:
        return self.arrival >= 0

    @property
    def latency(self) -> int:
        return self.arrival - self.inject

    @property
    def source_tick(self) -> int:
        return self.aer[1] if self.aer[1] >= 0 else self.inject


@dataclass
class SimResult:
    flits: list[Flit]
    cycles: int
    delivered: int
    topology: Topology
    routing: Routing

    @property
    def undelivered(self) -> int:
        return len(self.flits) - self.delivered

    def log_csv(self) -> str:
        rows = ["inject_tick,src,dst,arrival_tick"]
        rows += [f"{f.inject},{f.src},{f.dst},{f.arrival}" for f in self.flits]
        return "\n".join(rows) + "\n"


class _Router:
    """Next-node decisions; turn models on meshes, shortest paths elsewhere."""

    def __init__(self, topo: Topology, routing: Routing, depth: int, queues: dict, stride: int):
        self.topo = topo
        self.routing = routing
        self.depth = depth
        self.queues = queues
        self.stride = stride
        self.cache: dict[tuple[int, int, int], tuple[int, int]] = {}
        self.mesh = topo if isinstance(topo, Mesh) else None
        if routing.name == "table":
            validate_table(routing.table, topo)
        if self.mesh is not None:
            m = self.mesh
            self.port_nbr = []
            for node in range(m.n_nodes):
                x, y = m.coord(node)
                row = []
                for px, py in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    row.append(m.node_at(px, py) if 0 <= px < m.width and 0 <= py < m.height else -1)
                self.port_nbr.append(row)

    def __call__(self, f: Flit, node: int) -> tuple[int, int]:
        r = self.routing
        if r.name == "table":
            nxt = r.table.get((node, f.dst))
            if nxt is None:
                raise ValidationError(f"route table has no entry for node {node} -> {f.dst}")
            return nxt, self._port(node, nxt)
        if self.mesh is None:
            return int(self.topo.next_hop[node, f.dst]), NO_DIR
        key = (node, f.dst, f.last)
        if not r.adaptive:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        m = self.mesh
        cx, cy = node % m.width, node // m.width
        dx, dy = f.dst % m.width, f.dst // m.width
        free = None
        if r.adaptive:
            free = []
            for nbr in self.port_nbr[node]:
                q = self.queues.get(nbr * self.stride + node + 1) if nbr >= 0 else None
                free.append(-1 if nbr < 0 else self.depth - (len(q) if q else 0))
        port = kernels.route_next(r.code, cx, cy, dx, dy, f.last, r.dyad_threshold, free)
        out = (self.port_nbr[node][port], port)
        if not r.adaptive:
            self.cache[key] = out
        return out

    def _port(self, node: int, nxt: int) -> int:
        if self.mesh is None:
            return NO_DIR
        return self.port_nbr[node].index(nxt)


def simulate(
    injections: Iterable[tuple],
    topo: Topology,
    routing: Routing = Routing(),
    cfg: SimConfig = SimConfig(),
    on_cycle: Callable[[int, int, int, int, int], None] | None = None,
) -> SimResult:
    """Run injections ``(tick, src, dst[, aer, conn])`` to completion or ``cfg.max_cycles``.

    ``on_cycle(cycle, injected, delivered, in_flight, queued)`` is called at
    the end of every simulated cycle.
    """
    n_tiles, n_nodes = topo.n_tiles, topo.n_nodes
    rows = sorted(injections, key=lambda r: (r[0], r[1]))
    flits = []
    for fid, row in enumerate(rows):
        tick, src, dst = int(row[0]), int(row[1]), int(row[2])
        if tick < 0 or not (0 <= src < n_tiles and 0 <= dst < n_tiles):
            raise ValidationError(f"injection {row[:3]} is off the topology or before tick 0")
        aer = tuple(row[3]) if len(row) > 3 else (-1, -1)
        conn = int(row[4]) if len(row) > 4 else src * n_tiles + dst
        flits.append(Flit(fid, src, dst, tick, aer, conn))

    stride = n_nodes + 1
    queues: dict[int, deque] = {}
    route = _Router(topo, routing, cfg.buffer_depth, queues, stride)
    shared = topo.shared_links
    depth = cfg.buffer_depth
    hold = 1 + cfg.router_delay
    record = cfg.record_routes

    active: set[int] = set()
    rr: dict[int, int] = {}
    injected = delivered = 0
    nxt_inj = 0
    cycle = 0
    while True:
        if not active:
            if nxt_inj >= len(flits):
                break
            cycle = max(cycle, flits[nxt_inj].inject)
        if cycle >= cfg.max_cycles:
            break
        while nxt_inj < len(flits) and flits[nxt_inj].inject <= cycle:
            f = flits[nxt_inj]
            key = f.src * stride
            q = queues.get(key)
            if q is None:
                q = queues[key] = deque()
            q.append(f)
            active.add(key)
            f.ready = f.inject
            if record:
                f.path = [f.src]
            injected += 1
            nxt_inj += 1

        requests: dict[int, list] = {}
        for key in sorted(active):
            f = queues[key][0]
            if f.ready > cycle:
                continue
            node = key // stride
            if node == f.dst:
                requests.setdefault(-1 - node, []).append((key, -1, LOCAL))
                continue
            nxt, port = route(f, node)
            tgt = queues.get(nxt * stride + node + 1)
            if tgt is not None and len(tgt) >= depth:
                continue
            if shared:
                res = min(node, nxt) * n_nodes + max(node, nxt)
            else:
                res = node * n_nodes + nxt
            requests.setdefault(res, []).append((key, nxt, port))

        for res, reqs in requests.items():
            win = reqs[0]
            if len(reqs) > 1:
                last = rr.get(res, -1)
                for r in reqs:
                    if r[0] > last:
                        win = r
                        break
            rr[res] = win[0]
            key, nxt, port = win
            q = queues[key]
            f = q.popleft()
            if not q:
                active.discard(key)
            if nxt < 0:
                f.arrival = cycle
                delivered += 1
                continue
            node = key // stride
            tkey = nxt * stride + node + 1
            tq = queues.get(tkey)
            if tq is None:
                tq = queues[tkey] = deque()
            tq.append(f)
            active.add(tkey)
            f.segments += 1
            f.last = port
            f.ready = cycle + hold
            if record:
                f.path.append(nxt)

        if cfg.check_conservation or on_cycle is not None:
            queued = in_flight = 0
            for key in active:
                if key % stride == 0:
                    queued += len(queues[key])
                else:
                    in_flight += len(queues[key])
            if injected != delivered + in_flight + queued:
                raise NeuromapError(
                    f"cycle {cycle}: {injected} injected but {delivered} delivered, "
                    f"{in_flight} in flight, {queued} queued"
                )
            if on_cycle is not None:
                on_cycle(cycle, injected, delivered, in_flight, queued)
        cycle += 1

    return SimResult(flits, cycle, delivered, topo, routing)
