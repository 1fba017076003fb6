"""Hardware description: interconnect topology, crossbar parasitics and technology."""

from __future__ import annotations

import dataclasses
import enum
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .model import CrossbarCapacity


class NeuronTech(str, enum.Enum):
    CMOS = "CMOS"
    FINFET = "FinFET"


class SynapseTech(str, enum.Enum):
    OXRRAM = "OxRRAM"
    PCM = "PCM"


class AccessDevice(str, enum.Enum):
    DIODE = "Diode"
    FET = "FET"
    NMOS = "NMOS"


@dataclass(frozen=True)
class ParasiticsTemplate:
    """Per-unit-cell crossbar parasitics (ohm, farad)."""

    r_wl: float = 0.0
    r_bl: float = 0.0
    c_wl: float = 0.0
    c_bl: float = 0.0
    c_wl_wl: float = 0.0
    c_wl_bl: float = 0.0
    c_bl_bl: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ValidationError(f"parasitic {f.name} must be >= 0")

    @property
    def wl_segment_c(self) -> float:
        return self.c_wl + self.c_wl_wl + self.c_wl_bl

    @property
    def bl_segment_c(self) -> float:
        return self.c_bl + self.c_bl_bl + self.c_wl_bl


# Illustrative per-node values, NOT measured data: read endurance shrinks and
# per-event energies drop as the node scales down. Override in the hardware file.
NODE_DEFAULTS = {
    65: {"read_endurance": 1_000_000_000, "energy_per_spike_j": 8.0e-11, "hop_energy_j": 2.4e-12},
    45: {"read_endurance": 500_000_000, "energy_per_spike_j": 5.0e-11, "hop_energy_j": 1.6e-12},
    32: {"read_endurance": 200_000_000, "energy_per_spike_j": 3.5e-11, "hop_energy_j": 1.1e-12},
    16: {"read_endurance": 50_000_000, "energy_per_spike_j": 2.0e-11, "hop_energy_j": 0.6e-12},
}


@dataclass(frozen=True)
class TechTemplate:
    neuron_tech: NeuronTech = NeuronTech.CMOS
    node_nm: int = 45
    supply_v: float = 1.0
    energy_per_spike_j: float = 5.0e-11
    synapse_tech: SynapseTech = SynapseTech.OXRRAM
    access_device: AccessDevice = AccessDevice.FET
    bits_per_synapse: int = 2
    read_endurance: int = NODE_DEFAULTS[45]["read_endurance"]
    hop_energy_j: float = NODE_DEFAULTS[45]["hop_energy_j"]
    # crossbar dimension at which energy_per_spike_j was characterized
    n_ref: int = 128

    def __post_init__(self):
        if self.node_nm not in NODE_DEFAULTS:
            raise ValidationError(f"node_nm must be one of {sorted(NODE_DEFAULTS)}, got {self.node_nm}")
        if self.energy_per_spike_j <= 0:
            raise ValidationError("energy_per_spike_j must be > 0")
        if self.read_endurance <= 0:
            raise ValidationError("read_endurance must be > 0")
        if self.bits_per_synapse not in (1, 2):
            raise ValidationError("bits_per_synapse must be 1 or 2")
        if self.hop_energy_j < 0 or self.n_ref < 1:
            raise ValidationError("hop_energy_j must be >= 0 and n_ref >= 1")

    @property
    def n_levels(self) -> int:
        return 2**self.bits_per_synapse

    @classmethod
    def for_node(cls, node_nm: int, **overrides) -> "TechTemplate":
        if node_nm not in NODE_DEFAULTS:
            raise ValidationError(f"no defaults for {node_nm}nm")
        return cls(node_nm=node_nm, **{**NODE_DEFAULTS[node_nm], **overrides})


# -- topologies ---------------------------------------------------------------


class Topology:
    """Link graph with tiles on a subset of its nodes.

    Tiles are numbered ``0..n_tiles-1`` and sit on nodes with the same index;
    switch-only nodes (two-stage NoC) come after them.
    """

    n_tiles: int
    n_nodes: int
    shared_links = False

    def neighbors(self, node: int) -> tuple[int, ...]:
        raise NotImplementedError

    def label(self, tile: int):
        return tile

    def index(self, label) -> int:
        if isinstance(label, (tuple, list)) or not 0 <= int(label) < self.n_tiles:
            raise ValidationError(f"tile {label!r} not on topology {self.spec}")
        return int(label)

    @cached_property
    def node_dist(self) -> np.ndarray:
        dist = np.full((self.n_nodes, self.n_nodes), -1, dtype=np.int64)
        for s in range(self.n_nodes):
            dist[s, s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for v in self.neighbors(u):
                    if dist[s, v] < 0:
                        dist[s, v] = dist[s, u] + 1
                        q.append(v)
        return dist

    @cached_property
    def tile_dist(self) -> np.ndarray:
        return np.ascontiguousarray(self.node_dist[: self.n_tiles, : self.n_tiles])

    @cached_property
    def next_hop(self) -> np.ndarray:
        """Shortest-path next node toward each destination, lowest node id on ties."""
        dist = self.node_dist
        nh = np.full((self.n_nodes, self.n_nodes), -1, dtype=np.int64)
        for u in range(self.n_nodes):
            for d in range(self.n_nodes):
                if u == d:
                    continue
                for v in sorted(self.neighbors(u)):
                    if dist[v, d] == dist[u, d] - 1:
                        nh[u, d] = v
                        break
        return nh

    def segments(self, a, b) -> int:
        return int(self.tile_dist[self.index(a), self.index(b)])

    def hops(self, a, b) -> int:
        return max(0, self.segments(a, b) - 1)

    @property
    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Mesh(Topology):
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"mesh dimensions must be positive, got {self.width}x{self.height}")

    @property
    def n_tiles(self) -> int:
        return self.width * self.height

    @property
    def n_nodes(self) -> int:
        return self.n_tiles

    def coord(self, node: int) -> tuple[int, int]:
        return node % self.width, node // self.width

    def node_at(self, x: int, y: int) -> int:
        return y * self.width + x

    def label(self, tile: int) -> tuple[int, int]:
        return self.coord(tile)

    def index(self, label) -> int:
        if isinstance(label, (tuple, list)) and len(label) == 2:
            x, y = int(label[0]), int(label[1])
            if 0 <= x < self.width and 0 <= y < self.height:
                return self.node_at(x, y)
        raise ValidationError(f"coordinate {label!r} is off the {self.width}x{self.height} grid")

    def neighbors(self, node: int) -> tuple[int, ...]:
        x, y = self.coord(node)
        out = []
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < self.width and 0 <= ny < self.height:
                out.append(self.node_at(nx, ny))
        return tuple(out)

    @cached_property
    def tile_dist(self) -> np.ndarray:
        xs = np.arange(self.n_tiles) % self.width
        ys = np.arange(self.n_tiles) // self.width
        return np.abs(xs[:, None] - xs[None, :]) + np.abs(ys[:, None] - ys[None, :])

    @property
    def node_dist(self) -> np.ndarray:
        return self.tile_dist

    @property
    def spec(self) -> str:
        return f"mesh:{self.width}x{self.height}"


@dataclass(frozen=True)
class SegmentedBus(Topology):
    """Tiles on a line; each segment between neighbours is one time-shared link."""

    segments_count: int
    shared_links = True

    def __post_init__(self):
        if self.segments_count < 1:
            raise ValidationError("segmented bus needs at least one tile")

    @property
    def n_tiles(self) -> int:
        return self.segments_count

    @property
    def n_nodes(self) -> int:
        return self.segments_count

    def neighbors(self, node: int) -> tuple[int, ...]:
        return tuple(v for v in (node + 1, node - 1) if 0 <= v < self.n_nodes)

    @property
    def spec(self) -> str:
        return f"bus:{self.segments_count}"


@dataclass(frozen=True)
class TwoStageNoc(Topology):
    """``groups`` local switches of ``group_size`` tiles each, joined by one global switch."""

    groups: int
    group_size: int

    def __post_init__(self):
        if self.groups < 1 or self.group_size < 1:
            raise ValidationError("two-stage NoC stage sizes must be positive")

    @property
    def n_tiles(self) -> int:
        return self.groups * self.group_size

    @property
    def n_nodes(self) -> int:
        return self.n_tiles + self.groups + 1

    def neighbors(self, node: int) -> tuple[int, ...]:
        t = self.n_tiles
        root = t + self.groups
        if node < t:
            return (t + node // self.group_size,)
        if node < root:
            g = node - t
            return tuple(range(g * self.group_size, (g + 1) * self.group_size)) + (root,)
        return tuple(range(t, root))

    @property
    def spec(self) -> str:
        return f"twostage:{self.groups},{self.group_size}"


def parse_topology(text: str) -> Topology:
    kind, _, arg = text.strip().partition(":")
    try:
        if kind == "mesh":
            w, _, h = arg.lower().partition("x")
            return Mesh(int(w), int(h))
        if kind == "bus":
            return SegmentedBus(int(arg))
        if kind == "twostage":
            a, _, b = arg.partition(",")
            return TwoStageNoc(int(a), int(b))
    except ValueError:
        pass
    raise ValidationError(f"bad topology {text!r}; expected mesh:WxH, bus:K or twostage:A,B")


def mesh_for(n_clusters: int) -> Mesh:
    side = 1
    while side * side < max(1, n_clusters):
        side += 1
    return Mesh(side, side)


# -- hardware spec --------------------------------------------------------------


@dataclass(frozen=True)
class HardwareSpec:
    """``topology`` may be None, meaning size a square mesh to the mapped cluster count."""

    topology: Topology | None = None
    capacity: CrossbarCapacity = CrossbarCapacity(128)
    parasitics: ParasiticsTemplate = field(default_factory=ParasiticsTemplate)
    tech: TechTemplate = field(default_factory=TechTemplate)

    def with_topology(self, topology: Topology) -> "HardwareSpec":
        return dataclasses.replace(self, topology=topology)


_ENUM_FIELDS = {"neuron_tech": NeuronTech, "synapse_tech": SynapseTech, "access_device": AccessDevice}
_INT_FIELDS = {"node_nm", "bits_per_synapse", "read_endurance", "n_ref"}


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines with ``#`` comments."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ParseError(source, lineno, f"expected 'key = value', got {raw.strip()!r}")
        out[key.strip()] = val.strip()
    return out


def parse_hardware(text: str, source: str = "<hardware>") -> HardwareSpec:
    kv = parse_kv(text, source)
    par_names = {f.name for f in dataclasses.fields(ParasiticsTemplate)}
    tech_names = {f.name for f in dataclasses.fields(TechTemplate)}
    par, tech = {}, {}
    topology = None
    capacity = CrossbarCapacity(128)
    try:
        node = int(float(kv["node_nm"])) if "node_nm" in kv else 45
        tech.update(NODE_DEFAULTS.get(node, {}))
        for key, val in kv.items():
            if key == "topology":
                topology = None if val == "mesh:auto" else parse_topology(val)
            elif key == "capacity":
                capacity = CrossbarCapacity(int(val))
            elif key in par_names:
                par[key] = float(val)
            elif key in _ENUM_FIELDS:
                tech[key] = _ENUM_FIELDS[key](val)
            elif key in _INT_FIELDS:
                tech[key] = int(float(val))
            elif key in tech_names:
                tech[key] = float(val)
            else:
                raise ValidationError(f"{source}: unknown hardware field {key!r}")
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{source}: {exc}") from None
    return HardwareSpec(topology, capacity, ParasiticsTemplate(**par), TechTemplate(**tech))


def format_hardware(hw: HardwareSpec) -> str:
    lines = [f"topology = {hw.topology.spec if hw.topology else 'mesh:auto'}", f"capacity = {hw.capacity.n}"]
    for f in dataclasses.fields(hw.parasitics):
        lines.append(f"{f.name} = {getattr(hw.parasitics, f.name)!r}")
    for f in dataclasses.fields(hw.tech):
        val = getattr(hw.tech, f.name)
        lines.append(f"{f.name} = {val.value if isinstance(val, enum.Enum) else repr(val)}")
    return "\n".join(lines) + "\n"


def load_hardware(path: str | Path) -> HardwareSpec:
    path = Path(path)
    return parse_hardware(path.read_text(), str(path))
