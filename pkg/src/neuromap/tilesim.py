"""Crossbar tile model: parasitic path delay, compute energy, NVM states and read wear."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .hardware import ParasiticsTemplate, TechTemplate
from .model import Cluster, ClusteredGraph, NeuronKind, SnnWorkload


def quantize_states(weights, bits: int) -> np.ndarray:
    """Uniform levels of |w| / max|w|; level 0 is the high-resistance state."""
    if bits not in (1, 2):
        raise ValidationError(f"bits_per_synapse must be 1 or 2, got {bits}")
    mag = np.abs(np.asarray(weights, dtype=np.float64))
    top = mag.max() if mag.size else 0.0
    if top == 0.0:
        return np.zeros(mag.shape, dtype=np.int64)
    return np.rint(mag / top * (2**bits - 1)).astype(np.int64)


def quantize_state(weight: float, max_weight: float, bits: int) -> int:
    return int(quantize_states([weight, max_weight], bits)[0]) if max_weight else 0


@dataclass(frozen=True)
class PathDelayProfile:
    delays: np.ndarray = field(compare=False)
    shortest: float
    longest: float


@dataclass
class CrossbarInstance:
    """One tile's n x n array. Rows are presynaptic sources, columns are member neurons."""

    n: int
    parasitics: ParasiticsTemplate
    tech: TechTemplate
    row_ids: tuple[int, ...] = ()
    col_ids: tuple[int, ...] = ()
    programmed: np.ndarray | None = None
    cell_states: np.ndarray | None = None
    cell_read_counts: np.ndarray | None = None
    frames_recorded: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("crossbar dimension must be >= 1")
        if len(self.row_ids) > self.n or len(self.col_ids) > self.n:
            raise ValidationError("cluster does not fit this crossbar")
        shape = (self.n, self.n)
        if self.programmed is None:
            self.programmed = np.zeros(shape, dtype=bool)
        if self.cell_states is None:
            self.cell_states = np.zeros(shape, dtype=np.int64)
        if self.cell_read_counts is None:
            self.cell_read_counts = np.zeros(shape, dtype=np.int64)

    @classmethod
    def from_cluster(cls, workload: SnnWorkload, cluster: Cluster, n: int,
                     parasitics: ParasiticsTemplate, tech: TechTemplate) -> "CrossbarInstance":
        rows = tuple(sorted(cluster.sources))
        cols = tuple(m for m in cluster.members if workload.neurons[m].kind is not NeuronKind.INPUT)
        xbar = cls(n, parasitics, tech, rows, cols)
        r_of = {r: i for i, r in enumerate(rows)}
        c_of = {c: j for j, c in enumerate(cols)}
        cells, weights = [], []
        for s in workload.synapses:
            if s.dst in c_of:
                cells.append((r_of[s.src], c_of[s.dst]))
                weights.append(s.weight)
        if cells:
            idx = np.array(cells)
            xbar.programmed[idx[:, 0], idx[:, 1]] = True
            xbar.cell_states[idx[:, 0], idx[:, 1]] = quantize_states(weights, tech.bits_per_synapse)
        return xbar

    def row_of(self, neuron: int) -> int:
        return self.row_ids.index(neuron)


def delay_grid(xbar: CrossbarInstance) -> np.ndarray:
    p = xbar.parasitics
    return kernels.elmore_grid(xbar.n, p.r_wl, p.r_bl, p.wl_segment_c, p.bl_segment_c)


def path_delay(xbar: CrossbarInstance, i: int, j: int) -> float:
    """Elmore delay from the row-i driver along the wordline to column j, then
    down the bitline to the sense amplifier; (i + j + 1) RC segments."""
    if not (0 <= i < xbar.n and 0 <= j < xbar.n):
        raise ValidationError(f"cell ({i},{j}) outside the {xbar.n}x{xbar.n} crossbar")
    p = xbar.parasitics
    r_cum = 0.0
    delay = 0.0
    for _ in range(j + 1):
        r_cum += p.r_wl
        delay += r_cum * p.wl_segment_c
    for _ in range(i):
        r_cum += p.r_bl
        delay += r_cum * p.bl_segment_c
    return delay


def delay_profile(xbar: CrossbarInstance) -> PathDelayProfile:
    grid = delay_grid(xbar)
    return PathDelayProfile(grid, float(grid.min()), float(grid.max()))


def compute_energy(xbar_or_n, spikes: float, tech: TechTemplate | None = None) -> float:
    """Spikes times the per-spike energy scaled by (n / n_ref)^2."""
    if isinstance(xbar_or_n, CrossbarInstance):
        n, tech = xbar_or_n.n, tech or xbar_or_n.tech
    else:
        n = int(xbar_or_n)
    if tech is None:
        raise ValidationError("compute_energy needs a technology template")
    return spikes * tech.energy_per_spike_j * (n / tech.n_ref) ** 2


def record_reads(xbar: CrossbarInstance, activity: Mapping[int, int]) -> None:
    """Add one frame of activity: row index -> spike count on that row."""
    for row, count in activity.items():
        if count < 0:
            raise ValidationError("spike counts must be >= 0")
        if not 0 <= row < xbar.n:
            raise ValidationError(f"row {row} outside the crossbar")
        if count:
            xbar.cell_read_counts[row] += xbar.programmed[row] * int(count)
    xbar.frames_recorded += 1


def inference_lifetime(xbar: CrossbarInstance, frames: int | None = None) -> int | None:
    """Frames until the hottest cell reaches read endurance; None means unbounded."""
    frames = xbar.frames_recorded if frames is None else frames
    if frames < 1:
        raise ValidationError("lifetime needs at least one recorded frame")
    hottest = int(xbar.cell_read_counts.max())
    if hottest == 0:
        return None
    # floor(endurance / (hottest / frames)) without float rounding
    return xbar.tech.read_endurance * frames // hottest


def system_lifetime(lifetimes: Sequence[int | None]) -> int | None:
    finite = [x for x in lifetimes if x is not None]
    return min(finite) if finite else None


def build_tiles(workload: SnnWorkload, g: ClusteredGraph, parasitics: ParasiticsTemplate,
                tech: TechTemplate) -> list[CrossbarInstance]:
    return [CrossbarInstance.from_cluster(workload, c, g.capacity.n, parasitics, tech) for c in g.clusters]


def replay_trace(workload: SnnWorkload, tiles: Sequence[CrossbarInstance]) -> None:
    """Count reads frame by frame from the workload's spike trace."""
    rows = [{nid: i for i, nid in enumerate(t.row_ids)} for t in tiles]
    for frame in workload.trace.frames:
        counts: dict[int, int] = {}
        for neuron, _ in frame:
            counts[neuron] = counts.get(neuron, 0) + 1
        for tile, r_of in zip(tiles, rows):
            record_reads(tile, {r_of[nid]: c for nid, c in counts.items() if nid in r_of})


def tile_spikes_processed(workload: SnnWorkload, g: ClusteredGraph) -> list[float]:
    """Per tile: presynaptic spikes per frame arriving on its rows."""
    rates = workload.rates
    return [float(sum(rates[s] for s in c.sources)) for c in g.clusters]
