"""End-to-end mapping and evaluation: decompose, cluster, place, simulate, report.

The three built-in presets re-create the evaluated configurations:

- ``pycarl-style``: no decomposition, arbitrary clustering, arbitrary placement.
- ``spinemap-style``: no decomposition, spike-minimizing clustering (the
  better of KL and PSO), PSO placement.
- ``decomposed-style``: full fanin-of-two decomposition, density-maximizing
  greedy packing, PSO placement.

Presets without decomposition must drop inputs of neurons whose fanin exceeds
the crossbar; the count is reported as ``pruned_synapses``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import tilesim
from .decompose import decompose, parse_mode, prune_fanin
from .errors import NeuromapError, SimulationIncomplete, StageError
from .hardware import HardwareSpec, Topology, mesh_for
from .model import ClusteredGraph, SnnWorkload
from .nocsim import Routing, SimConfig, simulate
from .nocsim import metrics
from .partition import Algorithm, Objective, PartitionConfig, cost_global_spikes, partition
from .placement import PlaceAlgorithm, Placement, PlacementConfig, place
from .pso import PsoParams
from .report import SimulationReport


@dataclass(frozen=True)
class StagePlan:
    label: str
    # None keeps the graph and prunes excess fanin; "full" or "limit:<f>" decomposes
    decompose: str | None = None
    algorithms: tuple[Algorithm, ...] = (Algorithm.ARBITRARY,)
    objective: Objective = Objective.MIN_GLOBAL_SPIKES
    placement: PlaceAlgorithm = PlaceAlgorithm.ARBITRARY


PRESETS = {
    "pycarl-style": StagePlan("pycarl-style"),
    "spinemap-style": StagePlan(
        "spinemap-style", None, (Algorithm.KL, Algorithm.PSO), Objective.MIN_GLOBAL_SPIKES, PlaceAlgorithm.PSO
    ),
    "decomposed-style": StagePlan(
        "decomposed-style", "full", (Algorithm.GREEDY,), Objective.MIN_CLUSTER_COUNT, PlaceAlgorithm.PSO
    ),
}
BASELINE = "pycarl-style"


@dataclass(frozen=True)
class PipelineConfig:
    presets: tuple[StagePlan, ...] = tuple(PRESETS.values())
    hw: HardwareSpec = field(default_factory=HardwareSpec)
    seed: int = 0
    routing: Routing = field(default_factory=Routing)
    sim: SimConfig = field(default_factory=SimConfig)
    partition_pso: PsoParams = field(default_factory=PsoParams)
    placement_pso: PsoParams = PsoParams(iterations=100)
    placement_restarts: int = 4
    out_dir: Path | None = None
    workload_label: str = "workload"


def sub_seed(root: int, name: str) -> int:
    """Stage seed derived from the root seed and a stage name."""
    digest = hashlib.sha256(f"{root}/{name}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass
class MappedPreset:
    plan: StagePlan
    workload: SnnWorkload
    graph: ClusteredGraph
    pruned: int = 0
    fit_units: int = 0


@dataclass
class PresetResult:
    plan: StagePlan
    mapped: MappedPreset
    placement: Placement
    sim: object
    report: SimulationReport


def map_preset(workload: SnnWorkload, plan: StagePlan, cfg: PipelineConfig) -> MappedPreset:
    cap = cfg.hw.capacity
    pruned = fit_units = 0
    try:
        if plan.decompose is None:
            work, pruned = prune_fanin(workload, cap.n)
        else:
            dec = decompose(workload, parse_mode(plan.decompose))
            work, fit_units = dec.base, dec.n_new_units
    except NeuromapError as exc:
        raise StageError("decompose", exc) from exc
    seed = sub_seed(cfg.seed, "partition")
    best = None
    try:
        for algo in plan.algorithms:
            pcfg = PartitionConfig(plan.objective, algo, cap, seed, cfg.partition_pso)
            g = partition(work, pcfg)
            key = (cost_global_spikes(g), g.n_clusters) if plan.objective is Objective.MIN_GLOBAL_SPIKES \
                else (g.n_clusters, cost_global_spikes(g))
            if best is None or key < best[0]:
                best = (key, g)
    except NeuromapError as exc:
        raise StageError("partition", exc) from exc
    return MappedPreset(plan, work, best[1], pruned, fit_units)


def placed_traffic(workload: SnnWorkload, g: ClusteredGraph, p: Placement) -> list[tuple]:
    """One flit per global synapse per presynaptic spike, injected at the spike tick."""
    spikes = workload.trace.spike_times()
    rows = []
    for conn, gs in enumerate(g.global_synapses):
        src, dst = p.tiles[gs.src_cluster], p.tiles[gs.dst_cluster]
        for t in spikes.get(gs.src, ()):
            rows.append((t, src, dst, (gs.src, t), conn))
    return rows


def evaluate_preset(m: MappedPreset, topo: Topology, cfg: PipelineConfig) -> PresetResult:
    plan, g, work = m.plan, m.graph, m.workload
    hw = cfg.hw
    try:
        pcfg = PlacementConfig(plan.placement, sub_seed(cfg.seed, "place"), cfg.placement_pso, cfg.placement_restarts)
        p = place(g, topo, pcfg)
    except NeuromapError as exc:
        raise StageError("place", exc) from exc

    traffic = placed_traffic(work, g, p)
    expected = cost_global_spikes(g) * work.trace.n_frames
    if abs(len(traffic) - expected) > 1e-6 * max(1.0, expected):
        raise StageError("simulate", NeuromapError(
            f"{len(traffic)} flits generated but the clustering carries {expected:g} global spikes"))
    try:
        sim = simulate(traffic, topo, cfg.routing, cfg.sim)
    except NeuromapError as exc:
        raise StageError("simulate", exc) from exc

    tiles = tilesim.build_tiles(work, g, hw.parasitics, hw.tech)
    lifetime = None
    if work.trace.n_frames:
        tilesim.replay_trace(work, tiles)
        lifetime = tilesim.system_lifetime([tilesim.inference_lifetime(t) for t in tiles])
    frames = work.trace.n_frames
    row_spikes = sum(tilesim.tile_spikes_processed(work, g)) * frames
    profile = tilesim.delay_profile(tilesim.CrossbarInstance(hw.capacity.n, hw.parasitics, hw.tech))
    segs, hops = metrics.segment_hop_totals(sim.flits)
    notes = ["energy per spike is treated as independent of spike rate"]
    if plan.decompose and plan.decompose != "full":
        notes.append(f"decomposition mode {plan.decompose} builds fanin-limited trees (extension)")
    if m.pruned:
        notes.append(f"{m.pruned} synapses dropped to fit fanin {hw.capacity.n}")
    if lifetime is None:
        notes.append("inference lifetime unbounded: no programmed cell is ever read")

    report = SimulationReport(
        label=plan.label,
        cluster_count=g.n_clusters,
        global_spikes_per_frame=cost_global_spikes(g),
        local_spikes_per_frame=g.local_spikes_per_frame(work),
        comm_energy_j=metrics.comm_energy(sim.flits, hw.tech),
        compute_energy_j=tilesim.compute_energy(hw.capacity.n, row_spikes, hw.tech),
        latency=metrics.latency_stats(sim.flits),
        isi_distortion=metrics.mean_isi_distortion(sim.flits),
        spike_disorder=metrics.mean_spike_disorder(sim.flits),
        inference_lifetime_frames=lifetime,
        flits=len(sim.flits),
        undelivered=sim.undelivered,
        segments_total=segs,
        hops_total=hops,
        pruned_synapses=m.pruned,
        fit_units=m.fit_units,
        delay_shortest_s=profile.shortest,
        delay_longest_s=profile.longest,
        topology=topo.spec,
        routing=cfg.routing.name,
        notes=tuple(notes),
    )
    return PresetResult(plan, m, p, sim, report)


def run_pipeline(workload: SnnWorkload, cfg: PipelineConfig) -> list[PresetResult]:
    """Run every preset on one workload. Presets share one topology: the
    configured one, or the smallest square mesh holding the largest mapping.

    With ``cfg.out_dir`` set, finished presets are written as they complete,
    so a later failure leaves earlier outputs in place.
    """
    mapped = [map_preset(workload, plan, cfg) for plan in cfg.presets]
    topo = cfg.hw.topology or mesh_for(max((m.graph.n_clusters for m in mapped), default=1))
    results = []
    for m in mapped:
        res = evaluate_preset(m, topo, cfg)
        results.append(res)
        if cfg.out_dir is not None:
            write_preset(res, Path(cfg.out_dir))
        if res.report.undelivered:
            raise StageError("simulate", SimulationIncomplete(
                f"{m.plan.label}: {res.report.undelivered} flits undelivered after {cfg.sim.max_cycles} cycles"))
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        (out / "comparison.csv").write_text(comparison_csv([r.report for r in results]))
        emit_plot_data([(cfg.workload_label, r.report) for r in results], out / "plots")
    return results


def write_preset(res: PresetResult, out: Path) -> None:
    from .partition import format_clusters, format_global_edges
    from .placement import format_placement

    d = out / res.plan.label
    d.mkdir(parents=True, exist_ok=True)
    (d / "report.json").write_text(res.report.to_json())
    (d / "clusters.txt").write_text(format_clusters(res.mapped.graph))
    (d / "global_edges.csv").write_text(format_global_edges(res.mapped.graph))
    (d / "placement.txt").write_text(format_placement(res.placement))
    (d / "flits.csv").write_text(res.sim.log_csv())


# -- comparison tables ----------------------------------------------------------------

METRICS = {
    "cluster_count": lambda r: r.cluster_count,
    "global_spikes_per_frame": lambda r: r.global_spikes_per_frame,
    "local_spikes_per_frame": lambda r: r.local_spikes_per_frame,
    "comm_energy_j": lambda r: r.comm_energy_j,
    "compute_energy_j": lambda r: r.compute_energy_j,
    "latency_mean": lambda r: r.latency.mean,
    "latency_p99": lambda r: r.latency.p99,
    "isi_distortion": lambda r: r.isi_distortion,
    "spike_disorder": lambda r: r.spike_disorder,
    "inference_lifetime_frames": lambda r: r.inference_lifetime_frames,
}


def normalize(value, base):
    """``value / base``; 0/0 is 1.0, and None (unbounded) on either side gives None."""
    if value is None or base is None:
        return None
    if base == 0:
        return 1.0 if value == 0 else math.inf
    return value / base


def _baseline(reports):
    for r in reports:
        if r.label == BASELINE:
            return r
    return reports[0]


def comparison(reports: list[SimulationReport]) -> dict[str, dict[str, float | None]]:
    """Each metric of each report divided by the baseline preset's value."""
    base = _baseline(reports)
    return {r.label: {k: normalize(f(r), f(base)) for k, f in METRICS.items()} for r in reports}


def _cell(v) -> str:
    return "" if v is None else repr(float(v)) if isinstance(v, float) else str(v)


def comparison_csv(reports: list[SimulationReport]) -> str:
    table = comparison(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["preset"] + list(METRICS))
    for label, row in table.items():
        w.writerow([label] + [_cell(row[k]) for k in METRICS])
    return buf.getvalue()


PLOT_HEADER = "# empty value = unbounded (lifetime with no cell reads); empty normalized = not comparable\n"


def plot_rows(entries: list[tuple[str, SimulationReport]]) -> dict[str, list[tuple]]:
    by_workload: dict[str, list[SimulationReport]] = {}
    for wl, r in entries:
        by_workload.setdefault(wl, []).append(r)
    out: dict[str, list[tuple]] = {k: [] for k in METRICS}
    for wl, r in entries:
        base = _baseline(by_workload[wl])
        for k, f in METRICS.items():
            out[k].append((wl, r.label, f(r), normalize(f(r), f(base))))
    return out


def emit_plot_data(entries: list[tuple[str, SimulationReport]], out_dir: str | Path) -> list[Path]:
    """One CSV per metric with columns workload, preset, value, normalized."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric, rows in plot_rows(entries).items():
        buf = io.StringIO()
        buf.write(PLOT_HEADER)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["workload", "preset", "value", "normalized"])
        for wl, label, val, norm in rows:
            w.writerow([wl, label, _cell(val), _cell(norm)])
        path = out_dir / f"{metric}.csv"
        path.write_text(buf.getvalue())
        paths.append(path)
    return paths
