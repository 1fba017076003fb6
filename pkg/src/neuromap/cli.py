"""Command line: ``neuromap <verb> ...``.

Exit codes: 0 ok, 1 usage, 2 validation, 3 infeasible mapping, 4 simulation incomplete.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .decompose import decompose, parse_mode
from .errors import NeuromapError, SimulationIncomplete, ValidationError
from .hardware import HardwareSpec, load_hardware, mesh_for, parse_kv, parse_topology
from .model import TICKS_PER_MS, CrossbarCapacity, load_workload, ms_to_ticks, save_workload
from .nocsim import SimConfig, gen_traffic, metrics, parse_routing, parse_traffic, simulate
from .partition import Algorithm, Objective, PartitionConfig, format_clusters, format_global_edges, load_clusters
from .partition import partition as run_partition
from .pipeline import (PRESETS, PipelineConfig, comparison_csv, emit_plot_data, run_pipeline)
from .placement import PlaceAlgorithm, PlacementConfig, format_placement, place
from .pso import PsoParams
from .report import SimulationReport, load_report
from .synth import gen_synthetic, parse_synth


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _hardware(path: str | None) -> HardwareSpec:
    return load_hardware(path) if path else HardwareSpec()


# -- verbs ----------------------------------------------------------------------------


def cmd_gen(a) -> int:
    frame_ticks = ms_to_ticks(a.frame_ms, a.ticks_per_ms)
    spec = parse_synth(a.kind, frames=a.frames, frame_ticks=max(1, frame_ticks),
                       input_rate=a.input_rate, hidden_rate=a.hidden_rate)
    wl = gen_synthetic(spec, a.seed)
    save_workload(wl, a.out_model, a.out_trace)
    print(f"{wl.n_neurons} neurons, {len(wl.synapses)} synapses, {wl.trace.n_spikes} spikes "
          f"over {wl.trace.n_frames} frames", file=sys.stderr)
    return 0


def cmd_decompose(a) -> int:
    wl = load_workload(a.model, a.trace)
    dec = decompose(wl, parse_mode(a.mode))
    save_workload(dec.base, a.out, a.out_trace)
    if a.fit_map:
        lines = [f"{v}: {','.join(map(str, units))}" for v, units in sorted(dec.fit_map.items())]
        Path(a.fit_map).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"{dec.n_new_units} FIT units added", file=sys.stderr)
    return 0


def cmd_partition(a) -> int:
    wl = load_workload(a.model, a.trace)
    cfg = PartitionConfig(Objective(a.objective), Algorithm(a.algo), CrossbarCapacity(a.capacity), a.seed,
                          PsoParams(swarm_size=a.swarm, iterations=a.iterations))
    g = run_partition(wl, cfg)
    _write(a.out, format_clusters(g))
    if a.edges:
        _write(a.edges, format_global_edges(g))
    spikes = sum(s.spikes for s in g.global_synapses)
    print(f"{g.n_clusters} clusters, {spikes:g} global spikes/frame", file=sys.stderr)
    return 0


def cmd_place(a) -> int:
    hw = _hardware(a.hw)
    wl = load_workload(a.model, a.trace)
    g = load_clusters(a.clusters, wl, hw.capacity)
    topo = hw.topology or mesh_for(g.n_clusters)
    cfg = PlacementConfig(PlaceAlgorithm(a.algo), a.seed, PsoParams(swarm_size=a.swarm, iterations=a.iterations),
                          a.restarts)
    p = place(g, topo, cfg)
    _write(a.out, format_placement(p))
    from .placement import placement_cost, placement_hops
    print(f"{topo.spec}: cost {placement_cost(g, p):g} spike-segments, {placement_hops(g, p):g} spike-hops",
          file=sys.stderr)
    return 0


def cmd_nocsim(a) -> int:
    hw = _hardware(a.hw)
    topo = parse_topology(a.topo)
    routing = parse_routing(a.routing, a.dyad_threshold)
    traffic = gen_traffic(parse_traffic(a.traffic), topo.n_tiles, a.cycles, a.seed)
    sim = simulate(traffic, topo, routing, SimConfig(a.max_cycles, a.buffer_depth, a.router_delay))
    segs, hops = metrics.segment_hop_totals(sim.flits)
    report = SimulationReport(
        label=f"{a.traffic}",
        comm_energy_j=metrics.comm_energy(sim.flits, hw.tech),
        latency=metrics.latency_stats(sim.flits),
        isi_distortion=metrics.mean_isi_distortion(sim.flits),
        spike_disorder=metrics.mean_spike_disorder(sim.flits),
        flits=len(sim.flits),
        undelivered=sim.undelivered,
        segments_total=segs,
        hops_total=hops,
        topology=topo.spec,
        routing=routing.name,
    )
    if a.log:
        _write(a.log, sim.log_csv())
    _write(a.report, report.to_json())
    if sim.undelivered:
        raise SimulationIncomplete(f"{sim.undelivered} of {len(sim.flits)} flits undelivered after {a.max_cycles} cycles")
    return 0


def cmd_run(a) -> int:
    hw = _hardware(a.hw)
    if a.topo:
        hw = hw.with_topology(parse_topology(a.topo))
    wl = load_workload(a.model, a.trace)
    names = [p.strip() for p in a.presets.split(",") if p.strip()]
    unknown = [p for p in names if p not in PRESETS]
    if unknown:
        raise ValidationError(f"unknown presets {unknown}; choose from {sorted(PRESETS)}")
    cfg = PipelineConfig(
        presets=tuple(PRESETS[p] for p in names),
        hw=hw,
        seed=a.seed,
        routing=parse_routing(a.routing, a.dyad_threshold),
        sim=SimConfig(a.max_cycles, a.buffer_depth, a.router_delay),
        out_dir=Path(a.out) if a.out else None,
        workload_label=a.label or Path(a.model).stem,
    )
    results = run_pipeline(wl, cfg)
    sys.stdout.write(comparison_csv([r.report for r in results]))
    return 0


def cmd_report(a) -> int:
    paths = []
    for p in map(Path, a.reports):
        paths += sorted(p.glob("*/report.json")) if p.is_dir() else [p]
    if not paths:
        raise ValidationError("no reports found")
    reports = [load_report(p) for p in paths]
    _write(a.out, comparison_csv(reports))
    if a.plots:
        emit_plot_data([(a.label, r) for r in reports], a.plots)
    return 0


# -- parser ---------------------------------------------------------------------------


def _add_pso(p, iterations=200):
    p.add_argument("--swarm", type=int, default=20, help="PSO swarm size")
    p.add_argument("--iterations", type=int, default=iterations, help="PSO iterations")


def _add_sim(p):
    p.add_argument("--routing", default="xy", help="xy|westfirst|northlast|negfirst|oddeven|dyad|table:<file>")
    p.add_argument("--dyad-threshold", type=int, default=3)
    p.add_argument("--buffer-depth", type=int, default=4)
    p.add_argument("--router-delay", type=int, default=0)
    p.add_argument("--max-cycles", type=int, default=1_000_000)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="neuromap", description="Map SNN workloads onto tiled crossbar hardware and simulate them.")
    ap.add_argument("--config", help="key = value file supplying option defaults")
    sub = ap.add_subparsers(dest="verb", parser_class=_Parser)

    p = sub.add_parser("gen", help="write a synthetic workload")
    p.add_argument("--kind", required=True, help="community:k,p_in,p_out[,size] | layered:w1,w2,... | highfanin:k")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--frame-ms", type=float, default=0.1)
    p.add_argument("--ticks-per-ms", type=int, default=TICKS_PER_MS)
    p.add_argument("--input-rate", type=float, default=6.0, help="mean spikes per frame, input neurons")
    p.add_argument("--hidden-rate", type=float, default=3.0, help="mean spikes per frame, other neurons")
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-trace", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("decompose", help="rewrite high-fanin neurons into FIT units")
    p.add_argument("--mode", default="full", help="full | limit:<f>")
    p.add_argument("--in", dest="model", required=True)
    p.add_argument("--trace")
    p.add_argument("--out", required=True)
    p.add_argument("--out-trace")
    p.add_argument("--fit-map")
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("partition", help="cluster a workload")
    p.add_argument("--algo", default="kl", choices=[x.value for x in Algorithm])
    p.add_argument("--objective", default="spikes", choices=[x.value for x in Objective])
    p.add_argument("--capacity", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", required=True)
    p.add_argument("--trace")
    p.add_argument("--out", default="-")
    p.add_argument("--edges")
    _add_pso(p)
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("place", help="assign clusters to tiles")
    p.add_argument("--algo", default="pso", choices=[x.value for x in PlaceAlgorithm])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hw")
    p.add_argument("--model", required=True)
    p.add_argument("--trace")
    p.add_argument("--clusters", required=True)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--out", default="-")
    _add_pso(p, 100)
    p.set_defaults(fn=cmd_place)

    p = sub.add_parser("nocsim", help="simulate synthetic or replayed traffic")
    p.add_argument("--topo", default="mesh:4x4", help="mesh:WxH | bus:K | twostage:A,B")
    p.add_argument("--traffic", default="random:0.05",
                   help="random:<rate> | transpose|bitrev|butterfly|shuffle[:<rate>] | table:<file>")
    p.add_argument("--cycles", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hw")
    p.add_argument("--log")
    p.add_argument("--report", default="-")
    _add_sim(p)
    p.set_defaults(fn=cmd_nocsim)

    p = sub.add_parser("run", help="full pipeline for one or more presets")
    p.add_argument("--model", required=True)
    p.add_argument("--trace")
    p.add_argument("--hw")
    p.add_argument("--topo", help="override the hardware topology")
    p.add_argument("--presets", default=",".join(PRESETS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--label")
    _add_sim(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("report", help="compare saved reports")
    p.add_argument("reports", nargs="+", help="report.json files or run output directories")
    p.add_argument("--out", default="-")
    p.add_argument("--plots")
    p.add_argument("--label", default="workload")
    p.set_defaults(fn=cmd_report)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    values = parse_kv(path.read_text(), str(path))
    subparsers = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    dests = {}
    for sp in subparsers.choices.values():
        for act in sp._actions:
            if act.dest not in ("help", "fn"):
                dests.setdefault(act.dest, []).append((sp, act))
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ValidationError(f"{path}: unknown config key {key!r}")
        for sp, act in dests[dest]:
            try:
                val = act.type(raw) if act.type else raw
            except ValueError:
                raise ValidationError(f"{path}: bad value {raw!r} for {key}") from None
            act.default = val
            # config supplies the value, so the flag is no longer mandatory
            act.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        _apply_config(ap, argv)
        args = ap.parse_args(argv)
        if not getattr(args, "fn", None):
            raise UsageError(ap.format_usage().strip())
        return args.fn(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NeuromapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
