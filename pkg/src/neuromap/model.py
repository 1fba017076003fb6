"""Workload types shared by every stage: neuron graphs, spike traces and clusters."""

from __future__ import annotations

import csv
import enum
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError


# 1 tick = 1 interconnect cycle; biological milliseconds convert at this rate
TICKS_PER_MS = 1000


def ms_to_ticks(ms: float, ticks_per_ms: int = TICKS_PER_MS) -> int:
    if ms < 0 or ticks_per_ms < 1:
        raise ValidationError("durations must be >= 0 and ticks_per_ms >= 1")
    return int(round(ms * ticks_per_ms))


class NeuronKind(str, enum.Enum):
    INPUT = "input"
    HIDDEN = "hidden"
    OUTPUT = "output"


@dataclass(frozen=True)
class NeuronDecl:
    id: int
    kind: NeuronKind = NeuronKind.HIDDEN


@dataclass(frozen=True)
class SynapseDecl:
    src: int
    dst: int
    weight: float = 1.0


@dataclass(frozen=True)
class SpikeTrace:
    """Spike events grouped into frames; one frame is one inference input.

    Ticks are absolute interconnect cycles. Each frame is a tuple of
    ``(neuron, tick)`` pairs ordered by ``(tick, neuron)``.
    """

    frames: tuple[tuple[tuple[int, int], ...], ...] = ()

    @classmethod
    def from_events(cls, events: Iterable[tuple[int, int, int]], n_frames: int | None = None) -> "SpikeTrace":
        """Build a trace from ``(frame, neuron, tick)`` triples in any order."""
        by_frame: dict[int, list[tuple[int, int]]] = defaultdict(list)
        top = -1
        for frame, neuron, tick in events:
            if frame < 0:
                raise ValidationError(f"negative frame index {frame}")
            by_frame[frame].append((int(neuron), int(tick)))
            top = max(top, frame)
        count = top + 1 if n_frames is None else n_frames
        if count <= top:
            raise ValidationError(f"trace has events in frame {top} but declares {count} frames")
        frames = tuple(
            tuple(sorted(by_frame.get(f, ()), key=lambda e: (e[1], e[0]))) for f in range(count)
        )
        trace = cls(frames)
        trace.validate()
        return trace

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def n_spikes(self) -> int:
        return sum(len(f) for f in self.frames)

    def events(self):
        for f, frame in enumerate(self.frames):
            for neuron, tick in frame:
                yield f, neuron, tick

    def validate(self, n_neurons: int | None = None) -> None:
        prev_end = None
        for f, frame in enumerate(self.frames):
            last: dict[int, int] = {}
            for neuron, tick in frame:
                if n_neurons is not None and not 0 <= neuron < n_neurons:
                    raise ValidationError(f"frame {f}: spike references unknown neuron {neuron}")
                if tick < 0:
                    raise ValidationError(f"frame {f}: negative tick {tick} for neuron {neuron}")
                if neuron in last and tick <= last[neuron]:
                    raise ValidationError(
                        f"frame {f}: spike times of neuron {neuron} not strictly increasing ({last[neuron]} -> {tick})"
                    )
                last[neuron] = tick
            if frame:
                start, end = frame[0][1], frame[-1][1]
                if prev_end is not None and start <= prev_end:
                    raise ValidationError(f"frame {f} starts at tick {start}, overlapping the previous frame")
                prev_end = end

    def spike_times(self) -> dict[int, list[int]]:
        """Per-neuron sorted tick lists over the whole trace."""
        out: dict[int, list[int]] = defaultdict(list)
        for frame in self.frames:
            for neuron, tick in frame:
                out[neuron].append(tick)
        return dict(out)

    def remap(self, mapping: dict[int, int]) -> "SpikeTrace":
        return SpikeTrace(
            tuple(
                tuple(sorted(((mapping[n], t) for n, t in frame), key=lambda e: (e[1], e[0])))
                for frame in self.frames
            )
        )


@dataclass(frozen=True)
class SnnWorkload:
    """Directed weighted neuron graph plus the spike trace recorded on it.

    Instances are canonical: neuron ids are ``0..n-1`` and synapses are sorted
    by ``(src, dst)``. Use :meth:`build` to canonicalize arbitrary ids.
    """

    neurons: tuple[NeuronDecl, ...]
    synapses: tuple[SynapseDecl, ...]
    trace: SpikeTrace = field(default_factory=SpikeTrace)

    def __post_init__(self):
        n = len(self.neurons)
        for i, decl in enumerate(self.neurons):
            if decl.id != i:
                raise ValidationError(f"neuron ids must be dense; position {i} holds id {decl.id}")
        seen = set()
        for s in self.synapses:
            if not (0 <= s.src < n and 0 <= s.dst < n):
                raise ValidationError(f"synapse {s.src}->{s.dst} references an unknown neuron")
            if s.src == s.dst:
                raise ValidationError(f"self-loop synapse on neuron {s.src}")
            if (s.src, s.dst) in seen:
                raise ValidationError(f"duplicate synapse {s.src}->{s.dst}")
            seen.add((s.src, s.dst))
        self.trace.validate(n)

    @classmethod
    def build(
        cls,
        neurons: Iterable[NeuronDecl | tuple[int, str | NeuronKind]],
        synapses: Iterable[SynapseDecl | tuple],
        trace: SpikeTrace | None = None,
    ) -> "SnnWorkload":
        decls = [n if isinstance(n, NeuronDecl) else NeuronDecl(int(n[0]), NeuronKind(n[1])) for n in neurons]
        ids = [d.id for d in decls]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValidationError(f"duplicate neuron id {dup}")
        order = sorted(ids)
        mapping = {old: new for new, old in enumerate(order)}
        kinds = {d.id: d.kind for d in decls}
        canon_neurons = tuple(NeuronDecl(mapping[old], kinds[old]) for old in order)

        syns = []
        for s in synapses:
            s = s if isinstance(s, SynapseDecl) else SynapseDecl(int(s[0]), int(s[1]), float(s[2]) if len(s) > 2 else 1.0)
            for end in (s.src, s.dst):
                if end not in mapping:
                    raise ValidationError(f"synapse {s.src}->{s.dst} references unknown neuron {end}")
            syns.append(SynapseDecl(mapping[s.src], mapping[s.dst], s.weight))
        syns.sort(key=lambda s: (s.src, s.dst))

        trace = trace or SpikeTrace()
        for f, neuron, _ in trace.events():
            if neuron not in mapping:
                raise ValidationError(f"frame {f}: trace references unknown neuron {neuron}")
        return cls(canon_neurons, tuple(syns), trace.remap(mapping))

    @property
    def n_neurons(self) -> int:
        return len(self.neurons)

    def with_trace(self, trace: SpikeTrace) -> "SnnWorkload":
        return SnnWorkload(self.neurons, self.synapses, trace)

    @cached_property
    def fanin(self) -> tuple[tuple[int, ...], ...]:
        """Presynaptic source ids of every neuron, ascending."""
        ins: list[list[int]] = [[] for _ in self.neurons]
        for s in self.synapses:
            ins[s.dst].append(s.src)
        return tuple(tuple(sorted(x)) for x in ins)

    @cached_property
    def fanout(self) -> tuple[tuple[int, ...], ...]:
        outs: list[list[int]] = [[] for _ in self.neurons]
        for s in self.synapses:
            outs[s.src].append(s.dst)
        return tuple(tuple(x) for x in outs)

    @cached_property
    def rates(self) -> np.ndarray:
        """Mean spikes per frame of every neuron (zeros for an empty trace)."""
        counts = np.zeros(self.n_neurons)
        for frame in self.trace.frames:
            for neuron, _ in frame:
                counts[neuron] += 1
        if self.trace.n_frames:
            counts /= self.trace.n_frames
        return counts

    def spikes_per_frame(self, neuron: int) -> float:
        if not 0 <= neuron < self.n_neurons:
            raise ValidationError(f"unknown neuron id {neuron}")
        return float(self.rates[neuron])

    def edge_weights(self) -> np.ndarray:
        """Spike weight of each synapse for partitioning: source rate, or 1 when the trace is silent."""
        if self.trace.n_spikes == 0:
            return np.ones(len(self.synapses))
        return np.array([self.rates[s.src] for s in self.synapses], dtype=float)


def spikes_per_frame(workload: SnnWorkload, neuron: int) -> float:
    return workload.spikes_per_frame(neuron)


# -- crossbar feasibility ---------------------------------------------------


@dataclass(frozen=True)
class CrossbarCapacity:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"crossbar dimension must be >= 2, got {self.n}")


@dataclass(frozen=True)
class Cluster:
    """Neurons mapped to one crossbar.

    ``sources`` holds every presynaptic neuron feeding a member (internal or
    external), i.e. the crossbar input rows. ``columns`` counts members that
    need an output column; input-kind neurons are spike sources only.
    """

    members: tuple[int, ...]
    internal: tuple[SynapseDecl, ...]
    sources: frozenset[int]
    columns: int
    max_fanin: int

    @classmethod
    def of(cls, workload: SnnWorkload, members: Iterable[int]) -> "Cluster":
        members = tuple(sorted(members))
        mset = set(members)
        sources: set[int] = set()
        max_fanin = 0
        for m in members:
            ins = workload.fanin[m]
            sources.update(ins)
            max_fanin = max(max_fanin, len(ins))
        internal = tuple(s for s in workload.synapses if s.src in mset and s.dst in mset)
        columns = sum(1 for m in members if workload.neurons[m].kind is not NeuronKind.INPUT)
        return cls(members, internal, frozenset(sources), columns, max_fanin)


def fits_crossbar(cluster: Cluster, cap: CrossbarCapacity) -> bool:
    return len(cluster.sources) <= cap.n and cluster.columns <= cap.n and cluster.max_fanin <= cap.n


class Packer:
    """Incremental feasibility bookkeeping for building clusters neuron by neuron."""

    def __init__(self, workload: SnnWorkload, cap: CrossbarCapacity):
        self.fanin = [frozenset(f) for f in workload.fanin]
        self.is_col = [d.kind is not NeuronKind.INPUT for d in workload.neurons]
        self.n = cap.n

    def single_ok(self, neuron: int) -> bool:
        return len(self.fanin[neuron]) <= self.n

    def fits(self, members: Iterable[int]) -> bool:
        rows: set[int] = set()
        cols = 0
        for m in members:
            rows |= self.fanin[m]
            cols += self.is_col[m]
        return len(rows) <= self.n and cols <= self.n

    def excess(self, members: Iterable[int]) -> int:
        rows: set[int] = set()
        cols = 0
        for m in members:
            rows |= self.fanin[m]
            cols += self.is_col[m]
        return max(0, len(rows) - self.n) + max(0, cols - self.n)

    def can_add(self, rows: set[int], cols: int, neuron: int) -> bool:
        if cols + self.is_col[neuron] > self.n:
            return False
        extra = self.fanin[neuron] - rows
        return len(rows) + len(extra) <= self.n


@dataclass(frozen=True)
class GlobalSynapse:
    src_cluster: int
    dst_cluster: int
    src: int
    dst: int
    weight: float
    spikes: float


@dataclass(frozen=True)
class ClusteredGraph:
    clusters: tuple[Cluster, ...]
    global_synapses: tuple[GlobalSynapse, ...]
    capacity: CrossbarCapacity
    assignment: tuple[int, ...] = ()

    @classmethod
    def from_assignment(
        cls, workload: SnnWorkload, assignment: Sequence[int], capacity: CrossbarCapacity
    ) -> "ClusteredGraph":
        """Group neurons by label; labels are renumbered 0..k-1 in ascending order."""
        relabel = {lab: i for i, lab in enumerate(sorted({int(x) for x in assignment}))}
        assign = tuple(relabel[int(lab)] for lab in assignment)
        groups: list[list[int]] = [[] for _ in relabel]
        for neuron, lab in enumerate(assign):
            groups[lab].append(neuron)
        clusters = tuple(Cluster.of(workload, g) for g in groups)
        rates = workload.rates
        glob = tuple(
            GlobalSynapse(assign[s.src], assign[s.dst], s.src, s.dst, s.weight, float(rates[s.src]))
            for s in workload.synapses
            if assign[s.src] != assign[s.dst]
        )
        return cls(clusters, glob, capacity, assign)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def is_feasible(self) -> bool:
        return all(fits_crossbar(c, self.capacity) for c in self.clusters)

    def local_spikes_per_frame(self, workload: SnnWorkload) -> float:
        rates = workload.rates
        return float(sum(rates[s.src] for c in self.clusters for s in c.internal))

    def traffic_matrix(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = defaultdict(float)
        for g in self.global_synapses:
            out[(g.src_cluster, g.dst_cluster)] += g.spikes
        return dict(out)


# -- file formats -------------------------------------------------------------


def parse_model(text: str, source: str = "<model>") -> tuple[list[NeuronDecl], list[SynapseDecl]]:
    neurons, synapses = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "neuron" and len(parts) == 3:
                neurons.append(NeuronDecl(int(parts[1]), NeuronKind(parts[2])))
            elif parts[0] == "synapse" and len(parts) == 4:
                synapses.append(SynapseDecl(int(parts[1]), int(parts[2]), float(parts[3])))
            else:
                raise ValueError("expected 'neuron <id> <kind>' or 'synapse <src> <dst> <weight>'")
        except ValueError as exc:
            raise ParseError(source, lineno, f"{exc}: {raw.strip()!r}") from None
    return neurons, synapses


def format_model(workload: SnnWorkload) -> str:
    lines = [f"neuron {n.id} {n.kind.value}" for n in workload.neurons]
    lines += [f"synapse {s.src} {s.dst} {s.weight!r}" for s in workload.synapses]
    return "\n".join(lines) + "\n"


def parse_trace(text: str, source: str = "<trace>") -> SpikeTrace:
    """CSV with header ``frame,neuron,tick``; an optional ``# frames=N`` line keeps trailing empty frames."""
    n_frames = None
    body = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            key, _, val = stripped[1:].partition("=")
            if key.strip() == "frames":
                try:
                    n_frames = int(val)
                except ValueError:
                    raise ParseError(source, lineno, f"bad frame count {val!r}") from None
            continue
        if stripped:
            body.append((lineno, stripped))
    if not body:
        return SpikeTrace(tuple(() for _ in range(n_frames or 0)))
    header_line, header = body[0]
    if [h.strip() for h in header.split(",")] != ["frame", "neuron", "tick"]:
        raise ParseError(source, header_line, f"expected header 'frame,neuron,tick', got {header!r}")
    events = []
    for (lineno, _), row in zip(body[1:], csv.reader([b for _, b in body[1:]])):
        try:
            if len(row) != 3:
                raise ValueError("expected 3 fields")
            events.append(tuple(int(x) for x in row))
        except ValueError as exc:
            raise ParseError(source, lineno, f"{exc}: {','.join(row)!r}") from None
    return SpikeTrace.from_events(events, n_frames)


def format_trace(trace: SpikeTrace) -> str:
    lines = [f"# frames={trace.n_frames}", "frame,neuron,tick"]
    lines += [f"{f},{n},{t}" for f, n, t in trace.events()]
    return "\n".join(lines) + "\n"


def load_workload(model_path: str | Path, trace_path: str | Path | None = None) -> SnnWorkload:
    model_path = Path(model_path)
    neurons, synapses = parse_model(model_path.read_text(), str(model_path))
    trace = None
    if trace_path is not None:
        trace_path = Path(trace_path)
        trace = parse_trace(trace_path.read_text(), str(trace_path))
    return SnnWorkload.build(neurons, synapses, trace)


def save_workload(workload: SnnWorkload, model_path: str | Path, trace_path: str | Path | None = None) -> None:
    Path(model_path).write_text(format_model(workload))
    if trace_path is not None:
        Path(trace_path).write_text(format_trace(workload.trace))
