"""Rewrite high-fanin neurons into chains (or trees) of fanin-of-two units."""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass

from .errors import ValidationError
from .model import NeuronDecl, NeuronKind, SnnWorkload, SpikeTrace, SynapseDecl


@dataclass(frozen=True)
class DecomposedWorkload:
    """``base`` keeps every original neuron id; new units are appended after them.

    ``fit_map[v]`` lists the units replacing neuron ``v`` in evaluation order,
    ending with ``v`` itself (the unit that carries the original firing
    semantics). ``origin`` is aligned with ``base.synapses``: the original
    ``(src, dst)`` pair for rewired input synapses, None for unit-to-unit links.
    """

    base: SnnWorkload
    fit_map: dict[int, tuple[int, ...]]
    origin: tuple[tuple[int, int] | None, ...]
    limit: int | None = None
    n_original: int = 0

    @property
    def n_new_units(self) -> int:
        return self.base.n_neurons - self.n_original


def parse_mode(text: str) -> int | None:
    """``full`` -> None (chains), ``limit:<f>`` -> f."""
    if text == "full":
        return None
    kind, _, arg = text.partition(":")
    if kind == "limit":
        try:
            return int(arg)
        except ValueError:
            pass
    raise ValidationError(f"bad decomposition mode {text!r}; expected full or limit:<f>")


def decompose(workload: SnnWorkload, limit: int | None = None) -> DecomposedWorkload:
    """Full mode (``limit=None``) turns each k-input neuron, k > 2, into k-1 chained units.

    Inputs enter the chain in ascending source id: the first unit takes the
    two lowest sources, each later unit the previous unit's output plus the
    next source. With ``limit=f`` neurons above fanin f become balanced trees
    of fanin-f units filled left to right.
    """
    if limit is not None and limit < 2:
        raise ValidationError(f"fanin limit must be >= 2, got {limit}")
    n = workload.n_neurons
    cap = 2 if limit is None else limit
    incoming: dict[int, list[SynapseDecl]] = defaultdict(list)
    for s in workload.synapses:
        incoming[s.dst].append(s)

    neurons = list(workload.neurons)
    synapses: list[tuple[SynapseDecl, tuple[int, int] | None]] = []
    fit_map: dict[int, tuple[int, ...]] = {}
    next_id = n

    def new_unit() -> int:
        nonlocal next_id
        neurons.append(NeuronDecl(next_id, NeuronKind.HIDDEN))
        next_id += 1
        return next_id - 1

    for v in range(n):
        ins = sorted(incoming.get(v, ()), key=lambda s: s.src)
        if len(ins) <= cap:
            synapses += [(s, (s.src, s.dst)) for s in ins]
            continue
        units: list[int] = []
        if limit is None:
            units = [new_unit() for _ in range(len(ins) - 2)] + [v]
            for j, s in enumerate(ins):
                target = units[max(0, j - 1)]
                synapses.append((SynapseDecl(s.src, target, s.weight), (s.src, s.dst)))
            for a, b in zip(units, units[1:]):
                synapses.append((SynapseDecl(a, b, 1.0), None))
        else:
            items: list[SynapseDecl | int] = list(ins)
            while len(items) > limit:
                grouped = []
                for k in range(0, len(items), limit):
                    chunk = items[k : k + limit]
                    if len(chunk) == 1:
                        grouped.append(chunk[0])
                        continue
                    u = new_unit()
                    units.append(u)
                    for item in chunk:
                        synapses.append(_link(item, u))
                    grouped.append(u)
                items = grouped
            units.append(v)
            for item in items:
                synapses.append(_link(item, v))
        fit_map[v] = tuple(units)

    synapses.sort(key=lambda p: (p[0].src, p[0].dst))
    trace = _unit_trace(workload.trace, fit_map, [s for s, _ in synapses], n)
    base = SnnWorkload(tuple(neurons), tuple(s for s, _ in synapses), trace)
    return DecomposedWorkload(base, fit_map, tuple(o for _, o in synapses), limit, n)


def _link(item: SynapseDecl | int, target: int) -> tuple[SynapseDecl, tuple[int, int] | None]:
    if isinstance(item, SynapseDecl):
        return SynapseDecl(item.src, target, item.weight), (item.src, item.dst)
    return SynapseDecl(item, target, 1.0), None


def _unit_trace(trace: SpikeTrace, fit_map, synapses, n_original: int) -> SpikeTrace:
    """Intermediate units fire whenever anything upstream fired in the same frame.

    Only the per-frame counts matter downstream (spike weights for
    partitioning); chain latency is modelled in :func:`check_equivalence`.
    """
    if not fit_map or trace.n_spikes == 0:
        return trace
    feeds: dict[int, list[int]] = defaultdict(list)
    for s in synapses:
        if s.dst >= n_original:
            feeds[s.dst].append(s.src)
    order = [u for units in fit_map.values() for u in units if u >= n_original]
    frames = []
    for frame in trace.frames:
        ticks: dict[int, set[int]] = defaultdict(set)
        for neuron, tick in frame:
            ticks[neuron].add(tick)
        for u in order:
            acc: set[int] = set()
            for src in feeds[u]:
                acc |= ticks.get(src, set())
            if acc:
                ticks[u] = acc
        events = [(neuron, t) for neuron, ts in ticks.items() for t in ts]
        frames.append(tuple(sorted(events, key=lambda e: (e[1], e[0]))))
    return SpikeTrace(tuple(frames))


def prune_fanin(workload: SnnWorkload, limit: int) -> tuple[SnnWorkload, int]:
    """Drop the weakest inputs of neurons whose fanin exceeds ``limit``.

    This is what mapping without decomposition has to do. Inputs are ranked
    by |weight|, then ascending source id. Returns the pruned workload and
    the number of synapses removed.
    """
    incoming: dict[int, list[SynapseDecl]] = defaultdict(list)
    for s in workload.synapses:
        incoming[s.dst].append(s)
    kept, dropped = [], 0
    for dst in sorted(incoming):
        ins = sorted(incoming[dst], key=lambda s: (-abs(s.weight), s.src))
        kept += ins[:limit]
        dropped += max(0, len(ins) - limit)
    if not dropped:
        return workload, 0
    kept.sort(key=lambda s: (s.src, s.dst))
    return SnnWorkload(workload.neurons, tuple(kept), workload.trace), dropped


# -- equivalence check ----------------------------------------------------------


def reference_spikes(workload: SnnWorkload, stimulus: SpikeTrace, threshold: float = 1.0,
                     horizon: int | None = None) -> dict[int, list[int]]:
    """Integrate-and-fire reference run driven by spikes on input neurons.

    A spike at tick t adds its synapse weight to the target's membrane at
    tick t; a membrane at or above ``threshold`` fires at t+1 and resets.
    No leak. Returns the spike ticks of every neuron that fired.
    """
    kinds = workload.neurons
    stim = stimulus.spike_times()
    for neuron in stim:
        if not 0 <= neuron < workload.n_neurons or kinds[neuron].kind is not NeuronKind.INPUT:
            raise ValidationError(f"stimulus drives non-input neuron {neuron}")
    if not stim:
        return {}
    last = max(max(ts) for ts in stim.values())
    horizon = last + 4 * workload.n_neurons + 8 if horizon is None else horizon
    outs = workload.fanout
    weight = {(s.src, s.dst): s.weight for s in workload.synapses}

    fires: dict[int, set[int]] = defaultdict(set)
    for neuron, ts in stim.items():
        for t in ts:
            fires[t].add(neuron)
    membrane = defaultdict(float)
    spikes: dict[int, list[int]] = defaultdict(list)
    ticks = sorted(fires)
    heapq.heapify(ticks)
    seen = set(ticks)
    while ticks:
        t = heapq.heappop(ticks)
        if t > horizon:
            break
        touched = set()
        for neuron in sorted(fires.pop(t, ())):
            spikes[neuron].append(t)
            for dst in outs[neuron]:
                if kinds[dst].kind is NeuronKind.INPUT:
                    continue
                membrane[dst] += weight[(neuron, dst)]
                touched.add(dst)
        for dst in sorted(touched):
            if membrane[dst] >= threshold:
                membrane[dst] = 0.0
                fires[t + 1].add(dst)
                if t + 1 not in seen:
                    seen.add(t + 1)
                    heapq.heappush(ticks, t + 1)
    return dict(spikes)


def check_equivalence(original: SnnWorkload, decomposed: DecomposedWorkload, stimulus: SpikeTrace,
                      threshold: float = 1.0) -> float:
    """Largest per-tick gap between an original neuron's weighted input and
    the input its terminal unit sees, after aligning by the unit pipeline depth.

    Both sides are fed the same presynaptic spike trains (from
    :func:`reference_spikes` on the original graph). Units are pass-through
    accumulators: each stage adds one tick, and inputs entering a later
    stage are held so that all inputs of one tick meet at the terminal unit.
    """
    spikes = reference_spikes(original, stimulus, threshold)
    base = decomposed.base
    into: dict[int, list[SynapseDecl]] = defaultdict(list)
    for s in base.synapses:
        into[s.dst].append(s)

    worst = 0.0
    for v, units in decomposed.fit_map.items():
        expected: dict[int, float] = defaultdict(float)
        for s in original.synapses:
            if s.dst == v:
                for t in spikes.get(s.src, ()):
                    expected[t] += s.weight

        unit_set = set(units)
        stage: dict[int, int] = {}
        value: dict[int, dict[int, float]] = {}
        for u in units:
            feeds = into[u]
            stage[u] = 1 + max((stage[s.src] for s in feeds if s.src in unit_set), default=-1)
            acc: dict[int, float] = defaultdict(float)
            for s in feeds:
                if s.src in unit_set:
                    delay = stage[u] - stage[s.src]
                    for t, val in value[s.src].items():
                        acc[t + delay] += s.weight * val
                else:
                    for t in spikes.get(s.src, ()):
                        acc[t + stage[u]] += s.weight
            value[u] = acc
        depth = stage[v]
        got = value[v]
        for t in set(expected) | {t - depth for t in got}:
            worst = max(worst, abs(expected.get(t, 0.0) - got.get(t + depth, 0.0)))
    return worst
