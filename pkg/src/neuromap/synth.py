"""Desk-scale synthetic workloads with Poisson spike traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import NeuronDecl, NeuronKind, SnnWorkload, SpikeTrace, SynapseDecl


@dataclass(frozen=True)
class SynthSpec:
    """``kind`` is community, layered or highfanin; ``params`` as parsed from the CLI."""

    kind: str
    params: tuple
    frames: int = 4
    frame_ticks: int = 100
    # mean spikes per frame for input neurons and for everything else
    input_rate: float = 6.0
    hidden_rate: float = 3.0

    def __post_init__(self):
        if self.frames < 1 or self.frame_ticks < 1:
            raise ValidationError("frames and frame_ticks must be positive")
        if self.input_rate < 0 or self.hidden_rate < 0:
            raise ValidationError("spike rates must be >= 0")


def parse_synth(text: str, **kw) -> SynthSpec:
    """``community:k,p_in,p_out[,size]``, ``layered:w1,w2,...`` or ``highfanin:k``."""
    kind, _, arg = text.partition(":")
    parts = [p for p in arg.split(",") if p.strip()]
    try:
        if kind == "community" and len(parts) in (3, 4):
            params = (int(parts[0]), float(parts[1]), float(parts[2])) + ((int(parts[3]),) if len(parts) == 4 else ())
        elif kind == "layered" and parts:
            params = tuple(int(p) for p in parts)
        elif kind == "highfanin" and len(parts) == 1:
            params = (int(parts[0]),)
        else:
            raise ValueError
    except ValueError:
        raise ValidationError(
            f"bad synthetic kind {text!r}; expected community:k,p_in,p_out[,size], layered:w1,w2,... or highfanin:k"
        ) from None
    return SynthSpec(kind, params, **kw)


def _weight(rng) -> float:
    return float(rng.choice([-2, -1, 1, 2, 3]))


def community(k: int, p_in: float, p_out: float, rng, size: int = 8):
    """``k`` groups of ``size`` neurons, the first two of each group being inputs."""
    if k < 1 or size < 3:
        raise ValidationError("community needs k >= 1 and size >= 3")
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValidationError("community probabilities must be in [0, 1]")
    n = k * size
    group = np.arange(n) // size
    kinds = [NeuronKind.INPUT if i % size < 2 else NeuronKind.HIDDEN for i in range(n)]
    neurons = [NeuronDecl(i, kinds[i]) for i in range(n)]
    synapses = []
    for a in range(n):
        for b in range(n):
            if a == b or kinds[b] is NeuronKind.INPUT:
                continue
            p = p_in if group[a] == group[b] else p_out
            if rng.random() < p:
                synapses.append(SynapseDecl(a, b, _weight(rng)))
    return neurons, synapses


def layered(widths, rng):
    if not widths or any(w < 1 for w in widths):
        raise ValidationError("layer widths must be positive")
    neurons, synapses = [], []
    starts = np.concatenate([[0], np.cumsum(widths)])
    for li, w in enumerate(widths):
        kind = NeuronKind.INPUT if li == 0 else NeuronKind.OUTPUT if li == len(widths) - 1 else NeuronKind.HIDDEN
        neurons += [NeuronDecl(int(starts[li]) + i, kind) for i in range(w)]
    for li in range(len(widths) - 1):
        for a in range(starts[li], starts[li + 1]):
            for b in range(starts[li + 1], starts[li + 2]):
                synapses.append(SynapseDecl(int(a), int(b), _weight(rng)))
    return neurons, synapses


def highfanin(k: int, rng):
    if k < 1:
        raise ValidationError("highfanin needs k >= 1")
    neurons = [NeuronDecl(i, NeuronKind.INPUT) for i in range(k)] + [NeuronDecl(k, NeuronKind.OUTPUT)]
    return neurons, [SynapseDecl(i, k, _weight(rng)) for i in range(k)]


def poisson_trace(neurons, rng, frames: int, frame_ticks: int, input_rate: float, hidden_rate: float) -> SpikeTrace:
    events = []
    for f in range(frames):
        base = f * frame_ticks
        for d in neurons:
            rate = input_rate if d.kind is NeuronKind.INPUT else hidden_rate
            count = min(int(rng.poisson(rate)), frame_ticks)
            for t in np.sort(rng.choice(frame_ticks, size=count, replace=False)):
                events.append((f, d.id, base + int(t)))
    return SpikeTrace.from_events(events, frames)


def gen_synthetic(spec: SynthSpec, seed: int) -> SnnWorkload:
    rng = np.random.default_rng(seed)
    if spec.kind == "community":
        neurons, synapses = community(*spec.params[:3], rng, *spec.params[3:])
    elif spec.kind == "layered":
        neurons, synapses = layered(spec.params, rng)
    elif spec.kind == "highfanin":
        neurons, synapses = highfanin(spec.params[0], rng)
    else:
        raise ValidationError(f"unknown synthetic kind {spec.kind!r}")
    trace = poisson_trace(neurons, rng, spec.frames, spec.frame_ticks, spec.input_rate, spec.hidden_rate)
    return SnnWorkload(tuple(neurons), tuple(synapses), trace)
