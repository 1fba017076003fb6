"""Statistics over a delivered flit log."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np

from .. import kernels
from ..hardware import TechTemplate
from ..report import LatencyStats
from .engine import Flit


def isi_distortion(source_ticks: Sequence[int], arrival_ticks: Sequence[int]) -> float:
    """Mean |ISI at destination - ISI at source| over consecutive spike pairs.

    Both sides are taken in time order; fewer than two spikes gives 0.
    """
    if len(source_ticks) < 2:
        return 0.0
    src = np.diff(np.sort(np.asarray(source_ticks, dtype=np.int64)))
    dst = np.diff(np.sort(np.asarray(arrival_ticks, dtype=np.int64)))
    return float(np.abs(dst - src).mean())


def spike_disorder(arrivals_in_source_order: Sequence[int]) -> int:
    """Pairs delivered in the opposite order to the one they were sent in."""
    return int(kernels.count_inversions(np.asarray(arrivals_in_source_order, dtype=np.int64)))


def connections(flits: Sequence[Flit]) -> dict[int, tuple[list[int], list[int]]]:
    """Delivered flits per connection: (source ticks, arrivals) in source order."""
    by_conn: dict[int, list[Flit]] = defaultdict(list)
    for f in flits:
        if f.delivered:
            by_conn[f.conn].append(f)
    out = {}
    for conn, fs in sorted(by_conn.items()):
        fs.sort(key=lambda f: (f.source_tick, f.fid))
        out[conn] = ([f.source_tick for f in fs], [f.arrival for f in fs])
    return out


def mean_isi_distortion(flits: Sequence[Flit]) -> float:
    """Averaged over connections that carried at least two spikes."""
    vals = [isi_distortion(s, a) for s, a in connections(flits).values() if len(s) >= 2]
    return float(np.mean(vals)) if vals else 0.0


def mean_spike_disorder(flits: Sequence[Flit]) -> float:
    vals = [spike_disorder(a) for _, a in connections(flits).values()]
    return float(np.mean(vals)) if vals else 0.0


def comm_energy(flits: Sequence[Flit], tech: TechTemplate) -> float:
    return sum(f.segments for f in flits if f.delivered) * tech.hop_energy_j


def latency_stats(flits: Sequence[Flit]) -> LatencyStats:
    lat = np.array([f.latency for f in flits if f.delivered], dtype=np.float64)
    if lat.size == 0:
        return LatencyStats()
    return LatencyStats(float(lat.min()), float(lat.mean()), float(lat.max()),
                        float(np.percentile(lat, 99)), int(lat.size))


def segment_hop_totals(flits: Sequence[Flit]) -> tuple[int, int]:
    segs = sum(f.segments for f in flits if f.delivered)
    hops = sum(max(0, f.segments - 1) for f in flits if f.delivered)
    return segs, hops
