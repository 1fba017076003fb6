"""Simulation report: the numbers every pipeline run ends with."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError


@dataclass(frozen=True)
class LatencyStats:
    """Delivered-flit latency in ticks; all zero when nothing was delivered."""

    min: float = 0.0
    mean: float = 0.0
    max: float = 0.0
    p99: float = 0.0
    count: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError("latency count must be >= 0")
        if self.count and not (self.min <= self.mean + 1e-9 and self.mean <= self.max + 1e-9):
            raise ValidationError(f"latency stats out of order: {self.min} / {self.mean} / {self.max}")


@dataclass(frozen=True)
class SimulationReport:
    """``inference_lifetime_frames`` is None when no cell is ever read (unbounded)."""

    label: str = ""
    cluster_count: int = 0
    global_spikes_per_frame: float = 0.0
    local_spikes_per_frame: float = 0.0
    comm_energy_j: float = 0.0
    compute_energy_j: float = 0.0
    latency: LatencyStats = field(default_factory=LatencyStats)
    isi_distortion: float = 0.0
    spike_disorder: float = 0.0
    inference_lifetime_frames: int | None = None
    flits: int = 0
    undelivered: int = 0
    segments_total: int = 0
    hops_total: int = 0
    pruned_synapses: int = 0
    fit_units: int = 0
    delay_shortest_s: float = 0.0
    delay_longest_s: float = 0.0
    topology: str = ""
    routing: str = ""
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("cluster_count", "flits", "undelivered", "segments_total", "hops_total",
                     "pruned_synapses", "fit_units"):
            if getattr(self, name) < 0:
                raise ValidationError(f"report field {name} must be >= 0")
        for name in ("global_spikes_per_frame", "local_spikes_per_frame", "comm_energy_j",
                     "compute_energy_j", "isi_distortion", "spike_disorder"):
            val = getattr(self, name)
            if val < 0 or math.isnan(val):
                raise ValidationError(f"report field {name} must be >= 0")
        if self.inference_lifetime_frames is not None and self.inference_lifetime_frames < 0:
            raise ValidationError("inference lifetime must be >= 0")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["notes"] = list(self.notes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationReport":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown report fields: {sorted(unknown)}")
        data = dict(data)
        data["latency"] = LatencyStats(**data.get("latency", {}))
        data["notes"] = tuple(data.get("notes", ()))
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SimulationReport":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"report is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def save_report(report: SimulationReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json())


def load_report(path: str | Path) -> SimulationReport:
    return SimulationReport.from_json(Path(path).read_text())
