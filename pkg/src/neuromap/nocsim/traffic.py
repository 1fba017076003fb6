"""Synthetic and replayed traffic as ``(tick, src_tile, dst_tile)`` injections."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError

PERMUTATIONS = ("transpose", "bitrev", "butterfly", "shuffle")
DEFAULT_RATE = 0.05


@dataclass(frozen=True)
class TrafficModel:
    """``kind`` is random, one of PERMUTATIONS, or table (``trace`` replayed verbatim)."""

    kind: str
    rate: float = DEFAULT_RATE
    trace: tuple[tuple[int, int, int], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind not in ("random", "table") + PERMUTATIONS:
            raise ValidationError(f"unknown traffic model {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValidationError(f"injection rate must be in [0, 1], got {self.rate}")


def parse_traffic(text: str) -> TrafficModel:
    kind, _, arg = text.partition(":")
    if kind == "table":
        if not arg:
            raise ValidationError("table traffic needs a file: table:<file>")
        return TrafficModel("table", trace=tuple(load_traffic_table(arg)))
    if kind == "random" and not arg:
        raise ValidationError("random traffic needs a rate: random:<rate>")
    try:
        rate = float(arg) if arg else DEFAULT_RATE
    except ValueError:
        raise ValidationError(f"bad injection rate in {text!r}") from None
    return TrafficModel(kind, rate)


def parse_traffic_table(text: str, source: str = "<traffic>") -> list[tuple[int, int, int]]:
    """CSV ``tick,src,dst`` (tile indices); header optional."""
    out = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or row[0].strip().startswith("#"):
            continue
        if lineno == 1 and row[0].strip() == "tick":
            continue
        if len(row) != 3:
            raise ParseError(source, lineno, f"expected tick,src,dst, got {','.join(row)!r}")
        try:
            tick, src, dst = (int(x) for x in row)
        except ValueError:
            raise ParseError(source, lineno, f"non-integer field in {','.join(row)!r}") from None
        if tick < 0:
            raise ParseError(source, lineno, "negative tick")
        out.append((tick, src, dst))
    return out


def load_traffic_table(path: str | Path) -> list[tuple[int, int, int]]:
    path = Path(path)
    return parse_traffic_table(path.read_text(), str(path))


def _bits(n_nodes: int) -> int:
    if n_nodes < 2 or n_nodes & (n_nodes - 1):
        raise ValidationError(f"bit-permutation traffic needs a power-of-two node count, got {n_nodes}")
    return n_nodes.bit_length() - 1


def permute(kind: str, src: int, n_nodes: int) -> int:
    b = _bits(n_nodes)
    mask = n_nodes - 1
    if kind == "transpose":
        r = b // 2
        return ((src << r) | (src >> (b - r))) & mask
    if kind == "bitrev":
        return int(format(src, f"0{b}b")[::-1], 2)
    if kind == "butterfly":
        hi, lo = (src >> (b - 1)) & 1, src & 1
        out = src & ~(1 << (b - 1)) & ~1
        return out | (lo << (b - 1)) | hi
    if kind == "shuffle":
        return ((src << 1) | (src >> (b - 1))) & mask
    raise ValidationError(f"{kind!r} is not a permutation pattern")


def gen_traffic(model: TrafficModel, n_nodes: int, cycles: int, seed: int) -> list[tuple[int, int, int]]:
    """Injections over ticks ``0..cycles-1``, sorted by (tick, src).

    Random and permutation models inject a flit from each node on each tick
    with probability ``rate``; permutation fixed points never inject.
    """
    if model.kind == "table":
        for tick, src, dst in model.trace:
            if not (0 <= src < n_nodes and 0 <= dst < n_nodes):
                raise ValidationError(f"traffic entry {tick},{src},{dst} is off the {n_nodes}-node grid")
        return sorted(model.trace)
    if cycles < 0:
        raise ValidationError("cycles must be >= 0")
    rng = np.random.default_rng(seed)
    fire = rng.random((cycles, n_nodes)) < model.rate
    if model.kind == "random":
        if n_nodes < 2:
            raise ValidationError("random traffic needs at least two nodes")
        # uniform over the other n-1 nodes
        offs = rng.integers(1, n_nodes, size=(cycles, n_nodes))
        dst = (np.arange(n_nodes)[None, :] + offs) % n_nodes
    else:
        table = np.array([permute(model.kind, s, n_nodes) for s in range(n_nodes)])
        fire &= table[None, :] != np.arange(n_nodes)[None, :]
        dst = np.broadcast_to(table, (cycles, n_nodes))
    ticks, srcs = np.nonzero(fire)
    return [(int(t), int(s), int(dst[t, s])) for t, s in zip(ticks, srcs)]
