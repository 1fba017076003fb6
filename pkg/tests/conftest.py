import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from neuromap.model import SnnWorkload, SpikeTrace  # noqa: E402


def random_workload(rng, n, p=0.3, n_inputs=2, frames=3, max_spikes=4, weights=(-2, -1, 1, 2, 3)):
    """Small random DAG-free graph: inputs feed nothing back, weights are integers."""
    kinds = ["input"] * n_inputs + ["hidden"] * (n - n_inputs)
    syn = []
    for a in range(n):
        for b in range(n_inputs, n):
            if a != b and rng.random() < p:
                syn.append((a, b, float(rng.choice(weights))))
    events = []
    for f in range(frames):
        for v in range(n):
            k = int(rng.integers(0, max_spikes + 1))
            for t in sorted(rng.choice(50, size=k, replace=False)):
                events.append((f, v, f * 50 + int(t)))
    return SnnWorkload.build(list(enumerate(kinds)), syn, SpikeTrace.from_events(events, frames))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; echoed again in the terminal summary."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        ACCEPTANCE.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
