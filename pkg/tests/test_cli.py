import json
import subprocess
import sys

import pytest

from neuromap.cli import main
from neuromap.model import load_workload


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["gen", "--kind", "community:2,0.5,0.05", "--seed", "1", "--out-model", "m.txt",
                 "--out-trace", "t.csv"]) == 0
    return tmp_path


def test_gen_is_deterministic(work):
    first = (work / "m.txt").read_text(), (work / "t.csv").read_text()
    assert main(["gen", "--kind", "community:2,0.5,0.05", "--seed", "1", "--out-model", "m2.txt",
                 "--out-trace", "t2.csv"]) == 0
    assert ((work / "m2.txt").read_text(), (work / "t2.csv").read_text()) == first


def test_gen_frame_ms_sets_ticks(work):
    assert main(["gen", "--kind", "highfanin:3", "--frames", "2", "--frame-ms", "0.01", "--out-model", "h.txt",
                 "--out-trace", "h.csv"]) == 0
    wl = load_workload(work / "h.txt", work / "h.csv")
    assert all(t < 10 for _, n, t in wl.trace.events() if _ == 0)


def test_decompose_writes_fit_map(work):
    assert main(["gen", "--kind", "highfanin:5", "--out-model", "h.txt", "--out-trace", "h.csv"]) == 0
    assert main(["decompose", "--mode", "full", "--in", "h.txt", "--trace", "h.csv", "--out", "d.txt",
                 "--out-trace", "d.csv", "--fit-map", "fm.txt"]) == 0
    line = (work / "fm.txt").read_text().strip()
    orig, units = line.split(":")
    assert orig == "5" and len(units.split(",")) == 4
    assert max(len(f) for f in load_workload(work / "d.txt").fanin) == 2


def test_partition_place_round(work):
    assert main(["partition", "--algo", "kl", "--capacity", "8", "--model", "m.txt", "--trace", "t.csv",
                 "--out", "c.txt", "--edges", "e.csv"]) == 0
    assert (work / "c.txt").read_text().startswith("cluster 0:")
    assert (work / "e.csv").read_text().startswith("src_cluster,dst_cluster")
    assert main(["place", "--model", "m.txt", "--trace", "t.csv", "--clusters", "c.txt", "--out", "p.txt",
                 "--hw", "hw.txt"]) == 2  # missing hardware file
    (work / "hw.txt").write_text("capacity = 8\ntopology = mesh:3x3\n")
    assert main(["place", "--model", "m.txt", "--trace", "t.csv", "--clusters", "c.txt", "--out", "p.txt",
                 "--hw", "hw.txt", "--iterations", "20"]) == 0
    assert "-> (" in (work / "p.txt").read_text()


def test_nocsim_outputs(work):
    assert main(["nocsim", "--topo", "mesh:4x4", "--traffic", "bitrev:0.1", "--cycles", "50", "--seed", "3",
                 "--log", "log.csv", "--report", "r.json"]) == 0
    assert (work / "log.csv").read_text().startswith("inject_tick,src,dst,arrival_tick\n")
    rep = json.loads((work / "r.json").read_text())
    assert rep["undelivered"] == 0 and rep["routing"] == "xy"


def test_run_and_report(work):
    (work / "hw.txt").write_text("capacity = 8\n")
    assert main(["run", "--model", "m.txt", "--trace", "t.csv", "--hw", "hw.txt", "--out", "out"]) == 0
    assert (work / "out" / "comparison.csv").exists()
    assert main(["report", "out", "--out", "cmp.csv", "--plots", "plots"]) == 0
    assert (work / "plots" / "cluster_count.csv").exists()
    assert main(["run", "--model", "m.txt", "--presets", "nope"]) == 2


def test_config_file(work):
    (work / "cfg.txt").write_text("capacity = 8\nalgo = greedy\nobjective = clusters\n")
    assert main(["--config", "cfg.txt", "partition", "--model", "m.txt", "--out", "c.txt"]) == 0
    (work / "bad.txt").write_text("colour = red\n")
    assert main(["--config", "bad.txt", "partition", "--model", "m.txt"]) == 2


def test_exit_codes(work):
    assert main([]) == 1
    assert main(["partition"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["partition", "--model", "missing.txt"]) == 2
    (work / "broken.txt").write_text("neuron zero input\n")
    assert main(["partition", "--model", "broken.txt"]) == 2
    assert main(["partition", "--model", "m.txt", "--capacity", "2"]) == 3
    assert main(["nocsim", "--topo", "mesh:3x3", "--traffic", "random:0.5", "--cycles", "60", "--max-cycles", "20",
                 "--report", "r.json"]) == 4


def test_module_entry_point(work):
    proc = subprocess.run([sys.executable, "-m", "neuromap", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "nocsim" in proc.stdout
