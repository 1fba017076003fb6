import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_workload
from neuromap import kernels
from neuromap.errors import InfeasibleError, ValidationError
from neuromap.model import ClusteredGraph, CrossbarCapacity, SnnWorkload, SpikeTrace
from neuromap.partition import (
    Algorithm, Objective, PartitionConfig, cost_global_spikes, format_clusters, kl_refine, cut_weight,
    parse_clusters, partition, symmetric_weights,
)
from neuromap.pso import PsoParams
from oracles import optimal_cut


def cfg(algo, cap, seed=0, objective=Objective.MIN_GLOBAL_SPIKES, **pso):
    return PartitionConfig(objective, algo, CrossbarCapacity(cap), seed, PsoParams(**pso) if pso else PsoParams())


def bounded_fanin_graph(rng, n=8, cap=4, p=0.35):
    """Random hidden-neuron graph whose fanin never exceeds ``cap``."""
    syn = []
    for b in range(n):
        srcs = [a for a in range(n) if a != b and rng.random() < p][:cap]
        syn += [(a, b, 1.0) for a in srcs]
    events = []
    for v in range(n):
        for t in sorted(rng.choice(40, size=int(rng.integers(0, 6)), replace=False)):
            events.append((0, v, int(t)))
    return SnnWorkload.build([(i, "hidden") for i in range(n)], syn, SpikeTrace.from_events(events, 1))


def test_cost_single_cluster_is_zero(rng):
    wl = random_workload(rng, 6)
    g = ClusteredGraph.from_assignment(wl, [0] * 6, CrossbarCapacity(16))
    assert cost_global_spikes(g) == 0.0


def test_cost_two_neurons_split():
    wl = SnnWorkload.build([(0, "input"), (1, "output")], [(0, 1, 1.0)],
                           SpikeTrace.from_events([(0, 0, t) for t in range(5)]))
    g = ClusteredGraph.from_assignment(wl, [0, 1], CrossbarCapacity(2))
    assert cost_global_spikes(g) == 5.0


def test_cost_fig7_sum():
    # clusters A={0}, B={1}, C={2} with edge spike counts 2, 3 (A fires 2, B fires 3)
    events = [(0, 0, 1), (0, 0, 2), (0, 1, 3), (0, 1, 4), (0, 1, 5)]
    wl = SnnWorkload.build([(i, "hidden") for i in range(3)], [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)],
                           SpikeTrace.from_events(events))
    g = ClusteredGraph.from_assignment(wl, [0, 1, 2], CrossbarCapacity(4))
    assert cost_global_spikes(g) == 2 + 2 + 3


def test_kl_two_cliques_cuts_light_edge():
    syn = [(a, b, 1.0) for grp in (range(4), range(4, 8)) for a in grp for b in grp if a != b]
    syn.append((3, 4, 1.0))
    # neuron 3 fires once per frame, the rest 4 times, so the bridge 3->4 is the light edge
    wl = SnnWorkload.build([(i, "hidden") for i in range(8)], syn,
                           SpikeTrace.from_events([(0, v, t) for v in range(8) for t in range(4 if v != 3 else 1)]))
    # capacity 5: a clique plus the bridge source is 5 input rows
    g = partition(wl, cfg(Algorithm.KL, 5))
    assert g.n_clusters == 2
    assert cost_global_spikes(g) == pytest.approx(optimal_cut(wl, 5)) == 1.0


def test_kl_single_cluster_when_fits(rng):
    wl = random_workload(rng, 6)
    g = partition(wl, cfg(Algorithm.KL, 16))
    assert g.n_clusters == 1 and cost_global_spikes(g) == 0.0


def test_kl_path_graph_cuts_one_edge():
    wl = SnnWorkload.build([(i, "hidden") for i in range(6)], [(i, i + 1, 1.0) for i in range(5)])
    g = partition(wl, cfg(Algorithm.KL, 3))
    assert g.is_feasible()
    assert len(g.global_synapses) == 1
    assert optimal_cut(wl, 3) == 1.0


def test_kl_passes_never_increase_cut(rng):
    for _ in range(50):
        n = 10
        w = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.4), 1)
        w = w + w.T
        side = np.zeros(n, dtype=np.uint8)
        side[rng.permutation(n)[: n // 2]] = 1
        history = []
        kl_refine(w, side.copy(), history)
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))
        assert history[0] <= cut_weight(w, side) + 1e-12


def test_pso_separable_components():
    syn = [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)]
    wl = SnnWorkload.build([(i, "hidden") for i in range(6)], syn,
                           SpikeTrace.from_events([(0, v, t) for v in range(6) for t in range(3)]))
    g = partition(wl, cfg(Algorithm.PSO, 3, iterations=50))
    assert g.is_feasible() and cost_global_spikes(g) == 0.0


def test_pso_zero_iterations_defined(rng):
    wl = bounded_fanin_graph(rng)
    g = partition(wl, cfg(Algorithm.PSO, 4, swarm_size=2, iterations=0))
    assert g.is_feasible()
    base = partition(wl, cfg(Algorithm.ARBITRARY, 4))
    assert cost_global_spikes(g) <= cost_global_spikes(base)


def test_pso_matches_exhaustive_optimum():
    hits = 0
    for seed in range(100):
        wl = bounded_fanin_graph(np.random.default_rng(seed))
        g = partition(wl, cfg(Algorithm.PSO, 4, seed=seed, iterations=100))
        assert g.is_feasible()
        hits += cost_global_spikes(g) <= optimal_cut(wl, 4) + 1e-9
    assert hits >= 90, hits


def test_greedy_independent_two_input_neurons():
    neurons = [(i, "input") for i in range(8)] + [(8 + j, "output") for j in range(4)]
    syn = [(2 * j + i, 8 + j, 1.0) for j in range(4) for i in range(2)]
    wl = SnnWorkload.build(neurons, syn)
    assert partition(wl, cfg(Algorithm.GREEDY, 4)).n_clusters == 2


def test_greedy_empty_and_single():
    empty = SnnWorkload.build([], [])
    assert partition(empty, cfg(Algorithm.GREEDY, 4)).n_clusters == 0
    wl = SnnWorkload.build([(i, "input") for i in range(4)] + [(4, "output")], [(i, 4, 1.0) for i in range(4)])
    assert partition(wl, cfg(Algorithm.GREEDY, 4)).n_clusters == 1


def test_arbitrary_chain_and_determinism(rng):
    chain = SnnWorkload.build([(i, "hidden") for i in range(3)], [(0, 1, 1.0), (1, 2, 1.0)])
    assert partition(chain, cfg(Algorithm.ARBITRARY, 2)).n_clusters == 2
    wl = bounded_fanin_graph(rng, n=12)
    a = partition(wl, cfg(Algorithm.ARBITRARY, 4, seed=3))
    assert a == partition(wl, cfg(Algorithm.ARBITRARY, 4, seed=3))
    assert all(partition(wl, cfg(Algorithm.ARBITRARY, 4, seed=s)).is_feasible() for s in range(10))


@pytest.mark.parametrize("algo", list(Algorithm))
def test_infeasible_neuron_reported(algo):
    wl = SnnWorkload.build([(i, "input") for i in range(5)] + [(5, "output")], [(i, 5, 1.0) for i in range(5)])
    with pytest.raises(InfeasibleError):
        partition(wl, cfg(algo, 4))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(list(Algorithm)), st.sampled_from(list(Objective)))
def test_feasible_exact_and_deterministic(seed, algo, objective):
    wl = bounded_fanin_graph(np.random.default_rng(seed), n=10, cap=4)
    c = cfg(algo, 4, seed=seed, objective=objective, iterations=20)
    g = partition(wl, c)
    assert g.is_feasible()
    internal = [(s.src, s.dst) for cl in g.clusters for s in cl.internal]
    glob = [(s.src, s.dst) for s in g.global_synapses]
    assert sorted(internal + glob) == sorted((s.src, s.dst) for s in wl.synapses)
    assert partition(wl, c) == g


def test_dominance_over_arbitrary():
    kl_ok = pso_ok = 0
    for seed in range(40):
        rng = np.random.default_rng(seed)
        wl = bounded_fanin_graph(rng, n=int(rng.integers(8, 13)))
        base = partition(wl, cfg(Algorithm.ARBITRARY, 4, seed=seed))
        kl_ok += cost_global_spikes(partition(wl, cfg(Algorithm.KL, 4, seed=seed))) <= cost_global_spikes(base)
        pso_ok += cost_global_spikes(partition(wl, cfg(Algorithm.PSO, 4, seed=seed, iterations=50))) \
            <= cost_global_spikes(base)
        greedy = partition(wl, cfg(Algorithm.GREEDY, 4, seed=seed, objective=Objective.MIN_CLUSTER_COUNT))
        assert greedy.n_clusters <= base.n_clusters
    assert kl_ok >= 38 and pso_ok == 40


def test_cluster_file_round_trip(rng):
    wl = bounded_fanin_graph(rng)
    g = partition(wl, cfg(Algorithm.KL, 4))
    assert parse_clusters(format_clusters(g), wl, CrossbarCapacity(4)) == g
    with pytest.raises(ValidationError):
        parse_clusters("cluster 0: 0 1\n", wl, CrossbarCapacity(4))
    with pytest.raises(InfeasibleError):
        parse_clusters("cluster 0: " + " ".join(map(str, range(8))) + "\n", wl, CrossbarCapacity(2))


def test_pso_backends_agree(rng):
    if "compiled" not in kernels.BACKENDS:
        pytest.skip("compiled backend not built")
    wl = bounded_fanin_graph(rng, n=12)
    from neuromap import partition as part_mod
    results = []
    for name, backend in kernels.BACKENDS.items():
        saved = kernels.repair_assign, kernels.cut_costs
        kernels.repair_assign, kernels.cut_costs = backend.repair_assign, backend.cut_costs
        try:
            results.append(part_mod.partition(wl, cfg(Algorithm.PSO, 4, iterations=30)))
        finally:
            kernels.repair_assign, kernels.cut_costs = saved
    assert results[0] == results[1]
