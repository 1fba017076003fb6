"""Independent brute-force oracles used to freeze expected values in tests."""

from __future__ import annotations

import itertools

import numpy as np

from neuromap.model import NeuronKind, SnnWorkload


def _feasible(workload: SnnWorkload, members, n: int) -> bool:
    rows = set()
    cols = 0
    for m in members:
        rows.update(workload.fanin[m])
        cols += workload.neurons[m].kind is not NeuronKind.INPUT
        if len(workload.fanin[m]) > n:
            return False
    return len(rows) <= n and cols <= n


def optimal_cut(workload: SnnWorkload, n: int) -> float:
    """Exhaustive min spike cut over all capacity-feasible set partitions (branch and bound)."""
    w = {}
    for s, wt in zip(workload.synapses, workload.edge_weights()):
        w[(s.src, s.dst)] = w.get((s.src, s.dst), 0.0) + wt
    nbrs = [[] for _ in range(workload.n_neurons)]
    for (a, b), wt in w.items():
        nbrs[a].append((b, wt))
        nbrs[b].append((a, wt))
    best = [np.inf]
    assign = [-1] * workload.n_neurons
    groups: list[list[int]] = []

    def rec(v, cost):
        if cost >= best[0] - 1e-12:
            return
        if v == workload.n_neurons:
            best[0] = cost
            return
        for g in range(len(groups) + 1):
            if g == len(groups):
                groups.append([])
            groups[g].append(v)
            if _feasible(workload, groups[g], n):
                assign[v] = g
                extra = sum(wt for u, wt in nbrs[v] if u < v and assign[u] != g)
                rec(v + 1, cost + extra)
                assign[v] = -1
            groups[g].pop()
            if not groups[g]:
                groups.pop()

    rec(0, 0.0)
    return best[0]


def optimal_placement_cost(traffic: dict[tuple[int, int], float], n_clusters: int, dist: np.ndarray) -> float:
    perms = np.array(list(itertools.permutations(range(dist.shape[0]), n_clusters)), dtype=np.int64)
    if not traffic or perms.size == 0:
        return 0.0
    cost = np.zeros(perms.shape[0])
    for (a, b), wt in traffic.items():
        cost += wt * dist[perms[:, a], perms[:, b]]
    return float(cost.min())


def brute_inversions(values) -> int:
    return sum(1 for i in range(len(values)) for j in range(i + 1, len(values)) if values[i] > values[j])


def _path_ladder(n_wl: int, n_bl: int, r_wl, r_bl, c_wl, c_bl):
    """Series RC chain: n_wl wordline segments then n_bl bitline segments, each
    a resistor into a node with its capacitance to ground."""
    r = np.array([r_wl] * n_wl + [r_bl] * n_bl, dtype=float)
    c = np.array([c_wl] * n_wl + [c_bl] * n_bl, dtype=float)
    m = r.size
    g = np.zeros((m, m))
    for k in range(m):
        gk = 1.0 / r[k]
        g[k, k] += gk
        if k > 0:
            g[k - 1, k - 1] += gk
            g[k - 1, k] -= gk
            g[k, k - 1] -= gk
    return g, c


def nodal_first_moment(n_wl, n_bl, r_wl, r_bl, c_wl, c_bl) -> float:
    """Exact first moment of the step response at the sink node: solve G x = C 1."""
    g, c = _path_ladder(n_wl, n_bl, r_wl, r_bl, c_wl, c_bl)
    return float(np.linalg.solve(g, c)[-1])


def transient_delay_area(n_wl, n_bl, r_wl, r_bl, c_wl, c_bl, samples: int = 20001) -> float:
    """Integral of (1 - v_sink(t)) for a unit step at the driver, by numerical quadrature
    of the modal solution of C dv/dt = -G v + g_1 e_1."""
    g, c = _path_ladder(n_wl, n_bl, r_wl, r_bl, c_wl, c_bl)
    a = g / c[:, None]
    lam, vec = np.linalg.eig(a)
    lam, vec = lam.real, vec.real
    coef = np.linalg.solve(vec, np.ones(g.shape[0]))
    t = np.linspace(0.0, 40.0 / lam.min(), samples)
    resid = (vec[-1] * coef) @ np.exp(-np.outer(lam, t))
    return float(np.sum((resid[1:] + resid[:-1]) * np.diff(t)) / 2.0)
