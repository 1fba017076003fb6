"""Cluster a workload into crossbar-sized pieces."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InfeasibleError, ParseError, ValidationError
from .model import ClusteredGraph, CrossbarCapacity, Packer, SnnWorkload
from .pso import PsoParams, step


class Objective(str, enum.Enum):
    MIN_GLOBAL_SPIKES = "spikes"
    MIN_CLUSTER_COUNT = "clusters"


class Algorithm(str, enum.Enum):
    KL = "kl"
    PSO = "pso"
    GREEDY = "greedy"
    ARBITRARY = "arbitrary"


@dataclass(frozen=True)
class PartitionConfig:
    objective: Objective = Objective.MIN_GLOBAL_SPIKES
    algorithm: Algorithm = Algorithm.KL
    capacity: CrossbarCapacity = CrossbarCapacity(128)
    seed: int = 0
    pso: PsoParams = field(default_factory=PsoParams)
    kl_restarts: int = 4


def cost_global_spikes(g: ClusteredGraph) -> float:
    return float(sum(s.spikes for s in g.global_synapses))


def _check_single(workload: SnnWorkload, packer: Packer) -> None:
    for v in range(workload.n_neurons):
        if not packer.single_ok(v):
            raise InfeasibleError(
                f"neuron {v} has fanin {len(workload.fanin[v])} > crossbar size {packer.n}; decompose first"
            )


def _edges(workload: SnnWorkload):
    src = np.array([s.src for s in workload.synapses], dtype=np.int64)
    dst = np.array([s.dst for s in workload.synapses], dtype=np.int64)
    return src, dst, np.ascontiguousarray(workload.edge_weights(), dtype=np.float64)


def partition(workload: SnnWorkload, cfg: PartitionConfig) -> ClusteredGraph:
    fn = {
        Algorithm.KL: partition_kl,
        Algorithm.PSO: partition_pso,
        Algorithm.GREEDY: partition_greedy_pack,
        Algorithm.ARBITRARY: partition_arbitrary,
    }[cfg.algorithm]
    return fn(workload, cfg)


# -- baselines ------------------------------------------------------------------


def arbitrary_assignment(workload: SnnWorkload, cap: CrossbarCapacity, seed: int) -> list[int]:
    packer = Packer(workload, cap)
    _check_single(workload, packer)
    order = np.random.default_rng(seed).permutation(workload.n_neurons)
    assign = [0] * workload.n_neurons
    cur, rows, cols = -1, set(), 0
    for v in order:
        v = int(v)
        if cur < 0 or not packer.can_add(rows, cols, v):
            cur, rows, cols = cur + 1, set(), 0
        rows |= packer.fanin[v]
        cols += packer.is_col[v]
        assign[v] = cur
    return assign


def partition_arbitrary(workload: SnnWorkload, cfg: PartitionConfig) -> ClusteredGraph:
    """Seeded random neuron order, filling one cluster until the next neuron no longer fits."""
    assign = arbitrary_assignment(workload, cfg.capacity, cfg.seed)
    return ClusteredGraph.from_assignment(workload, assign, cfg.capacity)


def partition_greedy_pack(workload: SnnWorkload, cfg: PartitionConfig) -> ClusteredGraph:
    """First-fit decreasing by fanin (ties by id).

    First fit is not guaranteed to beat every ordering, so the arbitrary
    fill for the same seed is kept instead when it needs fewer clusters.
    """
    packer = Packer(workload, cfg.capacity)
    _check_single(workload, packer)
    order = sorted(range(workload.n_neurons), key=lambda v: (-len(workload.fanin[v]), v))
    bins: list[tuple[set[int], list[int]]] = []
    assign = [0] * workload.n_neurons
    for v in order:
        for idx, (rows, state) in enumerate(bins):
            if packer.can_add(rows, state[0], v):
                rows |= packer.fanin[v]
                state[0] += packer.is_col[v]
                assign[v] = idx
                break
        else:
            bins.append((set(packer.fanin[v]), [packer.is_col[v]]))
            assign[v] = len(bins) - 1
    baseline = arbitrary_assignment(workload, cfg.capacity, cfg.seed)
    if baseline and max(baseline) + 1 < len(bins):
        assign = baseline
    return ClusteredGraph.from_assignment(workload, assign, cfg.capacity)


# -- Kernighan-Lin ----------------------------------------------------------------


def symmetric_weights(workload: SnnWorkload) -> np.ndarray:
    n = workload.n_neurons
    w = np.zeros((n, n))
    for s, wt in zip(workload.synapses, workload.edge_weights()):
        w[s.src, s.dst] += wt
        w[s.dst, s.src] += wt
    return w


def cut_weight(weights: np.ndarray, side: np.ndarray) -> float:
    diff = side[:, None] != side[None, :]
    return float(weights[diff].sum() / 2.0)


def kl_refine(weights: np.ndarray, side: np.ndarray, history: list[float] | None = None) -> np.ndarray:
    """Run KL passes on ``side`` (uint8 labels) until a pass stops improving."""
    side = np.ascontiguousarray(side, dtype=np.uint8)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    while True:
        if history is not None:
            history.append(cut_weight(weights, side))
        same = side[:, None] == side[None, :]
        d = (weights * ~same).sum(axis=1) - (weights * same).sum(axis=1)
        if kernels.kl_pass(weights, side, d) <= 0.0:
            return side


def kl_bisect(weights: np.ndarray, rng: np.random.Generator, restarts: int = 4) -> np.ndarray:
    """Balanced bipartition (sizes differ by at most one) minimizing cut weight."""
    n = weights.shape[0]
    best, best_cut = None, np.inf
    for _ in range(max(1, restarts)):
        side = np.ones(n, dtype=np.uint8)
        side[rng.permutation(n)[: n // 2]] = 0
        side = kl_refine(weights, side)
        cut = cut_weight(weights, side)
        if cut < best_cut - 1e-12:
            best, best_cut = side, cut
    return best


def partition_kl(workload: SnnWorkload, cfg: PartitionConfig) -> ClusteredGraph:
    """Recursive KL bisection of the spike-weighted graph until every part fits,
    then greedy merging of part pairs that still fit together (heaviest traffic first).
    """
    packer = Packer(workload, cfg.capacity)
    _check_single(workload, packer)
    weights = symmetric_weights(workload)
    rng = np.random.default_rng(cfg.seed)
    parts: list[list[int]] = []

    stack = [list(range(workload.n_neurons))] if workload.n_neurons else []
    while stack:
        nodes = stack.pop()
        if packer.fits(nodes):
            parts.append(nodes)
            continue
        sub = weights[np.ix_(nodes, nodes)]
        side = kl_bisect(sub, rng, cfg.kl_restarts)
        a = [v for v, s in zip(nodes, side) if s == 0]
        b = [v for v, s in zip(nodes, side) if s == 1]
        stack += [b, a]

    parts = merge_clusters(parts, weights, packer)
    assign = [0] * workload.n_neurons
    for idx, part in enumerate(parts):
        for v in part:
            assign[v] = idx
    return ClusteredGraph.from_assignment(workload, assign, cfg.capacity)


def merge_clusters(parts: list[list[int]], weights: np.ndarray, packer: Packer) -> list[list[int]]:
    """Merge feasible pairs, heaviest mutual traffic first, lowest indices on ties."""
    parts = [sorted(p) for p in parts]
    alive = list(range(len(parts)))
    traffic = {}
    ok = {}
    for x in range(len(parts)):
        for y in range(x + 1, len(parts)):
            traffic[x, y] = float(weights[np.ix_(parts[x], parts[y])].sum())
            ok[x, y] = packer.fits(parts[x] + parts[y])
    while True:
        best = None
        for (x, y), feasible in ok.items():
            if feasible and (best is None or traffic[x, y] > traffic[best] or
                             (traffic[x, y] == traffic[best] and (x, y) < best)):
                best = (x, y)
        if best is None:
            break
        x, y = best
        parts[x] = sorted(parts[x] + parts[y])
        alive.remove(y)
        for key in [k for k in ok if y in k]:
            del ok[key], traffic[key]
        for z in alive:
            if z == x:
                continue
            key = (min(x, z), max(x, z))
            traffic[key] = float(weights[np.ix_(parts[x], parts[z])].sum())
            ok[key] = packer.fits(parts[x] + parts[z])
    return [parts[i] for i in alive]


# -- particle swarm ----------------------------------------------------------------


def csr_fanin(packer: Packer):
    indptr = np.zeros(len(packer.fanin) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(f) for f in packer.fanin])
    indices = np.array([s for f in packer.fanin for s in sorted(f)], dtype=np.int64)
    return indptr, indices, np.array(packer.is_col, dtype=np.uint8)


POLISH_TOP = 5


def partition_pso(workload: SnnWorkload, cfg: PartitionConfig) -> ClusteredGraph:
    """Discrete PSO over neuron-to-cluster assignments.

    Each particle holds one score per (neuron, cluster slot); a neuron goes to
    its highest-scoring slot (lowest slot on ties), then capacity repair runs.
    Fitness is the objective plus a capacity-violation penalty. There is one
    slot more than the arbitrary baseline uses; the baseline also seeds
    particle 0, so the result never costs more than it. For the spike
    objective the best personal bests finish with a move/swap local search.
    """
    n = workload.n_neurons
    packer = Packer(workload, cfg.capacity)
    _check_single(workload, packer)
    if n == 0:
        return ClusteredGraph.from_assignment(workload, [], cfg.capacity)
    baseline = np.array(arbitrary_assignment(workload, cfg.capacity, cfg.seed), dtype=np.int64)
    k = min(n, int(baseline.max()) + 2)
    src, dst, w = _edges(workload)
    csr = csr_fanin(packer)
    if cfg.objective is Objective.MIN_GLOBAL_SPIKES:
        penalty = 10.0 * (float(w.max()) if w.size else 1.0)
    else:
        penalty = 10.0 * n

    params = cfg.pso
    rng = np.random.default_rng(cfg.seed)
    pos = rng.random((params.swarm_size, n, k))
    vel = rng.uniform(-1.0, 1.0, (params.swarm_size, n, k))
    pos[0] = 0.0
    pos[0, np.arange(n), baseline] = 1.0

    def evaluate(positions):
        assign = np.ascontiguousarray(np.argmax(positions, axis=2), dtype=np.int64)
        viol = kernels.repair_assign(assign, k, packer.n, *csr).astype(np.float64)
        if cfg.objective is Objective.MIN_GLOBAL_SPIKES:
            cost = kernels.cut_costs(assign, src, dst, w)
        else:
            cut = kernels.cut_costs(assign, src, dst, w)
            used = np.array([len(np.unique(a)) for a in assign], dtype=float)
            cost = used + cut / (float(w.sum()) + 1.0)
        return assign, cost + penalty * viol, viol

    assign, fit, viol = evaluate(pos)
    pbest, pbest_fit, pbest_assign, pbest_viol = pos.copy(), fit, assign, viol
    g = int(np.argmin(pbest_fit))
    for _ in range(params.iterations):
        step(params, rng, pos, vel, pbest, pbest[g])
        assign, fit, viol = evaluate(pos)
        better = fit < pbest_fit
        pbest[better] = pos[better]
        pbest_fit = np.where(better, fit, pbest_fit)
        pbest_assign = np.where(better[:, None], assign, pbest_assign)
        pbest_viol = np.where(better, viol, pbest_viol)
        g = int(np.argmin(pbest_fit))

    feasible = np.flatnonzero(pbest_viol == 0)
    if feasible.size == 0:
        raise InfeasibleError(
            f"PSO found no capacity-feasible assignment ({k} slots, best violation {pbest_viol.min():g})"
        )
    if cfg.objective is Objective.MIN_GLOBAL_SPIKES:
        # polish the best few distinct feasible personal bests; keep the cheapest
        finals = {}
        for p in feasible[np.argsort(pbest_fit[feasible], kind="stable")]:
            if len(finals) == POLISH_TOP:
                break
            key = tuple(pbest_assign[p].tolist())
            if key not in finals:
                a = pbest_assign[p].copy()
                finals[key] = (_polish(a, packer, src, dst, w), int(p), a)
        assign = min(finals.values(), key=lambda t: (t[0], t[1]))[2]
    else:
        assign = pbest_assign[int(feasible[np.argmin(pbest_fit[feasible])])]
    return ClusteredGraph.from_assignment(workload, assign.tolist(), cfg.capacity)


def _polish(assign: np.ndarray, packer: Packer, src, dst, w) -> float:
    """Best-improvement single moves (into any cluster or a fresh one) and pair
    swaps on the swarm's answer, keeping feasibility."""
    n = assign.shape[0]
    sym = np.zeros((n, n))
    np.add.at(sym, (src, dst), w)
    sym = sym + sym.T
    cur = float(kernels.cut_costs(assign[None, :], src, dst, w)[0])
    idx = np.arange(n)
    while True:
        k = int(assign.max()) + 2
        onehot = np.zeros((n, k))
        onehot[idx, assign] = 1.0
        conn = sym @ onehot
        own = conn[idx, assign]
        # moving v to c changes the cut by own[v] - conn[v, c]
        move = own[:, None] - conn
        move[idx, assign] = np.inf
        # swapping u and v (different clusters) is the two moves plus their shared edge
        cross = conn[:, assign]
        swap = own[:, None] + own[None, :] - cross - cross.T + 2.0 * sym
        swap[assign[:, None] == assign[None, :]] = np.inf
        swap[np.tril_indices(n)] = np.inf
        cands = [(float(move[v, c]), 0, v, c) for v, c in zip(*np.nonzero(move < -1e-12))]
        cands += [(float(swap[u, v]), 1, u, v) for u, v in zip(*np.nonzero(swap < -1e-12))]
        cands.sort()
        for _, kind, a, b in cands:
            trial = assign.copy()
            if kind == 0:
                trial[a] = b
                ok = packer.fits(np.flatnonzero(trial == b).tolist())
            else:
                trial[a], trial[b] = assign[b], assign[a]
                ok = packer.fits(np.flatnonzero(trial == trial[a]).tolist()) and \
                    packer.fits(np.flatnonzero(trial == trial[b]).tolist())
            if not ok:
                continue
            cost = float(kernels.cut_costs(trial[None, :], src, dst, w)[0])
            if cost < cur - 1e-12:
                assign[:] = trial
                cur = cost
                break
        else:
            return cur


# -- cluster files ------------------------------------------------------------------


def format_clusters(g: ClusteredGraph) -> str:
    return "".join(f"cluster {i}: {' '.join(map(str, c.members))}\n" for i, c in enumerate(g.clusters))


def format_global_edges(g: ClusteredGraph) -> str:
    lines = ["src_cluster,dst_cluster,src,dst,weight,spikes"]
    lines += [f"{s.src_cluster},{s.dst_cluster},{s.src},{s.dst},{s.weight!r},{s.spikes!r}" for s in g.global_synapses]
    return "\n".join(lines) + "\n"


def parse_clusters(text: str, workload: SnnWorkload, capacity: CrossbarCapacity,
                   source: str = "<clusters>") -> ClusteredGraph:
    assign = [-1] * workload.n_neurons
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, body = line.partition(":")
        parts = head.split()
        if not sep or len(parts) != 2 or parts[0] != "cluster":
            raise ParseError(source, lineno, f"expected 'cluster <id>: n1 n2 ...', got {raw.strip()!r}")
        try:
            cid = int(parts[1])
            members = [int(x) for x in body.split()]
        except ValueError:
            raise ParseError(source, lineno, f"non-integer id in {raw.strip()!r}") from None
        for m in members:
            if not 0 <= m < workload.n_neurons or assign[m] != -1:
                raise ValidationError(f"{source}:{lineno}: neuron {m} unknown or assigned twice")
            assign[m] = cid
    if -1 in assign:
        raise ValidationError(f"{source}: neuron {assign.index(-1)} is not in any cluster")
    g = ClusteredGraph.from_assignment(workload, assign, capacity)
    if not g.is_feasible():
        raise InfeasibleError(f"{source}: a cluster exceeds the {capacity.n}x{capacity.n} crossbar")
    return g


def load_clusters(path: str | Path, workload: SnnWorkload, capacity: CrossbarCapacity) -> ClusteredGraph:
    path = Path(path)
    return parse_clusters(path.read_text(), workload, capacity, str(path))
