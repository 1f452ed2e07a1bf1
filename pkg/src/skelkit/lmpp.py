"""Linear message path passing and the swap-equivalence oracle.

A linear pass step aggregates two feature vectors (element-wise mean or
sum) and applies a step-specific weight matrix. Folding such steps along a
path, and then aggregating several incoming paths at a terminal node,
gives a small linear model of neighborhood aggregation. Two background
nodes with identical structure sets should be interchangeable under this
model: swapping their feature vectors must not change the aggregate any
shared target receives. ``check_equivalence`` tests that claim numerically
on concrete graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .graph import Graph, RoleMask

__all__ = [
    "LinearPassSpec",
    "random_spec",
    "lmp",
    "lmpp_path",
    "lmpp_multi",
    "canonical_shortest_path",
    "background_structure_sets",
    "check_equivalence",
    "EquivalenceReport",
]


@dataclass(frozen=True)
class LinearPassSpec:
    """Weights for a linear pass: one d x d matrix per path step plus a
    terminal matrix applied after the final aggregation."""

    weights: tuple[np.ndarray, ...]
    terminal_weight: np.ndarray
    aggregation: str = "mean"

    def __post_init__(self) -> None:
        if self.aggregation not in ("mean", "sum"):
            raise InputError(f"unknown aggregation {self.aggregation!r}")
        mats = list(self.weights) + [self.terminal_weight]
        dim = self.terminal_weight.shape[0]
        for w in mats:
            if w.ndim != 2 or w.shape != (dim, dim):
                raise InputError("all pass matrices must be square and same size")
            if not np.isfinite(w).all():
                raise InputError("pass matrices must be finite")

    @property
    def divisor(self) -> float:
        return 2.0 if self.aggregation == "mean" else 1.0


def random_spec(
    rng: np.random.Generator, dim: int, steps: int, aggregation: str = "mean"
) -> LinearPassSpec:
    scale = 1.0 / np.sqrt(dim)
    mats = tuple(rng.normal(0.0, scale, (dim, dim)) for _ in range(steps))
    return LinearPassSpec(mats, rng.normal(0.0, scale, (dim, dim)), aggregation)


def lmp(
    spec: LinearPassSpec, x_prev: np.ndarray, x_cur: np.ndarray, step: int
) -> np.ndarray:
    """One pass step: aggregate the carried and the local vector, then apply
    the step's weight matrix (steps count from 1)."""
    if step < 1 or step > len(spec.weights):
        raise InputError(f"step {step} outside 1..{len(spec.weights)}")
    x_prev = np.asarray(x_prev, dtype=np.float64)
    x_cur = np.asarray(x_cur, dtype=np.float64)
    if x_prev.shape != x_cur.shape or x_prev.ndim != 1:
        raise InputError("pass vectors must be one-dimensional and equal length")
    if x_prev.shape[0] != spec.terminal_weight.shape[0]:
        raise InputError("pass vector length does not match spec dimension")
    return ((x_prev + x_cur) / spec.divisor) @ spec.weights[step - 1]


def lmpp_path(spec: LinearPassSpec, X: np.ndarray, path: list[int]) -> np.ndarray:
    """Fold pass steps along ``path``, carrying the aggregate forward."""
    if len(path) < 2:
        raise InputError("a pass path needs at least two nodes")
    X = np.asarray(X, dtype=np.float64)
    for node in path:
        if not 0 <= node < X.shape[0]:
            raise InputError(f"path node {node} outside the feature matrix")
    acc = X[path[0]]
    for i, node in enumerate(path[1:], start=1):
        acc = lmp(spec, acc, X[node], i)
    return acc


def lmpp_multi(
    spec: LinearPassSpec, X: np.ndarray, paths: list[list[int]], terminal: int
) -> np.ndarray:
    """Aggregate several paths at their shared terminal node.

    Each path is folded up to its second-to-last node; the terminal then
    aggregates its own feature with every incoming value and applies the
    terminal weight. Length-1 paths contribute the source feature as-is.
    """
    X = np.asarray(X, dtype=np.float64)
    incoming = []
    for p in paths:
        if p[-1] != terminal:
            raise InputError("every path must end at the terminal node")
        incoming.append(X[p[0]] if len(p) == 2 else lmpp_path(spec, X, p[:-1]))
    stacked = np.vstack([X[terminal]] + incoming)
    agg = stacked.mean(axis=0) if spec.aggregation == "mean" else stacked.sum(axis=0)
    return agg @ spec.terminal_weight


def _interior_distances(g: Graph, roles: RoleMask, target: int) -> dict[int, int]:
    """Background-interior hop distances from one target, unbounded."""
    is_target = roles.is_target
    indptr, indices = g.indptr, g.indices
    dist = {target: 0}
    frontier = [target]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for node in frontier:
            for w in indices[indptr[node] : indptr[node + 1]].tolist():
                if is_target[w] or w in dist:
                    continue
                dist[w] = d
                nxt.append(w)
        frontier = nxt
    del dist[target]
    return dist


def background_structure_sets(
    g: Graph, roles: RoleMask, hop_cap: int | None = None
) -> dict[int, tuple[tuple[int, int], ...]]:
    """(target, distance) structure set of every reachable background node,
    computed directly on ``g`` with background-interior path semantics."""
    pairs: dict[int, list[tuple[int, int]]] = {}
    for t in roles.targets.tolist():
        for node, d in _interior_distances(g, roles, t).items():
            if hop_cap is None or d <= hop_cap:
                pairs.setdefault(node, []).append((t, d))
    return {node: tuple(sorted(ps)) for node, ps in pairs.items()}


def canonical_shortest_path(
    g: Graph, roles: RoleMask, source: int, target: int
) -> list[int]:
    """Lexicographically smallest shortest background-interior path from a
    background source to a target. Greedy: at each position step to the
    smallest-id neighbor that is exactly one hop closer to the target."""
    dist = _interior_distances(g, roles, target)
    if source not in dist:
        raise InputError(f"node {source} cannot reach target {target}")
    path = [source]
    cur = source
    d = dist[source]
    while d > 1:
        nxt = None
        for w in g.neighbors(cur).tolist():
            if not roles.is_target[w] and dist.get(w) == d - 1:
                nxt = w
                break  # neighbors are ascending, first hit is smallest
        path.append(nxt)
        cur, d = nxt, d - 1
    path.append(target)
    return path


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of a swap-equivalence run.

    ``qualifying`` counts (u, v, shared-target) triples actually tested;
    a run finding none is a vacuous pass. ``control_min_deviation`` is a
    diagnostic from pairs with unequal structure sets (expected to deviate,
    not guaranteed to)."""

    qualifying: int
    max_deviation: float
    tol: float
    passed: bool
    control_pairs: int = 0
    control_min_deviation: float = float("nan")

    @property
    def vacuous(self) -> bool:
        return self.qualifying == 0


def _swap_deviation(
    spec: LinearPassSpec,
    X: np.ndarray,
    u: int,
    v: int,
    path_u: list[int],
    path_v: list[int],
    terminal: int,
) -> float:
    base = lmpp_multi(spec, X, [path_u, path_v], terminal)
    swapped = np.array(X, dtype=np.float64)
    swapped[[u, v]] = swapped[[v, u]]
    other = lmpp_multi(spec, swapped, [path_u, path_v], terminal)
    return float(np.max(np.abs(base - other)))


def check_equivalence(
    g: Graph,
    roles: RoleMask,
    X: np.ndarray,
    trials: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    specs_per_triple: int = 2,
    with_controls: bool = False,
) -> EquivalenceReport:
    """Numerically test swap-equivalence on all qualifying node pairs.

    Samples up to ``trials`` triples (u, v, T) where u and v are background
    nodes with identical non-empty structure sets and T is one of their
    shared targets. For each triple and a batch of random linear specs
    (alternating mean and sum aggregation), computes the multi-path
    aggregate at T under the original features and under the u/v swap and
    records the worst absolute deviation. Passes iff every deviation is
    within ``tol``; zero qualifying triples is reported as a vacuous pass.
    """
    if g.node_count > 500:
        raise InputError("equivalence checking is a desk-scale oracle (<= 500 nodes)")
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    sets = background_structure_sets(g, roles)

    buckets: dict[tuple, list[int]] = {}
    for node in sorted(sets):
        if sets[node]:
            buckets.setdefault(sets[node], []).append(node)

    triples: list[tuple[int, int, int]] = []
    for key, members in sorted(buckets.items()):
        if len(members) < 2:
            continue
        targets = [t for t, _ in key]
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                for t in targets:
                    triples.append((members[i], members[j], t))
    if len(triples) > trials:
        pick = rng.choice(len(triples), size=trials, replace=False)
        triples = [triples[int(i)] for i in sorted(pick)]

    dim = X.shape[1]
    max_dev = 0.0
    for u, v, t in triples:
        path_u = canonical_shortest_path(g, roles, u, t)
        path_v = canonical_shortest_path(g, roles, v, t)
        steps = max(len(path_u), len(path_v)) - 2
        for s in range(specs_per_triple):
            agg = "mean" if s % 2 == 0 else "sum"
            spec = random_spec(rng, dim, max(steps, 1), agg)
            dev = _swap_deviation(spec, X, u, v, path_u, path_v, t)
            max_dev = max(max_dev, dev)

    control_pairs = 0
    control_min = float("nan")
    if with_controls:
        keys = [k for k, m in sorted(buckets.items()) if m]
        devs = []
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                u = buckets[keys[i]][0]
                v = buckets[keys[j]][0]
                shared = sorted(
                    {t for t, _ in keys[i]} & {t for t, _ in keys[j]}
                )
                if not shared:
                    continue
                t = shared[0]
                pu = canonical_shortest_path(g, roles, u, t)
                pv = canonical_shortest_path(g, roles, v, t)
                spec = random_spec(rng, dim, max(len(pu), len(pv), 3) - 2, "mean")
                devs.append(_swap_deviation(spec, X, u, v, pu, pv, t))
        control_pairs = len(devs)
        control_min = float(min(devs)) if devs else float("nan")

    return EquivalenceReport(
        qualifying=len(triples),
        max_deviation=max_dev,
        tol=tol,
        passed=max_dev <= tol,
        control_pairs=control_pairs,
        control_min_deviation=control_min,
    )
