"""Background-node fetching and vanilla-subgraph construction.

Two kinds of background nodes are worth keeping for target classification:

* bridging nodes, which connect two or more targets with a small summed
  hop distance and so carry structural connectivity, and
* affiliation nodes, which sit close to a target and carry features that
  correlate strongly with it.

All distances here are "background-interior": a path qualifies only if
every node strictly between its endpoints is a background node. Target
nodes block propagation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import Graph, RoleMask, induced_subgraph

__all__ = [
    "FetchConfig",
    "DistanceRecord",
    "FetchResult",
    "fetch_bridging",
    "fetch_affiliation",
    "build_vanilla",
    "feature_correlation",
]


@dataclass(frozen=True)
class FetchConfig:
    """Depth and width knobs for fetching.

    d1       hop budget for a bridge: the two shortest distinct-target
             distances of a background node must sum to at most d1.
    d2       maximum hop distance for affiliation candidates.
    k_affil  per-target quota of highest-correlation affiliation nodes.
    hop_cap  optional override of the structure-set hop cap used during
             condensation; defaults to max(d1 - 1, d2), the deepest
             distance any fetched node can owe its selection to.
    """

    d1: int = 2
    d2: int = 1
    k_affil: int = 5
    hop_cap: int | None = None

    def __post_init__(self) -> None:
        if self.d1 < 2:
            raise InputError("d1 must be at least 2")
        if self.d2 < 1:
            raise InputError("d2 must be at least 1")
        if self.k_affil < 0:
            raise InputError("k_affil must be non-negative")
        if self.hop_cap is not None and self.hop_cap < 1:
            raise InputError("hop_cap must be at least 1 when given")

    @property
    def mss_hop_cap(self) -> int:
        return self.hop_cap if self.hop_cap is not None else max(self.d1 - 1, self.d2)


@dataclass(frozen=True)
class DistanceRecord:
    """Two shortest background-interior distances from distinct targets.

    ``second_*`` is absent while fewer than two distinct targets reach the
    node within the explored depth. Invariant: best_dist <= second_dist and
    best_target != second_target whenever both are present.
    """

    best_target: int
    best_dist: int
    second_target: int | None = None
    second_dist: int | None = None

    @property
    def bridge_sum(self) -> int | None:
        if self.second_dist is None:
            return None
        return self.best_dist + self.second_dist


def _two_label_bfs(
    g: Graph, roles: RoleMask, depth_cap: int
) -> dict[int, DistanceRecord]:
    """Multi-source BFS keeping per background node the two shortest
    distances that originate at distinct targets.

    Runs level-synchronously so ties at equal distance resolve toward the
    smaller target id regardless of traversal order. Each node expands once
    per accepted label, i.e. at most twice, so every adjacency list is
    scanned O(1) times. Labels are exact for all distances <= depth_cap.
    """
    is_target = roles.is_target
    indptr, indices = g.indptr, g.indices
    n = g.node_count
    best_t = np.full(n, -1, dtype=np.int64)
    best_d = np.zeros(n, dtype=np.int64)
    sec_t = np.full(n, -1, dtype=np.int64)
    sec_d = np.zeros(n, dtype=np.int64)

    # (node, originating target) pairs that accepted a label last round
    frontier: list[tuple[int, int]] = [(int(t), int(t)) for t in roles.targets]
    for dist in range(1, depth_cap + 1):
        proposals: dict[int, set[int]] = {}
        for node, origin in frontier:
            for w in indices[indptr[node] : indptr[node + 1]].tolist():
                if not is_target[w]:
                    proposals.setdefault(w, set()).add(origin)
        next_frontier: list[tuple[int, int]] = []
        for node in sorted(proposals):
            if sec_t[node] >= 0:
                continue
            for origin in sorted(proposals[node]):
                if best_t[node] < 0:
                    best_t[node], best_d[node] = origin, dist
                    next_frontier.append((node, origin))
                elif origin != best_t[node]:
                    sec_t[node], sec_d[node] = origin, dist
                    next_frontier.append((node, origin))
                    break
        frontier = next_frontier
        if not frontier:
            break

    records: dict[int, DistanceRecord] = {}
    for node in np.flatnonzero(best_t >= 0).tolist():
        if sec_t[node] >= 0:
            records[node] = DistanceRecord(
                int(best_t[node]), int(best_d[node]), int(sec_t[node]), int(sec_d[node])
            )
        else:
            records[node] = DistanceRecord(int(best_t[node]), int(best_d[node]))
    return records


def _bridging_from_records(
    records: dict[int, DistanceRecord], d1: int
) -> frozenset[int]:
    return frozenset(
        node
        for node, rec in records.items()
        if rec.bridge_sum is not None and rec.bridge_sum <= d1
    )


def fetch_bridging(
    g: Graph, roles: RoleMask, d1: int
) -> tuple[frozenset[int], dict[int, DistanceRecord]]:
    """Background nodes whose two best distinct-target distances sum to <= d1.

    Returns the bridging set and the distance records of every background
    node reached within d1 - 1 hops. Graphs with a single target yield an
    empty set (bridging needs two distinct origins).
    """
    if d1 < 2:
        raise InputError("d1 must be at least 2")
    records = _two_label_bfs(g, roles, d1 - 1)
    return _bridging_from_records(records, d1), records


def _background_reach(
    g: Graph, roles: RoleMask, source: int, depth: int
) -> dict[int, int]:
    """Background nodes within ``depth`` background-interior hops of
    ``source``, mapped to their shortest such distance."""
    is_target = roles.is_target
    indptr, indices = g.indptr, g.indices
    dist: dict[int, int] = {}
    frontier = [source]
    for d in range(1, depth + 1):
        nxt: list[int] = []
        for node in frontier:
            for w in indices[indptr[node] : indptr[node + 1]].tolist():
                if is_target[w] or w in dist:
                    continue
                dist[w] = d
                nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    return dist


def feature_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of two feature vectors over their coordinates.

    Zero-variance vectors correlate 0 by convention, which keeps constant
    (uninformative) features from poisoning rankings with NaNs.
    """
    xc = np.asarray(x, dtype=np.float64)
    yc = np.asarray(y, dtype=np.float64)
    if xc.shape != yc.shape or xc.ndim != 1:
        raise InputError("feature vectors must be one-dimensional and equal length")
    xc = xc - xc.mean()
    yc = yc - yc.mean()
    nx = float(np.sqrt(xc @ xc))
    ny = float(np.sqrt(yc @ yc))
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return float((xc @ yc) / (nx * ny))


def _score_targets(
    g: Graph,
    roles: RoleMask,
    centered: np.ndarray,
    norms: np.ndarray,
    targets: list[int],
    d2: int,
    k: int,
) -> list[tuple[int, np.ndarray, np.ndarray]]:
    out = []
    for t in targets:
        reach = _background_reach(g, roles, t, d2)
        if not reach:
            continue
        cands = np.fromiter(reach.keys(), dtype=np.int64, count=len(reach))
        cands.sort()
        if norms[t] == 0.0:
            pcc = np.zeros(cands.size)
        else:
            pcc = centered[cands] @ centered[t]
            denom = norms[cands] * norms[t]
            nz = denom > 0.0
            pcc[nz] /= denom[nz]
            pcc[~nz] = 0.0
        # rank by correlation descending, smaller node id breaking ties
        order = np.lexsort((cands, -pcc))[:k]
        out.append((t, cands[order], pcc[order]))
    return out


def fetch_affiliation(
    g: Graph,
    roles: RoleMask,
    features: np.ndarray,
    d2: int,
    k: int,
    threads: int = 1,
) -> dict[int, tuple[tuple[int, float], ...]]:
    """Per-target top-k feature-correlated background nodes within d2 hops.

    For each target, candidates are the background nodes reachable within
    d2 background-interior hops; the k with the largest Pearson correlation
    to the target's feature vector are kept (ties at the k-th rank break
    toward the smaller node id). The union over targets is returned as a
    map from node id to its (owner target, correlation) annotations; a node
    picked by several targets appears once with all owners recorded.
    """
    if d2 < 1:
        raise InputError("d2 must be at least 1")
    if k < 0:
        raise InputError("k must be non-negative")
    X = np.asarray(features)
    if X.ndim != 2 or X.shape[0] != g.node_count:
        raise InputError("feature matrix must have one row per node")
    if X.shape[1] < 2:
        raise InputError("feature dimension must be at least 2 for correlations")
    if k == 0:
        return {}

    Xf = X.astype(np.float64, copy=False)
    centered = Xf - Xf.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))

    targets = [int(t) for t in roles.targets]
    if threads > 1 and len(targets) > 1:
        chunks = np.array_split(np.asarray(targets), min(threads, len(targets)))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    lambda c: _score_targets(
                        g, roles, centered, norms, [int(x) for x in c], d2, k
                    ),
                    chunks,
                )
            )
        scored = [row for part in parts for row in part]
    else:
        scored = _score_targets(g, roles, centered, norms, targets, d2, k)

    owners: dict[int, list[tuple[int, float]]] = {}
    for t, nodes, pccs in scored:
        for node, pcc in zip(nodes.tolist(), pccs.tolist()):
            owners.setdefault(node, []).append((t, pcc))
    return {node: tuple(owners[node]) for node in sorted(owners)}


@dataclass(frozen=True)
class FetchResult:
    """Everything the condenser needs about one fetching pass.

    ``vanilla`` is the induced subgraph over all targets plus the fetched
    background nodes; ``vanilla_nodes[i]`` is the original id of its node
    ``i`` and ``id_map`` is the inverse. ``records`` covers the background
    nodes reached within max(d1 - 1, d2) hops of any target.
    """

    config: FetchConfig
    roles: RoleMask
    bridging: frozenset[int]
    affiliation: dict[int, tuple[tuple[int, float], ...]]
    records: dict[int, DistanceRecord]
    vanilla: Graph
    vanilla_nodes: np.ndarray
    id_map: dict[int, int] = field(repr=False)

    @property
    def fetched_backgrounds(self) -> list[int]:
        return sorted(set(self.bridging) | set(self.affiliation))

    @property
    def vanilla_is_target(self) -> np.ndarray:
        return self.roles.is_target[self.vanilla_nodes]

    def owners(self, node: int) -> tuple[tuple[int, float], ...]:
        return self.affiliation.get(node, ())


def build_vanilla(
    g: Graph,
    roles: RoleMask,
    features: np.ndarray,
    config: FetchConfig,
    threads: int = 1,
) -> FetchResult:
    """Fetch bridging and affiliation nodes and induce the vanilla subgraph.

    All targets are always preserved; the background portion of the result
    is exactly the union of the two fetched sets.
    """
    if roles.node_count != g.node_count:
        raise InputError("role mask does not match graph size")
    records = _two_label_bfs(g, roles, max(config.d1 - 1, config.d2))
    bridging = _bridging_from_records(records, config.d1)
    affiliation = fetch_affiliation(
        g, roles, features, config.d2, config.k_affil, threads=threads
    )
    keep = np.union1d(
        roles.targets,
        np.asarray(sorted(set(bridging) | set(affiliation)), dtype=np.int64),
    )
    vanilla, id_map = induced_subgraph(g, keep)
    return FetchResult(
        config=config,
        roles=roles,
        bridging=bridging,
        affiliation=affiliation,
        records=records,
        vanilla=vanilla,
        vanilla_nodes=keep,
        id_map=id_map,
    )
