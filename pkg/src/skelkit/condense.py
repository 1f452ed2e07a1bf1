"""Condense a vanilla subgraph into a skeleton graph.

Three strategies with increasing compression:

* alpha merges background nodes that share an identical structure set
  (accessible targets with hop distances) and keeps quotient edges with
  unit weights.
* beta merges by target set only (distances dropped) and re-encodes the
  lost distances as edge weights: a supernode connects to each of its
  targets with raw weight sum(1/d) over member distances, then weights are
  symmetrically normalized. Background-background edges are dropped;
  target-target edges carry over verbatim with weight 1.
* gamma runs beta and then folds supernodes made purely of affiliation
  nodes into their owning targets' feature vectors, removing the
  supernodes and their edges.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .fetch import FetchResult

__all__ = [
    "Supernode",
    "SkeletonGraph",
    "compute_mss",
    "condense_alpha",
    "condense_beta",
    "condense_gamma",
]

Mss = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Supernode:
    """A synthetic background node standing in for a member group.

    ``members`` holds the ids of the original nodes the supernode replaces
    (source-dataset dense ids when freshly condensed; membership ordinals
    when a skeleton is read back from disk). ``mss`` keeps the shared
    (target, distance) pairs for alpha skeletons and is None for beta and
    gamma; ``targets`` is the shared target set in all strategies.
    """

    members: tuple[int, ...]
    targets: tuple[int, ...]
    mss: Mss | None = None


@dataclass
class SkeletonGraph:
    """Condensed graph: preserved targets plus synthetic supernodes.

    Skeleton node ids run targets first (``0..target_count-1``, ascending
    original id) then supernodes in canonical group-key order. ``weights``
    are the operative edge weights (normalized for beta/gamma) and
    ``raw_weights`` the pre-normalization values; both are 1.0 for alpha
    and for target-target edges. ``folded`` maps gamma-folded background
    nodes to their owning target.
    """

    strategy: str
    aggregation: str
    target_ids: np.ndarray
    supernodes: tuple[Supernode, ...]
    edges: np.ndarray
    weights: np.ndarray
    raw_weights: np.ndarray
    features: np.ndarray
    folded: dict[int, int] = field(default_factory=dict)

    @property
    def target_count(self) -> int:
        return int(self.target_ids.shape[0])

    @property
    def background_count(self) -> int:
        return len(self.supernodes)

    @property
    def node_count(self) -> int:
        return self.target_count + self.background_count

    def validate(self) -> None:
        if self.strategy not in ("alpha", "beta", "gamma"):
            raise InputError(f"unknown strategy {self.strategy!r}")
        if self.aggregation not in ("mean", "sum"):
            raise InputError(f"unknown aggregation {self.aggregation!r}")
        if self.features.shape[0] != self.node_count:
            raise InputError("feature rows do not match skeleton node count")
        if not np.isfinite(self.features).all():
            raise InputError("skeleton features contain non-finite values")
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= self.node_count:
                raise InputError("skeleton edge endpoint out of range")
            if (self.edges[:, 0] == self.edges[:, 1]).any():
                raise InputError("skeleton contains a self-loop")
        if (self.weights <= 0).any() or not np.isfinite(self.weights).all():
            raise InputError("skeleton edge weights must be positive and finite")
        seen: set[int] = set()
        for sn in self.supernodes:
            for m in sn.members:
                if m in seen:
                    raise InputError(f"node {m} appears in two supernodes")
                seen.add(m)
        overlap = seen & set(self.folded)
        if overlap:
            raise InputError(f"nodes {sorted(overlap)[:3]} both folded and merged")


def _aggregate(rows: np.ndarray, aggregation: str) -> np.ndarray:
    if aggregation == "mean":
        return rows.mean(axis=0)
    if aggregation == "sum":
        return rows.sum(axis=0)
    raise InputError(f"unknown aggregation {aggregation!r}")


def compute_mss(
    fetch: FetchResult, hop_cap: int | None = None
) -> dict[int, Mss]:
    """Structure set of every fetched background node.

    For each node: the (target, shortest hop distance) pairs of all targets
    accessible within ``hop_cap`` background-interior hops, measured on the
    vanilla subgraph. Pairs are sorted by target id, so equal sets compare
    equal as tuples. Nodes reaching no target within the cap map to ().
    """
    k = hop_cap if hop_cap is not None else fetch.config.mss_hop_cap
    if k < 1:
        raise InputError("hop cap must be at least 1")
    vanilla = fetch.vanilla
    is_target_local = fetch.vanilla_is_target
    orig = fetch.vanilla_nodes
    indptr, indices = vanilla.indptr, vanilla.indices

    pairs: dict[int, list[tuple[int, int]]] = {
        node: [] for node in fetch.fetched_backgrounds
    }
    for t_local in np.flatnonzero(is_target_local).tolist():
        t_orig = int(orig[t_local])
        dist: dict[int, int] = {}
        frontier = [t_local]
        for d in range(1, k + 1):
            nxt: list[int] = []
            for node in frontier:
                for w in indices[indptr[node] : indptr[node + 1]].tolist():
                    if is_target_local[w] or w in dist:
                        continue
                    dist[w] = d
                    nxt.append(w)
            frontier = nxt
            if not frontier:
                break
        for node_local, d in dist.items():
            pairs[int(orig[node_local])].append((t_orig, d))
    return {node: tuple(sorted(ps)) for node, ps in pairs.items()}


def hashed_group_key(key: tuple, salt: bytes = b"skelkit-mss") -> int:
    """256-bit XOR fingerprint of a structure set.

    Memory-lean alternative to carrying the full tuple around: each
    component maps to a deterministic 256-bit integer (derived by hashing,
    so runs are reproducible) and the components XOR together. Collisions
    are possible in principle (~2^-128 for realistic inputs) which is why
    the exact tuple key is the default.
    """
    acc = 0
    for part in key:
        digest = hashlib.sha256(salt + repr(part).encode()).digest()
        acc ^= int.from_bytes(digest, "little")
    return acc


def _group(
    mss: dict[int, Mss], project: bool, use_hash_keys: bool
) -> list[tuple[tuple, list[int]]]:
    """Group nodes by structure set (projected to target sets if asked).

    Returns groups ordered ascending by key, members ascending, which fixes
    the canonical supernode order independent of iteration details. With
    ``use_hash_keys`` the bucketing goes through the 256-bit fingerprint;
    a representative key per bucket detects (and rejects) collisions, so
    both modes produce the same partition or fail loudly.
    """
    groups: dict[object, tuple[tuple, list[int]]] = {}
    for node in sorted(mss):
        key = mss[node]
        if project:
            key = tuple(sorted({t for t, _ in key}))
        bucket = hashed_group_key(key) if use_hash_keys else key
        entry = groups.get(bucket)
        if entry is None:
            groups[bucket] = (key, [node])
        elif entry[0] != key:
            raise InputError("hash-key collision detected; rerun without hash keys")
        else:
            entry[1].append(node)
    return sorted(groups.values(), key=lambda kv: kv[0])


def _target_layout(fetch: FetchResult) -> tuple[np.ndarray, dict[int, int]]:
    target_ids = fetch.roles.targets.astype(np.int64)
    slot = {int(t): i for i, t in enumerate(target_ids)}
    return target_ids, slot


def _stack_features(
    features: np.ndarray,
    target_ids: np.ndarray,
    groups: list[tuple[tuple, list[int]]],
    aggregation: str,
) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    rows = [X[target_ids]]
    for _, members in groups:
        rows.append(_aggregate(X[members], aggregation)[None, :])
    return np.vstack(rows).astype(np.float32)


def _tt_edges(fetch: FetchResult, slot: dict[int, int]) -> np.ndarray:
    is_t = fetch.vanilla_is_target
    orig = fetch.vanilla_nodes
    ee = fetch.vanilla.edge_array()
    both = is_t[ee[:, 0]] & is_t[ee[:, 1]]
    tt = ee[both]
    out = np.empty_like(tt)
    for i, (a, b) in enumerate(tt.tolist()):
        u, v = slot[int(orig[a])], slot[int(orig[b])]
        out[i] = (u, v) if u < v else (v, u)
    return out


def condense_alpha(
    fetch: FetchResult,
    features: np.ndarray,
    aggregation: str = "mean",
    hop_cap: int | None = None,
    use_hash_keys: bool = False,
) -> SkeletonGraph:
    """Merge background nodes with identical structure sets.

    The skeleton edge set is the quotient of the vanilla edges under the
    grouping: units are targets (singletons) and supernodes, intra-group
    edges vanish, parallel edges collapse to one unit-weight edge. Quotient
    background-background edges are kept so multi-hop paths survive.
    """
    mss = compute_mss(fetch, hop_cap)
    groups = _group(mss, project=False, use_hash_keys=use_hash_keys)
    target_ids, slot = _target_layout(fetch)
    nt = target_ids.shape[0]

    unit_of = np.empty(fetch.vanilla.node_count, dtype=np.int64)
    for local, orig in enumerate(fetch.vanilla_nodes.tolist()):
        if fetch.roles.is_target[orig]:
            unit_of[local] = slot[orig]
    for gi, (_, members) in enumerate(groups):
        for m in members:
            unit_of[fetch.id_map[m]] = nt + gi

    ee = fetch.vanilla.edge_array()
    if ee.size:
        us = unit_of[ee[:, 0]]
        vs = unit_of[ee[:, 1]]
        lo, hi = np.minimum(us, vs), np.maximum(us, vs)
        keep = lo != hi
        edges = np.unique(np.column_stack([lo[keep], hi[keep]]), axis=0)
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    weights = np.ones(edges.shape[0], dtype=np.float64)

    supernodes = tuple(
        Supernode(
            members=tuple(members),
            targets=tuple(sorted({t for t, _ in key})),
            mss=key,
        )
        for key, members in groups
    )
    return SkeletonGraph(
        strategy="alpha",
        aggregation=aggregation,
        target_ids=target_ids,
        supernodes=supernodes,
        edges=edges,
        weights=weights,
        raw_weights=weights.copy(),
        features=_stack_features(features, target_ids, groups, aggregation),
    )


def condense_beta(
    fetch: FetchResult,
    features: np.ndarray,
    aggregation: str = "mean",
    hop_cap: int | None = None,
    use_hash_keys: bool = False,
) -> SkeletonGraph:
    """Merge by target set and encode distances as edge weights.

    Supernode k gets one edge per accessible target m with raw weight
    sum(1/d) over its members' shortest distances to m. Raw weights are
    then symmetrically normalized, w / sqrt(s_src * s_dst) with s the
    weighted degree over supernode-target edges, which bounds every entry
    in (0, 1]. Target-target edges carry over from the vanilla subgraph at
    weight 1; background-background edges are dropped.
    """
    mss = compute_mss(fetch, hop_cap)
    groups = _group(mss, project=True, use_hash_keys=use_hash_keys)
    target_ids, slot = _target_layout(fetch)
    nt = target_ids.shape[0]
    node_count = nt + len(groups)

    st_edges: list[tuple[int, int]] = []
    st_raw: list[float] = []
    for gi, (key, members) in enumerate(groups):
        dist_of = {m: dict(mss[m]) for m in members}
        for t in key:
            raw = sum(1.0 / dist_of[m][t] for m in members)
            st_edges.append((slot[t], nt + gi))
            st_raw.append(raw)

    strength = np.zeros(node_count, dtype=np.float64)
    for (u, v), w in zip(st_edges, st_raw):
        strength[u] += w
        strength[v] += w

    tt = _tt_edges(fetch, slot)
    all_edges = np.array(st_edges + tt.tolist(), dtype=np.int64).reshape(-1, 2)
    raw = np.concatenate([np.asarray(st_raw), np.ones(tt.shape[0])])
    norm = raw.copy()
    for i in range(len(st_edges)):
        u, v = all_edges[i]
        norm[i] = raw[i] / np.sqrt(strength[u] * strength[v])

    order = np.lexsort((all_edges[:, 1], all_edges[:, 0]))
    supernodes = tuple(
        Supernode(members=tuple(members), targets=key) for key, members in groups
    )
    return SkeletonGraph(
        strategy="beta",
        aggregation=aggregation,
        target_ids=target_ids,
        supernodes=supernodes,
        edges=all_edges[order],
        weights=norm[order],
        raw_weights=raw[order],
        features=_stack_features(features, target_ids, groups, aggregation),
    )


def condense_gamma(
    fetch: FetchResult,
    features: np.ndarray,
    aggregation: str = "mean",
    hop_cap: int | None = None,
    use_hash_keys: bool = False,
) -> SkeletonGraph:
    """Run beta, then fold pure-affiliation supernodes into their targets.

    A supernode is pure-affiliation when none of its members is a bridging
    node; such supernodes are removed with their edges, and each member's
    original feature joins the aggregate replacing its owner target's
    feature. Members owned by several targets contribute to every owner;
    the membership record keeps the smallest owner id. Bridging nodes are
    never folded, which keeps target connectivity intact.
    """
    skel = condense_beta(fetch, features, aggregation, hop_cap, use_hash_keys)
    nt = skel.target_count
    bridging = fetch.bridging

    pure = [
        i
        for i, sn in enumerate(skel.supernodes)
        if all(m not in bridging for m in sn.members)
    ]
    pure_set = set(pure)

    X = np.asarray(features, dtype=np.float64)
    fold_rows: dict[int, list[int]] = {}
    folded: dict[int, int] = {}
    for i in pure:
        for m in skel.supernodes[i].members:
            owner_targets = [t for t, _ in fetch.owners(m)]
            for t in owner_targets:
                fold_rows.setdefault(t, []).append(m)
            folded[m] = min(owner_targets)

    new_features = skel.features.astype(np.float64)
    target_ids = skel.target_ids
    for t, members in fold_rows.items():
        slot = int(np.searchsorted(target_ids, t))
        stacked = np.vstack([X[int(target_ids[slot])][None, :], X[members]])
        new_features[slot] = _aggregate(stacked, aggregation)

    keep = [i for i in range(len(skel.supernodes)) if i not in pure_set]
    remap = np.full(skel.node_count, -1, dtype=np.int64)
    remap[:nt] = np.arange(nt)
    for new_i, old_i in enumerate(keep):
        remap[nt + old_i] = nt + new_i

    mask = (remap[skel.edges[:, 0]] >= 0) & (remap[skel.edges[:, 1]] >= 0)
    edges = remap[skel.edges[mask]]
    kept_rows = np.concatenate([np.arange(nt), nt + np.asarray(keep, dtype=np.int64)])

    return SkeletonGraph(
        strategy="gamma",
        aggregation=aggregation,
        target_ids=target_ids,
        supernodes=tuple(skel.supernodes[i] for i in keep),
        edges=edges,
        weights=skel.weights[mask],
        raw_weights=skel.raw_weights[mask],
        features=new_features[kept_rows].astype(np.float32),
        folded=folded,
    )
