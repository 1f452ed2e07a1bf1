"""Immutable graph core: dense-id CSR adjacency plus target/background roles."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

__all__ = ["Graph", "RoleMask", "build_graph", "neighbors", "induced_subgraph"]


class Graph:
    """Undirected graph over dense node ids ``0..node_count-1``.

    Adjacency is compressed-sparse: ``indices[indptr[u]:indptr[u+1]]`` holds
    the ascending neighbor list of ``u``. There are no self-loops and no
    parallel edges, and the adjacency is symmetric (``v in N(u)`` iff
    ``u in N(v)``). Instances never mutate after construction and are safe
    to read from any number of threads.
    """

    __slots__ = ("node_count", "edge_count", "indptr", "indices", "dropped_edges")

    def __init__(
        self,
        node_count: int,
        indptr: np.ndarray,
        indices: np.ndarray,
        edge_count: int,
        dropped_edges: int = 0,
    ) -> None:
        self.node_count = int(node_count)
        self.edge_count = int(edge_count)
        self.indptr = indptr
        self.indices = indices
        # count of input edges discarded on build (self-loops, duplicates)
        self.dropped_edges = int(dropped_edges)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    def neighbors(self, u: int) -> np.ndarray:
        """Sorted neighbor ids of ``u`` (empty for isolated nodes)."""
        if not 0 <= u < self.node_count:
            raise InputError(
                f"node id {u} out of range for graph with {self.node_count} nodes"
            )
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def edge_array(self) -> np.ndarray:
        """All undirected edges as an ``(m, 2)`` array, src < dst, sorted."""
        srcs = np.repeat(
            np.arange(self.node_count, dtype=np.int64), np.diff(self.indptr)
        )
        keep = srcs < self.indices
        return np.column_stack([srcs[keep], self.indices[keep]])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self.edge_count == other.edge_count
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self) -> int:  # identity hashing; value equality via __eq__
        return id(self)

    def __repr__(self) -> str:
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"


class RoleMask:
    """Partition of the node set into targets and backgrounds.

    Every node is exactly one of the two; at least one target is required.
    """

    __slots__ = ("is_target",)

    def __init__(self, is_target: np.ndarray | Sequence[bool]) -> None:
        arr = np.ascontiguousarray(is_target, dtype=bool)
        if arr.ndim != 1:
            raise InputError("role mask must be one-dimensional")
        if not arr.any():
            raise InputError("role mask must contain at least one target node")
        self.is_target = arr
        self.is_target.setflags(write=False)

    @classmethod
    def from_targets(cls, target_ids: Iterable[int], node_count: int) -> "RoleMask":
        mask = np.zeros(node_count, dtype=bool)
        ids = np.asarray(list(target_ids), dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= node_count):
            raise InputError("target id out of range")
        mask[ids] = True
        return cls(mask)

    @property
    def node_count(self) -> int:
        return self.is_target.shape[0]

    @property
    def targets(self) -> np.ndarray:
        return np.flatnonzero(self.is_target)

    @property
    def backgrounds(self) -> np.ndarray:
        return np.flatnonzero(~self.is_target)

    @property
    def target_count(self) -> int:
        return int(self.is_target.sum())

    @property
    def background_count(self) -> int:
        return self.node_count - self.target_count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoleMask):
            return NotImplemented
        return np.array_equal(self.is_target, other.is_target)

    def __hash__(self) -> int:
        return id(self)


def build_graph(edge_pairs: Iterable[tuple[int, int]], node_count: int) -> Graph:
    """Build a symmetric, deduplicated, self-loop-free graph.

    The result is a pure function of the edge multiset: any input ordering
    of ``edge_pairs`` yields an identical graph. Self-loops and duplicate
    edges are silently dropped and tallied in ``Graph.dropped_edges``.
    """
    if node_count <= 0:
        raise InputError("node_count must be positive")
    pairs = np.asarray(
        edge_pairs if isinstance(edge_pairs, np.ndarray) else list(edge_pairs),
        dtype=np.int64,
    ).reshape(-1, 2)
    n_input = pairs.shape[0]
    if n_input:
        bad = (pairs < 0) | (pairs >= node_count)
        if bad.any():
            i = int(np.flatnonzero(bad.any(axis=1))[0])
            raise InputError(
                f"edge ({pairs[i, 0]}, {pairs[i, 1]}) has an endpoint outside "
                f"0..{node_count - 1}"
            )
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    not_loop = lo != hi
    codes = np.unique(lo[not_loop] * np.int64(node_count) + hi[not_loop])
    lo, hi = codes // node_count, codes % node_count
    dropped = n_input - codes.shape[0]

    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    indices = np.ascontiguousarray(dst[order])
    counts = np.bincount(src, minlength=node_count)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return Graph(node_count, indptr, indices, codes.shape[0], dropped)


def neighbors(g: Graph, u: int) -> np.ndarray:
    """Sorted neighbor list of ``u`` in ``g``."""
    return g.neighbors(u)


def induced_subgraph(g: Graph, keep: Iterable[int]) -> tuple[Graph, dict[int, int]]:
    """Subgraph over ``keep`` with exactly the edges internal to it.

    Returns the new graph and an old-to-new id map that preserves the
    relative order of the original ids (``sorted(keep)`` maps to
    ``0..len(keep)-1``).
    """
    keep_arr = np.unique(np.asarray(list(keep), dtype=np.int64))
    if keep_arr.size == 0:
        raise InputError("cannot induce a subgraph on an empty node set")
    if keep_arr[0] < 0 or keep_arr[-1] >= g.node_count:
        raise InputError("keep set contains node ids outside the graph")

    mask = np.zeros(g.node_count, dtype=bool)
    mask[keep_arr] = True
    new_of = np.full(g.node_count, -1, dtype=np.int64)
    new_of[keep_arr] = np.arange(keep_arr.size, dtype=np.int64)

    srcs_all = np.repeat(np.arange(g.node_count, dtype=np.int64), np.diff(g.indptr))
    sel = mask[srcs_all] & mask[g.indices]
    new_src = new_of[srcs_all[sel]]
    new_dst = np.ascontiguousarray(new_of[g.indices[sel]])
    counts = np.bincount(new_src, minlength=keep_arr.size)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    sub = Graph(keep_arr.size, indptr, new_dst, new_dst.size // 2)
    id_map = {int(old): int(new) for new, old in enumerate(keep_arr)}
    return sub, id_map
