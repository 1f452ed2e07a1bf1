"""Desk-scale downstream check: linear propagation plus a logistic head.

The scorer propagates features L rounds through the symmetrically
normalized adjacency (with self-inclusion), then trains a multinomial
logistic head on the target rows by full-batch gradient descent. It is a
stand-in for heavier neighborhood-aggregation models and exercises exactly
the pathway a skeleton must preserve: what each target absorbs from its
surroundings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .condense import SkeletonGraph
from .errors import InputError
from .graph import Graph, RoleMask

__all__ = [
    "PropClassifierConfig",
    "propagate",
    "make_split",
    "softmax_loss_and_grad",
    "train_eval",
    "score_graph",
    "score_skeleton",
    "compare",
    "CompareResult",
    "random_background_subset",
]


@dataclass(frozen=True)
class PropClassifierConfig:
    hops: int = 2
    l2: float = 1e-4
    epochs: int = 300
    learning_rate: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hops < 0:
            raise InputError("hops must be non-negative")
        if self.l2 < 0:
            raise InputError("l2 must be non-negative")
        if self.epochs < 1 or self.learning_rate <= 0:
            raise InputError("epochs must be >= 1 and learning rate positive")

    def with_seed(self, seed: int) -> "PropClassifierConfig":
        return PropClassifierConfig(
            self.hops, self.l2, self.epochs, self.learning_rate, seed
        )


def _operator(graph) -> sp.csr_matrix:
    """Symmetrically normalized adjacency with self-inclusion.

    Skeleton inputs contribute their stored edge weights; plain graphs are
    unit-weighted.
    """
    if isinstance(graph, Graph):
        n = graph.node_count
        adj = sp.csr_matrix(
            (
                np.ones(graph.indices.shape[0]),
                graph.indices.copy(),
                graph.indptr.copy(),
            ),
            shape=(n, n),
        )
    elif isinstance(graph, SkeletonGraph):
        n = graph.node_count
        e, w = graph.edges, graph.weights
        adj = sp.coo_matrix(
            (
                np.concatenate([w, w]),
                (
                    np.concatenate([e[:, 0], e[:, 1]]),
                    np.concatenate([e[:, 1], e[:, 0]]),
                ),
            ),
            shape=(n, n),
        ).tocsr()
    else:
        raise InputError(f"cannot propagate over {type(graph).__name__}")
    a_hat = adj + sp.identity(n, format="csr")
    d = np.asarray(a_hat.sum(axis=1)).ravel()
    scale = 1.0 / np.sqrt(d)
    return sp.diags(scale) @ a_hat @ sp.diags(scale)


def propagate(graph, features: np.ndarray, hops: int) -> np.ndarray:
    """``hops`` rounds of normalized neighbor averaging with self-inclusion."""
    if hops < 0:
        raise InputError("hops must be non-negative")
    X = np.asarray(features, dtype=np.float64)
    if hops == 0:
        return X.copy()
    op = _operator(graph)
    for _ in range(hops):
        X = op @ X
    return X


def make_split(
    count: int, seed: int, train_frac: float = 0.6, val_frac: float = 0.2
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded train/val/test index split over ``count`` items."""
    if count < 3:
        raise InputError("need at least three labeled items to split")
    perm = np.random.default_rng(seed).permutation(count)
    n_train = int(train_frac * count)
    n_val = int(val_frac * count)
    return perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]


def softmax_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy of a linear softmax model plus an L2 ridge on W."""
    logits = X @ W + b
    logits -= logits.max(axis=1, keepdims=True)
    expo = np.exp(logits)
    probs = expo / expo.sum(axis=1, keepdims=True)
    n = X.shape[0]
    loss = -np.log(probs[np.arange(n), y] + 1e-300).mean() + 0.5 * l2 * (W**2).sum()
    grad_logits = probs
    grad_logits[np.arange(n), y] -= 1.0
    grad_logits /= n
    return loss, X.T @ grad_logits + l2 * W, grad_logits.sum(axis=0)


def train_eval(
    features: np.ndarray,
    labels: np.ndarray,
    split: tuple[np.ndarray, np.ndarray, np.ndarray] | None,
    cfg: PropClassifierConfig,
) -> float:
    """Fit the logistic head on the train split and return test accuracy.

    ``features`` and ``labels`` are row-aligned over the labeled items.
    Columns are standardized with train-split statistics. Every class must
    appear in the training split.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise InputError("features and labels must align")
    if (y < 0).any():
        raise InputError("labels must be non-negative class indices")
    if split is None:
        split = make_split(X.shape[0], cfg.seed)
    tr, _, te = split
    n_classes = int(y.max()) + 1
    present = np.unique(y[tr])
    if present.size != n_classes:
        missing = sorted(set(range(n_classes)) - set(present.tolist()))
        raise InputError(f"classes {missing} absent from the training split")

    mu = X[tr].mean(axis=0)
    sigma = X[tr].std(axis=0)
    sigma[sigma == 0.0] = 1.0
    Xtr = (X[tr] - mu) / sigma
    Xte = (X[te] - mu) / sigma
    ytr = y[tr]

    W = np.zeros((X.shape[1], n_classes))
    b = np.zeros(n_classes)
    for _ in range(cfg.epochs):
        _, gW, gb = softmax_loss_and_grad(W, b, Xtr, ytr, cfg.l2)
        W -= cfg.learning_rate * gW
        b -= cfg.learning_rate * gb
    pred = (Xte @ W + b).argmax(axis=1)
    return float((pred == y[te]).mean())


def _labeled_targets(roles: RoleMask, labels: np.ndarray) -> np.ndarray:
    if labels is None:
        raise InputError("evaluation needs labels")
    mask = roles.is_target & (labels >= 0)
    if not mask.any():
        raise InputError("no labeled targets")
    return np.flatnonzero(mask)


def score_graph(
    graph: Graph,
    features: np.ndarray,
    roles: RoleMask,
    labels: np.ndarray,
    cfg: PropClassifierConfig,
    seeds: list[int],
) -> np.ndarray:
    """Propagate over a plain graph and score each seed's split."""
    idx = _labeled_targets(roles, labels)
    Xp = propagate(graph, features, cfg.hops)[idx]
    y = labels[idx]
    return np.array(
        [train_eval(Xp, y, make_split(idx.size, s), cfg.with_seed(s)) for s in seeds]
    )


def score_skeleton(
    skeleton: SkeletonGraph,
    target_labels: np.ndarray,
    cfg: PropClassifierConfig,
    seeds: list[int],
) -> np.ndarray:
    """Propagate over a skeleton and score its labeled target rows.

    ``target_labels`` aligns with the skeleton's target order; entries < 0
    are unlabeled.
    """
    y_full = np.asarray(target_labels, dtype=np.int64)
    if y_full.shape[0] != skeleton.target_count:
        raise InputError("target labels must align with skeleton targets")
    idx = np.flatnonzero(y_full >= 0)
    if idx.size == 0:
        raise InputError("no labeled targets")
    Xp = propagate(skeleton, skeleton.features, cfg.hops)[: skeleton.target_count][idx]
    y = y_full[idx]
    return np.array(
        [train_eval(Xp, y, make_split(idx.size, s), cfg.with_seed(s)) for s in seeds]
    )


@dataclass(frozen=True)
class CompareResult:
    seeds: tuple[int, ...]
    original_scores: tuple[float, ...]
    skeleton_scores: tuple[float, ...]

    @property
    def original_mean(self) -> float:
        return float(np.mean(self.original_scores))

    @property
    def skeleton_mean(self) -> float:
        return float(np.mean(self.skeleton_scores))

    @property
    def delta_mean(self) -> float:
        return self.skeleton_mean - self.original_mean

    @property
    def delta_std(self) -> float:
        deltas = np.subtract(self.skeleton_scores, self.original_scores)
        return float(np.std(deltas))


def compare(original, skeleton_bundle, cfg: PropClassifierConfig, seeds: list[int]) -> CompareResult:
    """Score the original graph and a skeleton on identical target splits.

    The two target sets must match exactly (as external-id sets); both
    pipelines reuse the same seeded splits over the same labeled targets,
    so a skeleton that changes nothing scores a delta of exactly zero.
    """
    orig_targets = original.roles.targets
    orig_ext = [original.dense_to_id[int(t)] for t in orig_targets]
    skel_ext = skeleton_bundle.target_external_ids
    if set(orig_ext) != set(skel_ext):
        raise InputError("target sets differ between original and skeleton")

    labels = original.labels
    if labels is None:
        raise InputError("comparison needs labeled targets")

    # order the skeleton's target rows to match the original target order
    pos = {ext: i for i, ext in enumerate(skel_ext)}
    reorder = np.array([pos[e] for e in orig_ext], dtype=np.int64)

    idx = _labeled_targets(original.roles, labels)
    y = labels[idx]
    labeled_pos_in_targets = np.searchsorted(orig_targets, idx)

    Xp_orig = propagate(original.graph, original.features, cfg.hops)[idx]
    skel = skeleton_bundle.skeleton
    Xp_skel_targets = propagate(skel, skel.features, cfg.hops)[: skel.target_count]
    Xp_skel = Xp_skel_targets[reorder][labeled_pos_in_targets]

    orig_scores, skel_scores = [], []
    for s in seeds:
        split = make_split(idx.size, s)
        orig_scores.append(train_eval(Xp_orig, y, split, cfg.with_seed(s)))
        skel_scores.append(train_eval(Xp_skel, y, split, cfg.with_seed(s)))
    return CompareResult(
        seeds=tuple(seeds),
        original_scores=tuple(orig_scores),
        skeleton_scores=tuple(skel_scores),
    )


def random_background_subset(
    graph: Graph, roles: RoleMask, keep_count: int, seed: int
) -> np.ndarray:
    """All targets plus ``keep_count`` uniformly chosen background nodes.

    The coreset baseline: returns the kept node ids, sorted, for use with
    ``induced_subgraph``.
    """
    bg = roles.backgrounds
    if keep_count > bg.size:
        raise InputError("cannot keep more backgrounds than exist")
    rng = np.random.default_rng(seed)
    kept = rng.choice(bg, size=keep_count, replace=False) if keep_count else bg[:0]
    return np.union1d(roles.targets, kept)
