"""Compression and structural statistics for skeleton graphs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .condense import SkeletonGraph
from .errors import InputError

__all__ = [
    "compute_bcr",
    "pattern_histogram",
    "storage_report",
    "CompressionReport",
]

FLOAT_BYTES = 4  # feature payloads are 32-bit floats on disk


def compute_bcr(skeleton_background: int, original_background: int) -> float:
    """Background compression rate: surviving background nodes over original.

    1.0 means no compression; values below 1 are smaller skeletons.
    """
    if original_background <= 0:
        raise InputError("original background count must be positive")
    if skeleton_background < 0:
        raise InputError("skeleton background count cannot be negative")
    return skeleton_background / original_background


def pattern_histogram(skeleton: SkeletonGraph) -> dict[tuple[int, ...], int]:
    """Count supernodes per structural pattern.

    A supernode's pattern is the sorted multiset of hop distances in its
    structure set, so it depends only on distances, not on which targets
    they lead to. Only alpha skeletons carry distances; anything else is
    rejected. Supernodes with an empty structure set (no reachable target
    within the hop cap) carry no pattern and are skipped.
    """
    if skeleton.strategy != "alpha":
        raise InputError(
            "structural patterns need per-supernode distances; "
            f"strategy {skeleton.strategy!r} drops them"
        )
    counts: Counter[tuple[int, ...]] = Counter()
    for sn in skeleton.supernodes:
        if sn.mss is None:
            raise InputError("alpha skeleton is missing structure sets")
        if sn.mss:
            counts[tuple(sorted(d for _, d in sn.mss))] += 1
    return dict(sorted(counts.items()))


@dataclass
class CompressionReport:
    """Byte-level and count-level compression summary.

    Feature byte counts are per-category row payloads (rows x dim x 4);
    adjacency bytes are the on-disk sizes of the edge files. The target
    feature payload must match between original and skeleton because the
    compression never drops a target.
    """

    original_background_count: int
    skeleton_background_count: int
    bcr: float
    original_target_feature_bytes: int
    skeleton_target_feature_bytes: int
    original_background_feature_bytes: int
    skeleton_background_feature_bytes: int
    original_adjacency_bytes: int
    skeleton_adjacency_bytes: int
    pattern_histogram: dict[tuple[int, ...], int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "original_background_count": self.original_background_count,
            "skeleton_background_count": self.skeleton_background_count,
            "bcr": self.bcr,
            "original_target_feature_bytes": self.original_target_feature_bytes,
            "skeleton_target_feature_bytes": self.skeleton_target_feature_bytes,
            "original_background_feature_bytes": self.original_background_feature_bytes,
            "skeleton_background_feature_bytes": self.skeleton_background_feature_bytes,
            "original_adjacency_bytes": self.original_adjacency_bytes,
            "skeleton_adjacency_bytes": self.skeleton_adjacency_bytes,
        }
        if self.pattern_histogram:
            d["pattern_histogram"] = {
                ",".join(map(str, k)): v for k, v in self.pattern_histogram.items()
            }
        return d


def storage_report(original, skeleton) -> CompressionReport:
    """Measure the on-disk footprint of a dataset/skeleton pair.

    Both bundles must have been persisted (their ``source_dir`` set by a
    load or save); byte sizes come from the actual files.
    """
    # local import: io depends on metrics consumers, not the other way round
    from . import io as _io

    if original.source_dir is None:
        raise InputError("original bundle is not on disk; save or load it first")
    if skeleton.source_dir is None:
        raise InputError("skeleton bundle is not on disk; save or load it first")

    dim = original.features.shape[1]
    nt = original.roles.target_count
    nb = original.roles.background_count
    ns = skeleton.skeleton.background_count

    orig_adj = (original.source_dir / _io.EDGES_FILE).stat().st_size
    skel_adj = (skeleton.source_dir / _io.SKELETON_EDGES_FILE).stat().st_size

    hist: dict[tuple[int, ...], int] = {}
    if skeleton.skeleton.strategy == "alpha":
        hist = pattern_histogram(skeleton.skeleton)

    return CompressionReport(
        original_background_count=nb,
        skeleton_background_count=ns,
        bcr=compute_bcr(ns, nb),
        original_target_feature_bytes=nt * dim * FLOAT_BYTES,
        skeleton_target_feature_bytes=skeleton.skeleton.target_count
        * dim
        * FLOAT_BYTES,
        original_background_feature_bytes=nb * dim * FLOAT_BYTES,
        skeleton_background_feature_bytes=ns * dim * FLOAT_BYTES,
        original_adjacency_bytes=orig_adj,
        skeleton_adjacency_bytes=skel_adj,
        pattern_histogram=hist,
    )
