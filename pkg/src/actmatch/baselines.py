"""Two reference baselines the consistency matcher is compared against.

Clustering baseline: every window of the video (stride 1) is pooled with the
closed-form encoder directly on the raw frames, L2-normalized, and augmented
with a scaled copy of its start time; k-means over these points groups
windows into tentative actions.  Contiguous runs of window starts within one
cluster become action units (short runs are pruned), each unit is re-encoded
with the exact pipeline, and cross-video unit pairs above a cosine
similarity threshold are reported.

Plain matching baseline: both videos are encoded at stride 1 and every
single gram cell above the cosine threshold is reported on its own, with no
temporal-consistency requirement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError
from .matcher import ActionUnit, CandidatePair, candidate_sort_key, gram_matrix
from .preprocess import SmoothingConfig, smooth_sequence
from .rankpool import (
    ZERO_NORM,
    RankPoolConfig,
    SegmentationConfig,
    encode_segments,
    rank_pool_exact,
)


@dataclass(frozen=True)
class ClusterConfig:
    """Controls for the clustering baseline.

    time_weight scales the appended window-start coordinate, nudging k-means
    toward temporally coherent clusters.  Runs must span strictly more than
    min_cluster_frames frames to survive pruning.  seed fixes the k-means
    initialization.
    """

    n_clusters: int = 10
    time_weight: float = 0.001
    min_cluster_frames: int = 60
    window: int = 61
    cosine_thresh: float = 0.2
    top_k: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ConfigError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.time_weight < 0:
            raise ConfigError(f"time_weight must be >= 0, got {self.time_weight}")
        if self.min_cluster_frames < 0:
            raise ConfigError(
                f"min_cluster_frames must be >= 0, got {self.min_cluster_frames}"
            )
        if self.window < 2:
            raise ConfigError(f"window must be >= 2, got {self.window}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")


def _kmeans(points: np.ndarray, k: int, seed: int,
            max_iters: int = 100, tol: float = 1e-4) -> np.ndarray:
    """Deterministic Lloyd's k-means with k-means++ seeding.

    Single-threaded on purpose; given equal inputs and seed the labels are
    bit-identical run to run.  Stops when assignments are stable or the
    relative inertia improvement falls below ``tol``.
    """
    n = points.shape[0]
    k = min(k, n)
    rng = np.random.default_rng(seed)

    centers = np.empty((k, points.shape[1]))
    centers[0] = points[int(rng.integers(n))]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[c] = points[idx]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))

    labels = np.zeros(n, dtype=np.int64)
    prev_inertia = np.inf
    for _ in range(max_iters):
        dists = (
            (points**2).sum(axis=1)[:, None]
            - 2.0 * points @ centers.T
            + (centers**2).sum(axis=1)[None, :]
        )
        new_labels = dists.argmin(axis=1)
        inertia = float(dists[np.arange(n), new_labels].sum())
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster at the worst-covered point.
                worst = int(dists[np.arange(n), labels].argmax())
                centers[c] = points[worst]
        if not changed or prev_inertia - inertia <= tol * abs(prev_inertia):
            break
        prev_inertia = inertia
    return labels


def _window_encodings(data: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form pooling of every stride-1 window of the raw frames.

    Returns (starts, normalized encodings); rows for motionless windows are
    zero.
    """
    n = data.shape[0]
    if n < window:
        return np.array([], dtype=np.int64), np.empty((0, data.shape[1]))
    coeffs = 2.0 * np.arange(1, window + 1) - (window + 1)
    windows = sliding_window_view(data, window, axis=0)  # (num, d, window)
    pooled = np.einsum("ndw,w->nd", windows, coeffs)
    norms = np.linalg.norm(pooled, axis=1, keepdims=True)
    safe = np.where(norms <= ZERO_NORM, 1.0, norms)
    pooled = np.where(norms <= ZERO_NORM, 0.0, pooled / safe)
    starts = np.arange(1, n - window + 2, dtype=np.int64)
    return starts, pooled


def cluster_segments(x, cfg: ClusterConfig | None = None) -> list[ActionUnit]:
    """Segment one video into tentative action units by clustering windows.

    Windows sharing a cluster and forming a consecutive run of start frames
    merge into one unit spanning the run's first window start through its
    last window end; units spanning <= min_cluster_frames frames are pruned.
    Deterministic given cfg.seed.
    """
    cfg = cfg or ClusterConfig()
    data = np.asarray(x.data if hasattr(x, "data") and hasattr(x, "n_frames") else x,
                      dtype=np.float64)
    video_id = getattr(x, "video_id", "video")
    starts, pooled = _window_encodings(data, cfg.window)
    if starts.size == 0:
        return []
    augmented = np.hstack([pooled, cfg.time_weight * starts[:, None].astype(float)])
    labels = _kmeans(augmented, cfg.n_clusters, cfg.seed)

    units: list[ActionUnit] = []
    for c in np.unique(labels):
        member_starts = starts[labels == c]  # already ascending
        run_begin = 0
        breaks = np.flatnonzero(np.diff(member_starts) != 1)
        for run_end in list(breaks) + [len(member_starts) - 1]:
            first = int(member_starts[run_begin])
            last = int(member_starts[run_end]) + cfg.window - 1
            if last - first + 1 > cfg.min_cluster_frames:
                units.append(ActionUnit(video_id, first, last))
            run_begin = run_end + 1
    units.sort(key=lambda u: (u.start_frame, u.end_frame))
    return units


def _encode_unit(
    data: np.ndarray,
    unit: ActionUnit,
    smooth: SmoothingConfig,
    rp: RankPoolConfig,
) -> np.ndarray:
    """Exact-pipeline encoding of one unit's frames (smoothed, normalized)."""
    frames = data[unit.start_frame - 1 : unit.end_frame]
    V = smooth_sequence(frames, smooth)
    if np.abs(V - V[0]).max() <= 1e-9:
        return np.zeros(V.shape[1])
    w = rank_pool_exact(V, rp.C, rp.epsilon, rp.solver_tol, rp.max_iters)
    norm = np.linalg.norm(w)
    return w / norm if norm > ZERO_NORM else np.zeros(V.shape[1])


def cluster_match(
    xa,
    xb,
    cfg: ClusterConfig | None = None,
    smooth: SmoothingConfig | None = None,
    rp: RankPoolConfig | None = None,
) -> list[CandidatePair]:
    """Match the clustered units of two videos by encoding similarity.

    Every cross-video unit pair whose exact-pipeline encodings have cosine
    similarity strictly above cfg.cosine_thresh becomes a candidate scored
    by that similarity; the list is sorted by descending score and truncated
    to cfg.top_k.
    """
    cfg = cfg or ClusterConfig()
    smooth = smooth or SmoothingConfig()
    rp = rp or RankPoolConfig()
    units_a = cluster_segments(xa, cfg)
    units_b = cluster_segments(xb, cfg)
    data_a = np.asarray(xa.data if hasattr(xa, "data") else xa, dtype=np.float64)
    data_b = np.asarray(xb.data if hasattr(xb, "data") else xb, dtype=np.float64)
    enc_a = [_encode_unit(data_a, u, smooth, rp) for u in units_a]
    enc_b = [_encode_unit(data_b, u, smooth, rp) for u in units_b]
    out: list[CandidatePair] = []
    for ua, wa in zip(units_a, enc_a):
        for ub, wb in zip(units_b, enc_b):
            sim = float(wa @ wb)
            if sim > cfg.cosine_thresh:
                out.append(CandidatePair(ua, ub, sim, run_length=1))
    out.sort(key=candidate_sort_key)
    return out[: cfg.top_k]


def plain_match(
    xa,
    xb,
    seg: SegmentationConfig | None = None,
    smooth: SmoothingConfig | None = None,
    rp: RankPoolConfig | None = None,
    cosine_thresh: float = 0.2,
    top_k: int = 100,
) -> list[CandidatePair]:
    """Report every supra-threshold gram cell as its own candidate.

    Both videos are encoded at stride 1 (the configured stride is ignored;
    this baseline considers every window position).  There is no
    temporal-consistency requirement and no NMS: each cell of the gram
    matrix above cosine_thresh yields a run-length-1 candidate scored by the
    similarity.  Sorted by descending score, truncated to top_k.
    """
    seg = seg or SegmentationConfig()
    seg1 = SegmentationConfig(window=seg.window, stride=1)
    enc_a = encode_segments(xa, seg1, smooth, rp)
    enc_b = encode_segments(xb, seg1, smooth, rp)
    gram = gram_matrix(
        enc_a,
        enc_b,
        getattr(xa, "video_id", "a"),
        getattr(xb, "video_id", "b"),
    )
    rows, cols = np.nonzero(gram.values > cosine_thresh)
    out: list[CandidatePair] = []
    for i, j in zip(rows.tolist(), cols.tolist()):
        sa = gram.segments_a[i]
        sb = gram.segments_b[j]
        out.append(
            CandidatePair(
                unit_a=ActionUnit(gram.video_a, sa.start_frame, sa.end_frame),
                unit_b=ActionUnit(gram.video_b, sb.start_frame, sb.end_frame),
                score=float(gram.values[i, j]),
                run_length=1,
                a_index=int(i),
                b_index=int(j),
            )
        )
    out.sort(key=candidate_sort_key)
    return out[:top_k]
