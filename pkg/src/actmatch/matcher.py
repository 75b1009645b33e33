"""Cross-video matching of encoded segments via temporally consistent runs.

The similarity of every segment of video a to every segment of video b forms
a gram matrix G (encodings are unit vectors, so entries are cosine
similarities in [-1, 1] up to rounding).  A data-adaptive threshold keeps
only confident similarities, and a diagonal-run scan keeps only those cells
that sit inside a run of at least ``min_run`` consecutive supra-threshold
cells along a diagonal, i.e. matches that persist while both videos advance
in lockstep.  Maximal surviving runs become candidate matched action pairs,
scored by the similarity mass along the run, then pruned by a two-sided
non-maximum suppression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .preprocess import SmoothingConfig
from .rankpool import (
    RankPoolConfig,
    SegmentEncoding,
    SegmentationConfig,
    encode_segments,
)


@dataclass(frozen=True)
class ActionUnit:
    """An inclusive frame interval within one video."""

    video_id: str
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame < 1 or self.start_frame > self.end_frame:
            raise ValueError(
                f"bad frame span [{self.start_frame}, {self.end_frame}]"
            )

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass
class CandidatePair:
    """A detected pair of matching action units, one per video.

    ``run_length`` counts matched segments (1 for the single-segment
    baselines).  ``a_index``/``b_index`` record the run's first cell in the
    gram matrix when one exists; they are -1 for candidates built without a
    gram matrix.
    """

    unit_a: ActionUnit
    unit_b: ActionUnit
    score: float
    run_length: int
    a_index: int = field(default=-1, compare=False)
    b_index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class MatchConfig:
    """Matching controls.

    min_run is the number of consecutive in-lockstep matching segments a
    candidate must span (at least 2; a single matching segment is no
    evidence of shared temporal structure).  threshold_override replaces the
    adaptive similarity threshold when set.
    """

    min_run: int = 10
    top_k: int = 100
    nms_iou: float = 0.5
    threshold_override: float | None = None

    def __post_init__(self):
        if self.min_run < 2:
            raise ConfigError(f"min_run must be >= 2, got {self.min_run}")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if not 0.0 < self.nms_iou <= 1.0:
            raise ConfigError(f"nms_iou must be in (0, 1], got {self.nms_iou}")


@dataclass
class GramMatrix:
    """Pairwise segment similarities plus the segment lists that formed them."""

    values: np.ndarray
    segments_a: list[SegmentEncoding]
    segments_b: list[SegmentEncoding]
    video_a: str = "a"
    video_b: str = "b"


def interval_iou(a: ActionUnit, b: ActionUnit) -> float:
    """Intersection over union of two inclusive frame intervals.

    Identical intervals give 1.0; disjoint ones 0.0.  Symmetric.
    """
    inter_start = max(a.start_frame, b.start_frame)
    inter_end = min(a.end_frame, b.end_frame)
    inter = max(0, inter_end - inter_start + 1)
    union = a.n_frames + b.n_frames - inter
    return inter / union


def gram_matrix(
    enc_a: list[SegmentEncoding],
    enc_b: list[SegmentEncoding],
    video_a: str = "a",
    video_b: str = "b",
) -> GramMatrix:
    """Dot products of every encoding of a against every encoding of b."""
    if not enc_a or not enc_b:
        raise ValueError("both encoding lists must be non-empty")
    Wa = np.vstack([e.w for e in enc_a])
    Wb = np.vstack([e.w for e in enc_b])
    if Wa.shape[1] != Wb.shape[1]:
        raise ValueError(
            f"encoding dimensions differ: {Wa.shape[1]} vs {Wb.shape[1]}"
        )
    return GramMatrix(Wa @ Wb.T, list(enc_a), list(enc_b), video_a, video_b)


def fuse_grams(grams: list[GramMatrix]) -> GramMatrix:
    """Elementwise average of gram matrices from several feature streams.

    All streams must segment their videos identically (same matrix shape and
    frame spans); the fused matrix keeps the first stream's segment lists.
    """
    if not grams:
        raise ValueError("need at least one gram matrix")
    first = grams[0]
    for g in grams[1:]:
        if g.values.shape != first.values.shape:
            raise ValueError(
                f"gram shapes differ: {g.values.shape} vs {first.values.shape}"
            )
        for ours, theirs in ((first.segments_a, g.segments_a),
                             (first.segments_b, g.segments_b)):
            spans_ok = all(
                x.start_frame == y.start_frame and x.end_frame == y.end_frame
                for x, y in zip(ours, theirs)
            )
            if not spans_ok:
                raise ValueError("feature streams segment the videos differently")
    values = np.mean([g.values for g in grams], axis=0)
    return GramMatrix(values, first.segments_a, first.segments_b,
                      first.video_a, first.video_b)


def adaptive_threshold(G: np.ndarray) -> float | None:
    """Mean plus population standard deviation of all gram entries.

    Returns None when that value is not positive; matching is then
    meaningless (similarities this weak carry no signal) and callers treat
    the pair as having no matches.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.size == 0:
        raise ValueError("empty gram matrix")
    t = float(G.mean() + G.std())
    return t if t > 0.0 else None


def consistency_scan(G: np.ndarray, T: float, min_run: int) -> np.ndarray:
    """Keep gram cells that extend diagonally for at least ``min_run`` steps.

    Returns a matrix J of the same shape with J[i, j] = G[i, j] wherever some
    diagonal window of min_run consecutive cells containing (i, j) is
    entirely above T, and 0 elsewhere.  Equivalently: a cell survives iff it
    lies inside a maximal diagonal run of strictly supra-threshold cells of
    length >= min_run.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2:
        raise ValueError(f"G must be 2-D, got shape {G.shape}")
    if T <= 0.0:
        raise ValueError(f"threshold must be positive, got {T}")
    if min_run < 1:
        raise ValueError(f"min_run must be >= 1, got {min_run}")
    A, B = G.shape
    out = np.zeros_like(G)
    if A < min_run or B < min_run:
        return out
    M = G > T
    for offset in range(-(A - 1), B):
        diag = np.diagonal(M, offset=offset)
        n = diag.size
        if n < min_run:
            continue
        window_ok = (
            np.convolve(diag.astype(np.int64), np.ones(min_run, dtype=np.int64),
                        mode="valid")
            == min_run
        )
        starts = np.flatnonzero(window_ok)
        if starts.size == 0:
            continue
        # Difference-array cover: cell k is kept if any full window starts in
        # (k - min_run, k].
        cover = np.zeros(n + 1, dtype=np.int64)
        np.add.at(cover, starts, 1)
        np.add.at(cover, starts + min_run, -1)
        keep = np.cumsum(cover[:-1]) > 0
        if offset >= 0:
            rows = np.arange(n)[keep]
            cols = rows + offset
        else:
            cols = np.arange(n)[keep]
            rows = cols - offset
        out[rows, cols] = G[rows, cols]
    return out


def candidate_sort_key(c: CandidatePair):
    """Deterministic ordering: score descending, then earliest spans."""
    return (-c.score, c.unit_a.start_frame, c.unit_b.start_frame)


def extract_runs(J: np.ndarray, gram: GramMatrix, min_run: int) -> list[CandidatePair]:
    """Turn maximal diagonal runs of surviving cells into candidate pairs.

    A run of cells (i, j) .. (i+r-1, j+r-1) with r >= min_run covers frames
    from the first segment's start to the last segment's end on each side.
    The score is the sum of gram values along the run, so it always exceeds
    min_run times the threshold that produced J.
    """
    J = np.asarray(J, dtype=np.float64)
    A, B = J.shape
    if A != len(gram.segments_a) or B != len(gram.segments_b):
        raise ValueError("J shape does not match the gram matrix's segments")
    nz = J != 0.0
    out: list[CandidatePair] = []
    for offset in range(-(A - 1), B):
        diag = np.diagonal(nz, offset=offset)
        n = diag.size
        if n < min_run:
            continue
        padded = np.concatenate(([False], diag, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        for run_start, run_end in zip(edges[::2], edges[1::2]):
            r = run_end - run_start
            if r < min_run:
                continue
            if offset >= 0:
                i0, j0 = run_start, run_start + offset
            else:
                i0, j0 = run_start - offset, run_start
            seg_a0 = gram.segments_a[i0]
            seg_a1 = gram.segments_a[i0 + r - 1]
            seg_b0 = gram.segments_b[j0]
            seg_b1 = gram.segments_b[j0 + r - 1]
            score = float(
                gram.values[np.arange(i0, i0 + r), np.arange(j0, j0 + r)].sum()
            )
            out.append(
                CandidatePair(
                    unit_a=ActionUnit(gram.video_a, seg_a0.start_frame,
                                      seg_a1.end_frame),
                    unit_b=ActionUnit(gram.video_b, seg_b0.start_frame,
                                      seg_b1.end_frame),
                    score=score,
                    run_length=int(r),
                    a_index=int(i0),
                    b_index=int(j0),
                )
            )
    out.sort(key=candidate_sort_key)
    return out


def score_candidate(c: CandidatePair, gram: GramMatrix) -> float:
    """Recompute a candidate's score: similarity summed along its run."""
    if c.a_index < 0 or c.b_index < 0:
        raise ValueError("candidate does not carry gram run indices")
    A, B = gram.values.shape
    if c.a_index + c.run_length > A or c.b_index + c.run_length > B:
        raise ValueError("candidate run falls outside the gram matrix")
    rows = np.arange(c.a_index, c.a_index + c.run_length)
    cols = np.arange(c.b_index, c.b_index + c.run_length)
    return float(gram.values[rows, cols].sum())


def nms(candidates: list[CandidatePair], iou_thresh: float = 0.5) -> list[CandidatePair]:
    """Greedy two-sided non-maximum suppression.

    Candidates are visited best-first (ties broken by earliest spans); one is
    dropped only when some already-kept candidate overlaps it with IoU above
    the threshold on side a AND side b.  Overlap on a single side never
    suppresses.
    """
    if not 0.0 < iou_thresh <= 1.0:
        raise ConfigError(f"iou_thresh must be in (0, 1], got {iou_thresh}")
    kept: list[CandidatePair] = []
    for c in sorted(candidates, key=candidate_sort_key):
        redundant = any(
            interval_iou(c.unit_a, k.unit_a) > iou_thresh
            and interval_iou(c.unit_b, k.unit_b) > iou_thresh
            for k in kept
        )
        if not redundant:
            kept.append(c)
    return kept


def match_from_gram(gram: GramMatrix, match: MatchConfig | None = None) -> list[CandidatePair]:
    """Run thresholding, the consistency scan, scoring, and NMS on a gram."""
    match = match or MatchConfig()
    if match.threshold_override is not None:
        T = match.threshold_override if match.threshold_override > 0.0 else None
    else:
        T = adaptive_threshold(gram.values)
    if T is None:
        return []
    J = consistency_scan(gram.values, T, match.min_run)
    candidates = extract_runs(J, gram, match.min_run)
    candidates = nms(candidates, match.nms_iou)
    candidates.sort(key=candidate_sort_key)
    return candidates[: match.top_k]


def match_pair(
    xa,
    xb,
    seg: SegmentationConfig | None = None,
    smooth: SmoothingConfig | None = None,
    rp: RankPoolConfig | None = None,
    match: MatchConfig | None = None,
) -> list[CandidatePair]:
    """Detect matching action segments between two videos.

    Encodes both videos with the shared segmentation/smoothing/pooling
    configuration, builds the gram matrix, and extracts temporally
    consistent, non-redundant candidate pairs sorted by descending score.
    Swapping the two videos swaps unit_a/unit_b but preserves the matches
    and their scores.
    """
    enc_a = encode_segments(xa, seg, smooth, rp)
    enc_b = encode_segments(xb, seg, smooth, rp)
    gram = gram_matrix(
        enc_a,
        enc_b,
        getattr(xa, "video_id", "a"),
        getattr(xb, "video_id", "b"),
    )
    return match_from_gram(gram, match)
