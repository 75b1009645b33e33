"""Precision / recall / F1 scoring of detected action pairs.

Ground truth for a video pair is the cross product, per shared label, of the
annotated units on each side: every same-label (unit in a, unit in b)
combination is one pair a perfect detector should recover.  A candidate is
correct when it overlaps some ground-truth pair with IoU >= the threshold on
both sides; each ground-truth pair can be claimed at most once, by the
highest-scoring eligible candidate.  Candidates whose only eligible pairs
were already claimed are duplicates and are excluded from the precision
denominator instead of counting as false positives.

All rates are percentages.  Aggregation across video pairs is a
micro-average: counts are summed, then the rates recomputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .matcher import ActionUnit, CandidatePair, candidate_sort_key, interval_iou
from .seqio import Annotation

# interval_iou is part of this module's public surface as well; it is defined
# next to NMS because both sides of the package need it.
__all__ = [
    "GtPair",
    "EvalReport",
    "interval_iou",
    "gt_pairs",
    "evaluate",
    "aggregate",
    "recall_by_label",
]


@dataclass(frozen=True)
class GtPair:
    """One ground-truth correspondence: same-label units in the two videos."""

    label: str
    unit_a: ActionUnit
    unit_b: ActionUnit


@dataclass(frozen=True)
class EvalReport:
    """Detection metrics for one video pair (or a micro-aggregate).

    n_scored is the precision denominator: candidates after duplicate
    removal.  precision = 100 * n_correct / n_scored, recall = 100 *
    n_correct / n_gt_pairs, f1 = 2PR/(P+R) (0 when P + R = 0).  A pair with
    no ground-truth pairs is flagged ``skipped``; its rates are NaN and it is
    ignored by ``aggregate``.
    """

    n_candidates: int
    n_scored: int
    n_gt_pairs: int
    n_correct: int
    precision: float
    recall: float
    f1: float
    skipped: bool = False


def gt_pairs(annots_a: list[Annotation], annots_b: list[Annotation]) -> list[GtPair]:
    """Cross product of same-label annotated units across the two videos.

    N_a units and N_b units of one label yield N_a * N_b pairs; labels
    present on only one side yield none.  Sorted by (label, a start, b
    start).
    """
    by_label_b: dict[str, list[Annotation]] = {}
    for b in annots_b:
        by_label_b.setdefault(b.label, []).append(b)
    out: list[GtPair] = []
    for a in annots_a:
        for b in by_label_b.get(a.label, ()):
            out.append(
                GtPair(
                    a.label,
                    ActionUnit(a.video_id, a.start_frame, a.end_frame),
                    ActionUnit(b.video_id, b.start_frame, b.end_frame),
                )
            )
    out.sort(key=lambda p: (p.label, p.unit_a.start_frame, p.unit_b.start_frame))
    return out


def _assign(
    candidates: list[CandidatePair],
    gt: list[GtPair],
    iou_thresh: float,
) -> tuple[list[tuple[int, int]], int]:
    """Greedy candidate-to-ground-truth assignment in score order.

    Returns (assignments as (candidate index, gt index) pairs, number of
    scored candidates).  A candidate eligible for several unclaimed pairs
    takes the one with the highest min-side IoU, ties to the earliest pair.
    A candidate eligible only for already-claimed pairs is a duplicate and
    is not scored.
    """
    order = sorted(range(len(candidates)),
                   key=lambda i: candidate_sort_key(candidates[i]))
    claimed = [False] * len(gt)
    assignments: list[tuple[int, int]] = []
    n_scored = 0
    for ci in order:
        c = candidates[ci]
        eligible: list[tuple[float, int]] = []
        for gi, g in enumerate(gt):
            iou_a = interval_iou(c.unit_a, g.unit_a)
            iou_b = interval_iou(c.unit_b, g.unit_b)
            if iou_a >= iou_thresh and iou_b >= iou_thresh:
                eligible.append((min(iou_a, iou_b), gi))
        if not eligible:
            n_scored += 1  # plain false positive
            continue
        open_pairs = [(q, gi) for q, gi in eligible if not claimed[gi]]
        if not open_pairs:
            continue  # duplicate of claimed pairs: excluded from scoring
        open_pairs.sort(
            key=lambda e: (
                -e[0],
                gt[e[1]].unit_a.start_frame,
                gt[e[1]].unit_b.start_frame,
                e[1],
            )
        )
        _, gi = open_pairs[0]
        claimed[gi] = True
        assignments.append((ci, gi))
        n_scored += 1
    return assignments, n_scored


def _rates(n_correct: int, n_scored: int, n_gt: int) -> tuple[float, float, float]:
    precision = 100.0 * n_correct / n_scored if n_scored else 0.0
    recall = 100.0 * n_correct / n_gt if n_gt else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(
    candidates: list[CandidatePair],
    gt: list[GtPair],
    iou_thresh: float = 0.5,
) -> EvalReport:
    """Score one video pair's candidates against its ground-truth pairs."""
    if not 0.0 < iou_thresh <= 1.0:
        raise ValueError(f"iou_thresh must be in (0, 1], got {iou_thresh}")
    if not gt:
        return EvalReport(
            n_candidates=len(candidates),
            n_scored=0,
            n_gt_pairs=0,
            n_correct=0,
            precision=math.nan,
            recall=math.nan,
            f1=math.nan,
            skipped=True,
        )
    assignments, n_scored = _assign(candidates, gt, iou_thresh)
    n_correct = len(assignments)
    precision, recall, f1 = _rates(n_correct, n_scored, len(gt))
    return EvalReport(
        n_candidates=len(candidates),
        n_scored=n_scored,
        n_gt_pairs=len(gt),
        n_correct=n_correct,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def aggregate(reports: list[EvalReport]) -> EvalReport:
    """Micro-average non-skipped reports: sum the counts, recompute rates."""
    live = [r for r in reports if not r.skipped]
    if not live:
        raise ValueError("nothing to aggregate: all reports are skipped")
    n_candidates = sum(r.n_candidates for r in live)
    n_scored = sum(r.n_scored for r in live)
    n_gt = sum(r.n_gt_pairs for r in live)
    n_correct = sum(r.n_correct for r in live)
    precision, recall, f1 = _rates(n_correct, n_scored, n_gt)
    return EvalReport(
        n_candidates=n_candidates,
        n_scored=n_scored,
        n_gt_pairs=n_gt,
        n_correct=n_correct,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def recall_by_label(
    candidates: list[CandidatePair],
    gt: list[GtPair],
    iou_thresh: float = 0.5,
) -> dict[str, tuple[int, int]]:
    """Per-label (recovered, total) ground-truth pair counts.

    Uses the same global greedy assignment as ``evaluate``, then buckets the
    claimed pairs by label.
    """
    assignments, _ = _assign(candidates, gt, iou_thresh)
    recovered = {gi for _, gi in assignments}
    out: dict[str, tuple[int, int]] = {}
    for gi, g in enumerate(gt):
        got, total = out.get(g.label, (0, 0))
        out[g.label] = (got + (1 if gi in recovered else 0), total + 1)
    return out
