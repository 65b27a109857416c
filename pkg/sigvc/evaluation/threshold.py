"""
Verification threshold sweep over same-speaker / different-speaker scores.

The EER is read off the ROC convex hull: pool-adjacent-violators over the
labels sorted by score gives the hull vertices, and the EER is where the
hull crosses FAR == FRR. This keeps the EER in [0, 0.5] for any scorer.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn.isotonic import IsotonicRegression
from sklearn.metrics import roc_curve

from sigvc.errors import EmptyInputError


@dataclass
class ThresholdReport:
    eer_threshold: float
    eer: float
    separation: float
    # Lowest (FAR + FRR) / 2 over the sweep
    min_hter: float
    far: float
    frr: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def roc_convex_hull(same: np.ndarray, diff: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Hull vertices as (far, frr, threshold), from accept-all to accept-none.

    Vertex k accepts every score >= threshold[k]; the last vertex has
    threshold +inf. Tied target and non-target scores are ordered
    targets first, the pessimistic choice.
    """
    scores = np.concatenate([same, diff])
    labels = np.concatenate([np.ones(same.size), np.zeros(diff.size)])
    order = np.argsort(scores, kind="mergesort")
    scores, labels = scores[order], labels[order]

    fitted = IsotonicRegression().fit_transform(np.arange(labels.size), labels)
    starts = np.concatenate([[0], np.flatnonzero(np.diff(fitted)) + 1])

    # Counts rejected below each block start
    rejected_same = np.concatenate([np.cumsum(labels)[starts - 1] * (starts > 0), [same.size]])
    rejected_diff = np.concatenate([np.cumsum(1.0 - labels)[starts - 1] * (starts > 0), [diff.size]])
    frr = rejected_same / same.size
    far = 1.0 - rejected_diff / diff.size
    thresholds = np.concatenate([scores[starts], [np.inf]])
    return far, frr, thresholds


def _hull_eer(far: np.ndarray, frr: np.ndarray) -> Tuple[float, int, int]:
    """EER and the hull vertices (lo, hi) bounding the crossing"""
    gap = far - frr  # decreasing from 1 to -1 along the hull
    j = int(np.flatnonzero(gap >= 0)[-1])
    if gap[j] == 0:
        return float(far[j]), j, j
    t = gap[j] / (gap[j] - gap[j + 1])
    return float(far[j] + t * (far[j + 1] - far[j])), j, j + 1


def threshold_analysis(same: Sequence[float], diff: Sequence[float]) -> ThresholdReport:
    """
    EER from the ROC convex hull, plus the operating threshold on the hull
    segment the EER lies on.

    Trials are accepted when score >= threshold. Among the observed scores
    between the two bounding hull vertices, the one whose FAR and FRR are
    closest is chosen (ties to the highest); the reported threshold is the
    midpoint between it and the next lower observed score.
    """
    same = np.asarray(same, dtype=np.float64)
    diff = np.asarray(diff, dtype=np.float64)
    if same.size == 0 or diff.size == 0:
        raise EmptyInputError("threshold_analysis needs non-empty same- and different-speaker score lists")

    hull_far, hull_frr, hull_thresholds = roc_convex_hull(same, diff)
    eer, lo, hi = _hull_eer(hull_far, hull_frr)

    labels = np.concatenate([np.ones(same.size), np.zeros(diff.size)])
    far, tpr, thresholds = roc_curve(labels, np.concatenate([same, diff]), pos_label=1, drop_intermediate=False)
    frr = 1.0 - tpr

    # Index 0 is roc_curve's accept-nothing sentinel, not an observed score
    far, frr, thresholds = far[1:], frr[1:], thresholds[1:]
    on_segment = (thresholds >= hull_thresholds[lo]) & (thresholds <= hull_thresholds[hi])
    candidates = np.flatnonzero(on_segment)
    i = int(candidates[np.argmin(np.abs(far[candidates] - frr[candidates]))])

    if i + 1 < thresholds.size:
        threshold = 0.5 * (thresholds[i] + thresholds[i + 1])
    else:
        threshold = thresholds[i]

    return ThresholdReport(
        eer_threshold=float(threshold),
        eer=eer,
        separation=float(same.mean() - diff.mean()),
        min_hter=float(np.min(0.5 * (far + frr))),
        far=float(far[i]),
        frr=float(frr[i]),
    )


def acceptance_rate(scores: Sequence[float], threshold: float) -> float:
    """Fraction of scores at or above threshold"""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyInputError("acceptance_rate needs at least one score")
    return float(np.mean(scores >= threshold))
