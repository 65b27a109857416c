"""
Cosine-similarity scoring of speaker embeddings under three conditions:

    converted_vs_target_avg     converted utterance vs target speaker average
    same_speaker_vs_own_avg     utterance vs its own speaker's average (leave-one-out)
    diff_speaker_vs_other_avg   utterance vs every other speaker's average
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from sigvc.config import EvaluationConfig
from sigvc.encoders.base import SpeakerEmbedding, average_speaker_embedding
from sigvc.errors import DegenerateInputError, DimensionMismatchError

logger = logging.getLogger(__name__)

VectorLike = Union[SpeakerEmbedding, np.ndarray, Sequence[float]]


class SimilarityCondition(Enum):
    CONVERTED_VS_TARGET_AVG = "converted_vs_target_avg"
    SAME_SPEAKER_VS_OWN_AVG = "same_speaker_vs_own_avg"
    DIFF_SPEAKER_VS_OTHER_AVG = "diff_speaker_vs_other_avg"


def _vector(x: VectorLike) -> np.ndarray:
    values = x.values if isinstance(x, SpeakerEmbedding) else x
    return np.asarray(values, dtype=np.float64).reshape(-1)


def cosine_similarity(a: VectorLike, b: VectorLike) -> float:
    """dot(a, b) / (|a| |b|), clipped to [-1, 1]"""
    a, b = _vector(a), _vector(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Cannot compare embeddings of dimension {a.size} and {b.size}")
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise DegenerateInputError("Cosine similarity is undefined for a zero-norm embedding")
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


@dataclass
class SimilarityRecord:
    utterance_id: str
    condition: SimilarityCondition
    cosine: float
    speaker_id: Optional[str] = None
    reference_speaker: Optional[str] = None
    gender_pair: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data['condition'] = self.condition.value
        return {k: v for k, v in data.items() if v is not None}


@dataclass
class DistributionSummary:
    condition: str
    count: int
    mean: Optional[float]
    std: Optional[float]
    histogram: Dict[str, List[float]]
    quantiles: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_scores(
        cls,
        condition: str,
        scores: Sequence[float],
        config: Optional[EvaluationConfig] = None,
    ) -> "DistributionSummary":
        config = config or EvaluationConfig()
        low, high = config.histogram_range
        scores = np.asarray(scores, dtype=np.float64)
        # Out-of-range scores land in the edge bins so counts always sum to count
        counts, edges = np.histogram(np.clip(scores, low, high), bins=config.histogram_bins, range=(low, high))
        if scores.size == 0:
            return cls(condition, 0, None, None, {'edges': edges.tolist(), 'counts': counts.tolist()})
        quantiles = np.percentile(scores, config.quantiles)
        return cls(
            condition=condition,
            count=int(scores.size),
            mean=float(scores.mean()),
            std=float(scores.std()),
            histogram={'edges': edges.tolist(), 'counts': counts.tolist()},
            quantiles={f"{q:g}": float(v) for q, v in zip(config.quantiles, quantiles)},
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "DistributionSummary":
        return cls(**data)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(eq=False)
class ConvertedItem:
    """A converted utterance's embedding and the speaker it was converted to"""

    utterance_id: str
    embedding: SpeakerEmbedding
    target_speaker: str
    source_speaker: Optional[str] = None
    gender_pair: Optional[str] = None


Enrollment = Mapping[str, Sequence[Tuple[str, SpeakerEmbedding]]]


@dataclass
class SimilarityReport:
    records: List[SimilarityRecord]
    summaries: Dict[str, DistributionSummary]
    warnings: List[str] = field(default_factory=list)
    gender_breakdown: Dict[str, DistributionSummary] = field(default_factory=dict)

    def scores(self, condition: SimilarityCondition) -> List[float]:
        return [r.cosine for r in self.records if r.condition is condition]

    def to_dict(self) -> Dict[str, object]:
        return {
            'records': [r.to_dict() for r in self.records],
            'summaries': {k: v.to_dict() for k, v in self.summaries.items()},
            'gender_breakdown': {k: v.to_dict() for k, v in self.gender_breakdown.items()},
            'warnings': list(self.warnings),
        }


def leave_one_out_average(embeddings: Sequence[SpeakerEmbedding], index: int) -> SpeakerEmbedding:
    """Average of every embedding except embeddings[index]"""
    others = [e for i, e in enumerate(embeddings) if i != index]
    return average_speaker_embedding(others)


def build_three_condition_report(
    converted: Sequence[ConvertedItem],
    enrollment: Enrollment,
    config: Optional[EvaluationConfig] = None,
) -> SimilarityReport:
    """
    Score converted items against target averages and the enrollment set
    against itself. Speakers with fewer than two utterances are left out of
    the same-speaker condition.
    """
    config = config or EvaluationConfig()
    records: List[SimilarityRecord] = []
    warnings: List[str] = []

    averages = {
        spk: average_speaker_embedding([e for _, e in utts])
        for spk, utts in enrollment.items() if utts
    }

    for spk, utts in enrollment.items():
        if len(utts) < 2:
            message = f"Speaker {spk} has {len(utts)} enrollment utterance(s); skipped for same-speaker scoring"
            logger.warning(message)
            warnings.append(message)
            continue
        embeddings = [e for _, e in utts]
        for i, (utt_id, emb) in enumerate(utts):
            records.append(SimilarityRecord(
                utt_id, SimilarityCondition.SAME_SPEAKER_VS_OWN_AVG,
                cosine_similarity(emb, leave_one_out_average(embeddings, i)),
                speaker_id=spk, reference_speaker=spk,
            ))

    for spk, utts in enrollment.items():
        for utt_id, emb in utts:
            for other, avg in averages.items():
                if other == spk:
                    continue
                records.append(SimilarityRecord(
                    utt_id, SimilarityCondition.DIFF_SPEAKER_VS_OTHER_AVG,
                    cosine_similarity(emb, avg),
                    speaker_id=spk, reference_speaker=other,
                ))

    for item in converted:
        if item.target_speaker not in averages:
            message = f"Converted item {item.utterance_id} targets unknown speaker {item.target_speaker}; skipped"
            logger.warning(message)
            warnings.append(message)
            continue
        records.append(SimilarityRecord(
            item.utterance_id, SimilarityCondition.CONVERTED_VS_TARGET_AVG,
            cosine_similarity(item.embedding, averages[item.target_speaker]),
            speaker_id=item.source_speaker, reference_speaker=item.target_speaker,
            gender_pair=item.gender_pair,
        ))

    conditions = [SimilarityCondition.SAME_SPEAKER_VS_OWN_AVG, SimilarityCondition.DIFF_SPEAKER_VS_OTHER_AVG]
    if converted:
        conditions.insert(0, SimilarityCondition.CONVERTED_VS_TARGET_AVG)
    summaries = {
        c.value: DistributionSummary.from_scores(c.value, [r.cosine for r in records if r.condition is c], config)
        for c in conditions
    }

    by_pair: Dict[str, List[float]] = {}
    for r in records:
        if r.condition is SimilarityCondition.CONVERTED_VS_TARGET_AVG and r.gender_pair:
            by_pair.setdefault(r.gender_pair, []).append(r.cosine)
    breakdown = {pair: DistributionSummary.from_scores(pair, scores, config) for pair, scores in sorted(by_pair.items())}

    return SimilarityReport(records, summaries, warnings, breakdown)
