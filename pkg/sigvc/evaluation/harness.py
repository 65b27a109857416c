"""
End-to-end objective evaluation.

Converts every corpus utterance toward a different speaker (round robin),
scores converted and natural speech with a speaker encoder, summarises the
three similarity conditions, sweeps the verification threshold and writes
report.json plus plots. An optional second speaker encoder repeats the
scoring for a cross-model check.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from sigvc.config import RunConfig
from sigvc.dsp.extraction import extract_features_for_manifest
from sigvc.dsp.features import MelSpectrogram
from sigvc.dsp.manifest import ManifestEntry, group_by_speaker, load_corpus, speaker_genders
from sigvc.encoders.base import SpeakerEmbedding, SpeakerEncoder
from sigvc.encoders.registry import load_evaluation_encoder, load_speaker_encoder
from sigvc.errors import EncoderUnavailableError, FeatureIOError
from sigvc.evaluation.plots import emit_comparison_plots, emit_plots, summaries_from_report
from sigvc.evaluation.similarity import (
    ConvertedItem,
    SimilarityCondition,
    SimilarityReport,
    build_three_condition_report,
)
from sigvc.evaluation.threshold import ThresholdReport, acceptance_rate, threshold_analysis
from sigvc.inference.converter import VoiceConverter

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REPORT_FILE = "report.json"


@dataclass(eq=False)
class ConvertedMel:
    source: ManifestEntry
    target_speaker: str
    mel: MelSpectrogram


@dataclass
class ScoringResult:
    report: SimilarityReport
    threshold: Optional[ThresholdReport] = None
    spoof_acceptance_rate: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            **self.report.to_dict(),
            'threshold': self.threshold.to_dict() if self.threshold else None,
            'spoof_acceptance_rate': self.spoof_acceptance_rate,
        }


@dataclass
class EvaluationOutcome:
    report_path: Path
    plot_paths: List[Path] = field(default_factory=list)
    report: Dict[str, object] = field(default_factory=dict)


def plan_conversions(
    entries: Sequence[ManifestEntry],
    max_converted: Optional[int] = None,
) -> List[Tuple[ManifestEntry, str]]:
    """Pair every utterance with a different speaker, cycling through the others"""
    groups = group_by_speaker(list(entries))
    speakers = list(groups)
    if len(speakers) < 2:
        logger.warning("Conversion needs at least two speakers; converted condition skipped")
        return []

    plan = []
    for s, speaker in enumerate(speakers):
        for k, entry in enumerate(groups[speaker]):
            offset = 1 + k % (len(speakers) - 1)
            plan.append((entry, speakers[(s + offset) % len(speakers)]))
    order = {id(e): i for i, e in enumerate(entries)}
    plan.sort(key=lambda pair: order[id(pair[0])])
    return plan[:max_converted] if max_converted is not None else plan


def generate_converted(
    converter: VoiceConverter,
    entries: Sequence[ManifestEntry],
    mels: Dict[str, MelSpectrogram],
    plan: Sequence[Tuple[ManifestEntry, str]],
) -> List[ConvertedMel]:
    """Run the conversions of a plan; targets use every utterance of the target speaker"""
    groups = group_by_speaker(list(entries))
    target_cache: Dict[str, SpeakerEmbedding] = {}
    converted = []
    for entry, target in plan:
        if target not in target_cache:
            target_cache[target] = converter.target_embedding([mels[e.utterance_id] for e in groups[target]])
        result = converter.convert_mel(mels[entry.utterance_id], target_cache[target])
        result.mel.utterance_id = f"{entry.utterance_id}_to_{target}"
        converted.append(ConvertedMel(entry, target, result.mel))
    logger.info("✓ Generated %d converted utterances", len(converted))
    return converted


def embed_enrollment(
    encoder: SpeakerEncoder,
    entries: Sequence[ManifestEntry],
    mels: Dict[str, MelSpectrogram],
) -> Dict[str, List[Tuple[str, SpeakerEmbedding]]]:
    enrollment: Dict[str, List[Tuple[str, SpeakerEmbedding]]] = {}
    for speaker, utts in group_by_speaker(list(entries)).items():
        enrollment[speaker] = [
            (e.utterance_id, encoder.extract_speaker_embedding(mels[e.utterance_id])) for e in utts
        ]
    return enrollment


def score_converted(
    encoder: SpeakerEncoder,
    converted: Sequence[ConvertedMel],
    genders: Dict[str, Optional[str]],
) -> List[ConvertedItem]:
    items = []
    for c in converted:
        try:
            embedding = encoder.extract_speaker_embedding(c.mel)
        except EncoderUnavailableError as e:
            logger.warning("Cannot score %s: %s", c.mel.utterance_id, e)
            continue
        src_gender, tgt_gender = genders.get(c.source.speaker_id), genders.get(c.target_speaker)
        pair = f"{src_gender}2{tgt_gender}" if src_gender and tgt_gender else None
        items.append(ConvertedItem(c.mel.utterance_id, embedding, c.target_speaker, c.source.speaker_id, pair))
    return items


def score_with_encoder(
    encoder: SpeakerEncoder,
    entries: Sequence[ManifestEntry],
    mels: Dict[str, MelSpectrogram],
    converted: Sequence[ConvertedMel],
    config: RunConfig,
) -> ScoringResult:
    """Three-condition report, threshold sweep and spoof acceptance for one scorer"""
    enrollment = embed_enrollment(encoder, entries, mels)
    items = score_converted(encoder, converted, speaker_genders(list(entries)))
    report: SimilarityReport = build_three_condition_report(items, enrollment, config.evaluation)

    same = report.scores(SimilarityCondition.SAME_SPEAKER_VS_OWN_AVG)
    diff = report.scores(SimilarityCondition.DIFF_SPEAKER_VS_OTHER_AVG)
    threshold: Optional[ThresholdReport] = None
    if same and diff:
        threshold = threshold_analysis(same, diff)
    else:
        report.warnings.append("Threshold analysis skipped: a reference condition is empty")

    spoof = None
    converted_scores = report.scores(SimilarityCondition.CONVERTED_VS_TARGET_AVG)
    if threshold is not None and converted_scores:
        spoof = acceptance_rate(converted_scores, threshold.eer_threshold)

    return ScoringResult(report, threshold, spoof)


def run_evaluation(
    config: RunConfig,
    corpus: PathLike,
    out_dir: PathLike,
    checkpoint: Optional[PathLike] = None,
    scoring_encoder: Optional[SpeakerEncoder] = None,
    compare_reports: Sequence[PathLike] = (),
    converter: Optional[VoiceConverter] = None,
) -> EvaluationOutcome:
    """
    Evaluate a checkpoint on a corpus (manifest JSON or speaker directories).

    Without a checkpoint only the two natural-speech conditions are scored.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = load_corpus(corpus)
    mels = extract_features_for_manifest(entries, config.dsp)

    if converter is None and checkpoint is not None:
        converter = VoiceConverter.from_checkpoint(checkpoint, config)
    converted: List[ConvertedMel] = []
    if converter is not None:
        plan = plan_conversions(entries, config.evaluation.max_converted)
        converted = generate_converted(converter, entries, mels, plan)

    if scoring_encoder is None:
        scoring_encoder = converter.encoders.speaker if converter else load_speaker_encoder(
            config.encoders.speaker, config.encoders
        )
    primary = score_with_encoder(scoring_encoder, entries, mels, converted, config)

    plot_paths = emit_plots(primary.report.summaries, out_dir)
    if primary.report.gender_breakdown:
        plot_paths += emit_plots(
            primary.report.gender_breakdown, out_dir,
            name="converted_by_gender_pair", title="Converted vs target average, by gender pair",
        )

    report: Dict[str, object] = {
        'config_hash': config.config_hash,
        'checkpoint': str(checkpoint) if checkpoint else None,
        'corpus': str(corpus),
        'counts': {
            'utterances': len(entries),
            'speakers': len(group_by_speaker(list(entries))),
            'converted': len(converted),
        },
        **primary.to_dict(),
    }

    if config.evaluation.cross_model:
        try:
            secondary_encoder = load_evaluation_encoder(config.encoders)
        except EncoderUnavailableError as e:
            logger.warning("Cross-model scoring skipped: %s", e)
            secondary_encoder = None
        if secondary_encoder is not None:
            secondary = score_with_encoder(secondary_encoder, entries, mels, converted, config)
            report['cross_model'] = secondary.to_dict()
            plot_paths += emit_plots(
                secondary.report.summaries, out_dir,
                name="similarity_conditions_cross_model", title="Cosine similarity (evaluation encoder)",
            )

    condition = SimilarityCondition.CONVERTED_VS_TARGET_AVG.value
    if compare_reports:
        systems = {}
        this = primary.report.summaries.get(condition)
        if this is not None:
            systems[out_dir.name or "this"] = this
        for path in compare_reports:
            other = _read_report(path)
            summary = summaries_from_report(other, condition)
            if summary is not None:
                systems[Path(path).parent.name or str(path)] = summary
        plot_paths += emit_comparison_plots(systems, out_dir, condition)

    report_path = out_dir / REPORT_FILE
    report_path.write_text(json.dumps(report, indent=2), encoding="utf-8")
    _log_summary(report)
    logger.info("✓ Evaluation report written to %s", report_path)
    return EvaluationOutcome(report_path, plot_paths, report)


def _read_report(path: PathLike) -> Dict[str, object]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise FeatureIOError(f"Cannot read evaluation report {path}: {e}") from e


def _log_summary(report: Dict[str, object]) -> None:
    for name, summary in report.get('summaries', {}).items():
        if summary['count']:
            logger.info("%s: n=%d mean=%.3f std=%.3f", name, summary['count'], summary['mean'], summary['std'])
    threshold = report.get('threshold')
    if threshold:
        logger.info(
            "EER %.3f at threshold %.3f (separation %.3f)",
            threshold['eer'], threshold['eer_threshold'], threshold['separation'],
        )
