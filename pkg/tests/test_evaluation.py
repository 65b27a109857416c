"""Similarity scoring, threshold sweep, plots and the evaluation harness"""

import json

import numpy as np
import pytest

from conftest import trained_config
from sigvc.dsp.manifest import ManifestEntry
from sigvc.encoders.base import SpeakerEmbedding
from sigvc.errors import DegenerateInputError, DimensionMismatchError, EmptyInputError
from sigvc.evaluation import (
    ConvertedItem,
    DistributionSummary,
    SimilarityCondition,
    acceptance_rate,
    build_three_condition_report,
    cosine_similarity,
    emit_comparison_plots,
    emit_plots,
    leave_one_out_average,
    plan_conversions,
    plot_from_json,
    roc_convex_hull,
    run_evaluation,
    threshold_analysis,
)
from sigvc.inference import VoiceConverter
from sigvc.model import build_model, save_checkpoint


def _emb(*values):
    return SpeakerEmbedding(np.asarray(values, dtype=np.float64))


# ============================================================================
# Cosine similarity
# ============================================================================

def test_cosine_similarity_examples():
    assert cosine_similarity([1.0, 0.0], [1.0, 1.0]) == pytest.approx(0.7071, abs=1e-4)
    assert cosine_similarity(_emb(1.0, 2.0), _emb(2.0, 4.0)) == pytest.approx(1.0)
    assert cosine_similarity([1.0, 0.0], [-1.0, 0.0]) == pytest.approx(-1.0)

    with pytest.raises(DimensionMismatchError):
        cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(DegenerateInputError):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])


def test_cosine_similarity_is_symmetric_and_scale_free():
    rng = np.random.default_rng(12)
    for _ in range(10):
        a, b = rng.standard_normal(32), rng.standard_normal(32)
        base = cosine_similarity(a, b)
        assert cosine_similarity(b, a) == pytest.approx(base, abs=1e-12)
        assert cosine_similarity(3.0 * a, b) == pytest.approx(base, abs=1e-12)
        assert cosine_similarity(a, 0.05 * b) == pytest.approx(base, abs=1e-12)


# ============================================================================
# Three-condition report
# ============================================================================

def test_same_speaker_scores_leave_the_utterance_out():
    rng = np.random.default_rng(0)
    embs = [SpeakerEmbedding(rng.standard_normal(6)) for _ in range(3)]
    enrollment = {
        'a': [(f"a{i}", e) for i, e in enumerate(embs)],
        'b': [("b0", _emb(*rng.standard_normal(6))), ("b1", _emb(*rng.standard_normal(6)))],
    }
    report = build_three_condition_report([], enrollment)

    same = {r.utterance_id: r.cosine for r in report.records if r.condition is SimilarityCondition.SAME_SPEAKER_VS_OWN_AVG}
    for i, e in enumerate(embs):
        others = np.mean([x.values for j, x in enumerate(embs) if j != i], axis=0)
        assert same[f"a{i}"] == pytest.approx(cosine_similarity(e, others), abs=1e-12)
        assert np.allclose(leave_one_out_average(embs, i).values, others)

    # Each of the five utterances is scored against the one other speaker
    assert len(report.scores(SimilarityCondition.DIFF_SPEAKER_VS_OTHER_AVG)) == 5


def test_single_utterance_speakers_warn():
    enrollment = {'a': [("a0", _emb(1.0, 0.0))], 'b': [("b0", _emb(0.0, 1.0))]}
    report = build_three_condition_report([], enrollment)

    assert report.scores(SimilarityCondition.SAME_SPEAKER_VS_OWN_AVG) == []
    assert report.summaries['same_speaker_vs_own_avg'].count == 0
    assert len(report.warnings) == 2
    assert report.scores(SimilarityCondition.DIFF_SPEAKER_VS_OTHER_AVG) == [0.0, 0.0]


def test_converted_condition_only_when_present():
    enrollment = {
        'a': [("a0", _emb(1.0, 0.1)), ("a1", _emb(0.9, 0.0))],
        'b': [("b0", _emb(0.0, 1.0)), ("b1", _emb(0.1, 0.9))],
    }
    assert 'converted_vs_target_avg' not in build_three_condition_report([], enrollment).summaries

    converted = [
        ConvertedItem("a0_to_b", _emb(0.05, 1.0), "b", "a", "M2F"),
        ConvertedItem("b0_to_a", _emb(1.0, 0.05), "a", "b", "F2M"),
        ConvertedItem("x_to_z", _emb(1.0, 1.0), "z"),
    ]
    report = build_three_condition_report(converted, enrollment)
    assert report.summaries['converted_vs_target_avg'].count == 2
    assert sorted(report.gender_breakdown) == ["F2M", "M2F"]
    assert any("unknown speaker" in w for w in report.warnings)


def test_histogram_counts_cover_every_score():
    scores = [-0.5, -0.2, 0.0, 0.3, 0.99, 1.0, 1.2]
    summary = DistributionSummary.from_scores("x", scores)
    assert summary.count == 7
    assert sum(summary.histogram['counts']) == 7
    assert len(summary.histogram['edges']) == 51
    assert summary.histogram['edges'][0] == pytest.approx(-0.2)
    assert summary.histogram['edges'][-1] == pytest.approx(1.0)
    assert set(summary.quantiles) == {"5", "25", "50", "75", "95"}

    empty = DistributionSummary.from_scores("empty", [])
    assert empty.count == 0 and empty.mean is None


# ============================================================================
# Threshold sweep
# ============================================================================

def test_perfect_separation():
    result = threshold_analysis([0.9, 0.8], [0.1, 0.2])
    assert result.eer == 0.0
    assert 0.2 < result.eer_threshold < 0.8
    assert result.separation == pytest.approx(0.7)


def test_indistinguishable_distributions():
    scores = [0.2, 0.4, 0.6, 0.8]
    result = threshold_analysis(scores, scores)
    assert result.eer == pytest.approx(0.5)
    assert result.separation == 0.0


def test_overlapping_scores():
    result = threshold_analysis([0.7, 0.5], [0.6, 0.3])
    assert result.eer == pytest.approx(0.25)
    assert 0.5 < result.eer_threshold <= 0.6
    assert result.min_hter == pytest.approx(0.25)
    assert result.far == result.frr


def test_inverted_scorer_eer_is_at_most_half():
    result = threshold_analysis([0.1, 0.2], [0.8, 0.9])
    assert 0.0 <= result.eer <= 0.5
    assert result.eer == pytest.approx(0.5)
    assert result.separation < 0


def test_hull_vertices_run_from_accept_all_to_accept_none():
    far, frr, thresholds = roc_convex_hull(np.array([0.7, 0.5]), np.array([0.6, 0.3]))
    np.testing.assert_allclose(far, [1.0, 0.5, 0.0, 0.0])
    np.testing.assert_allclose(frr, [0.0, 0.0, 0.5, 1.0])
    assert thresholds[0] == 0.3 and np.isinf(thresholds[-1])


def test_eer_stays_in_range_for_random_overlap():
    rng = np.random.default_rng(4)
    for _ in range(20):
        same = rng.normal(0.6, 0.2, 60)
        diff = rng.normal(0.3, 0.2, 60)
        result = threshold_analysis(same, diff)
        assert 0.0 <= result.eer <= 0.5
        assert result.min_hter <= result.eer + 1e-12


def test_threshold_needs_both_lists():
    with pytest.raises(EmptyInputError):
        threshold_analysis([], [0.1])
    assert acceptance_rate([0.1, 0.5, 0.9], 0.5) == pytest.approx(2 / 3)


# ============================================================================
# Plots
# ============================================================================

def _summaries():
    rng = np.random.default_rng(1)
    return {
        'converted_vs_target_avg': DistributionSummary.from_scores("converted_vs_target_avg", rng.uniform(0.3, 0.8, 40)),
        'same_speaker_vs_own_avg': DistributionSummary.from_scores("same_speaker_vs_own_avg", rng.uniform(0.5, 0.9, 40)),
        'diff_speaker_vs_other_avg': DistributionSummary.from_scores("diff_speaker_vs_other_avg", rng.uniform(0.0, 0.5, 40)),
    }


def test_three_conditions_make_one_plot_and_json(tmp_path):
    paths = emit_plots(_summaries(), tmp_path)
    assert [p.suffix for p in paths] == [".png", ".json"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["similarity_conditions.json", "similarity_conditions.png"]

    payload = json.loads(paths[1].read_text())
    assert len(payload['summaries']) == 3
    assert plot_from_json(paths[1], tmp_path / "redrawn.png").exists()


def test_plots_accept_vector_format(tmp_path):
    paths = emit_plots(_summaries(), tmp_path, fmt="svg")
    assert paths[0].suffix == ".svg" and paths[0].exists()


def test_comparison_plots_one_per_pair(tmp_path):
    base = _summaries()['converted_vs_target_avg']
    systems = {'sigvc': base, 'baseline': base, 'other': base}
    paths = emit_comparison_plots(systems, tmp_path)
    assert len(paths) == 6
    assert all(p.exists() for p in paths)


def test_empty_plot_input_fails(tmp_path):
    with pytest.raises(EmptyInputError):
        emit_plots({}, tmp_path)
    with pytest.raises(EmptyInputError):
        emit_plots([DistributionSummary.from_scores("x", [])], tmp_path)


# ============================================================================
# Harness
# ============================================================================

def _entry(uid, spk):
    return ManifestEntry(utterance_id=uid, speaker_id=spk, wav_path=f"{uid}.wav")


def test_plan_converts_to_another_speaker():
    entries = [_entry(f"{s}{i}", s) for s in "abc" for i in range(3)]
    plan = plan_conversions(entries)

    assert [e.utterance_id for e, _ in plan] == [e.utterance_id for e in entries]
    assert all(entry.speaker_id != target for entry, target in plan)
    targets_of_a = {target for entry, target in plan if entry.speaker_id == "a"}
    assert targets_of_a == {"b", "c"}

    assert len(plan_conversions(entries, max_converted=4)) == 4
    assert plan_conversions([_entry("a0", "a"), _entry("a1", "a")]) == []


def test_run_evaluation_writes_report_and_plots(tmp_path, encoder_dir, encoder_pair, toy_corpus):
    config = trained_config(tmp_path, encoder_dir)
    checkpoint = save_checkpoint(build_model(config), tmp_path / "ckpt", 0, config)
    converter = VoiceConverter.from_checkpoint(checkpoint, config, encoder_pair)

    first = run_evaluation(config, toy_corpus, tmp_path / "a", checkpoint, converter=converter)
    report = json.loads(first.report_path.read_text())

    assert report['config_hash'] == config.config_hash
    assert report['counts'] == {'utterances': 9, 'speakers': 3, 'converted': 9}
    assert set(report['summaries']) == {
        'converted_vs_target_avg', 'same_speaker_vs_own_avg', 'diff_speaker_vs_other_avg',
    }
    assert report['summaries']['same_speaker_vs_own_avg']['count'] == 9
    assert report['summaries']['diff_speaker_vs_other_avg']['count'] == 18
    assert 0.0 <= report['threshold']['eer'] <= 0.5
    assert 0.0 <= report['spoof_acceptance_rate'] <= 1.0
    assert 'cross_model' in report
    assert (tmp_path / "a" / "similarity_conditions.png").exists()
    assert (tmp_path / "a" / "similarity_conditions_cross_model.json").exists()

    second = run_evaluation(
        config, toy_corpus, tmp_path / "b", checkpoint,
        compare_reports=[first.report_path], converter=converter,
    )
    assert (tmp_path / "b" / "compare_b_vs_a_converted_vs_target_avg.png").exists()
    assert second.report_path.exists()


def test_run_evaluation_without_checkpoint_scores_natural_speech(tmp_path, encoder_dir, toy_corpus):
    config = trained_config(tmp_path, encoder_dir, evaluation={'cross_model': False})
    outcome = run_evaluation(config, toy_corpus, tmp_path / "natural")

    assert outcome.report['counts']['converted'] == 0
    assert 'converted_vs_target_avg' not in outcome.report['summaries']
    assert outcome.report['spoof_acceptance_rate'] is None
    assert 'cross_model' not in outcome.report
