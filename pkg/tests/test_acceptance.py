"""
Toy-scale end-to-end runs. Slow; enable with --run-slow.
"""

import numpy as np
import pytest

from conftest import tiny_mapping
from sigvc.config import validate_mapping
from sigvc.dsp.extraction import extract_features_for_manifest
from sigvc.dsp.manifest import group_by_speaker, load_manifest
from sigvc.dsp.toy_corpus import make_toy_corpus
from sigvc.encoders.base import average_speaker_embedding
from sigvc.encoders.pretrain import pretrain_encoders
from sigvc.encoders.registry import load_encoder_pair
from sigvc.evaluation import cosine_similarity, run_evaluation
from sigvc.inference import VoiceConverter
from sigvc.model import read_manifest
from sigvc.training import FeatureStore, read_metrics, train

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def overfit(tmp_path_factory):
    root = tmp_path_factory.mktemp("overfit")
    corpus = make_toy_corpus(root / "corpus", num_speakers=4, utts_per_speaker=5, seed=0)
    entries = load_manifest(corpus)

    raw = tiny_mapping(
        root,
        encoders={'pretrain_steps': 300},
        model={'width': 64, 'prenet_units': 64, 'ffn_width': 128, 'postnet_channels': 64},
        training={
            'batch_size': 4, 'max_steps': 500, 'checkpoint_interval': 250,
            'log_interval': 50, 'dataset_manifest': str(corpus),
        },
    )
    pre = validate_mapping(raw)
    written = pretrain_encoders(entries, pre.encoders, pre.dsp, root / "encoders")
    for role, path in written.items():
        raw['encoders'][role]['checkpoint_path'] = str(path)
    config = validate_mapping(raw)

    encoders = load_encoder_pair(config.encoders)
    store = FeatureStore.from_entries(entries, config.dsp)
    last = train(config, encoders=encoders, store=store)
    return {
        'root': root, 'corpus': corpus, 'entries': entries, 'config': config,
        'encoders': encoders, 'store': store, 'last': last, 'raw': raw,
    }


def test_overfit_reduces_losses(overfit):
    records = read_metrics(overfit['root'] / "run" / "metrics.jsonl")
    assert len(records) == 500
    first, final = records[0], records[-1]
    assert final['l_recon_postnet'] < 0.5 * first['l_recon_postnet']
    assert final['e_mid_l1'] < first['e_mid_l1']


def test_resume_at_250_matches_straight_run(overfit):
    raw = dict(overfit['raw'])
    raw['training'] = {**raw['training'], 'output_dir': str(overfit['root'] / "resumed")}
    config = validate_mapping(raw)
    halfway = overfit['root'] / "run" / "checkpoints" / "step_000250.json"

    resumed = train(config, resume=halfway, encoders=overfit['encoders'], store=overfit['store'])

    assert read_manifest(resumed).parameter_checksum == read_manifest(overfit['last']).parameter_checksum
    straight = read_metrics(overfit['root'] / "run" / "metrics.jsonl")[250:]
    assert read_metrics(overfit['root'] / "resumed" / "metrics.jsonl") == straight


def test_conversion_moves_toward_the_target(overfit):
    config, encoders = overfit['config'], overfit['encoders']
    converter = VoiceConverter.from_checkpoint(overfit['last'], config, encoders)
    mels = extract_features_for_manifest(overfit['entries'], config.dsp)
    groups = group_by_speaker(overfit['entries'])
    speakers = sorted(groups)

    def speaker_average(spk):
        return average_speaker_embedding([converter.speaker_embedding(mels[e.utterance_id]) for e in groups[spk]])

    averages = {spk: speaker_average(spk) for spk in speakers}
    rng = np.random.default_rng(0)
    wins = 0
    for _ in range(20):
        own = speakers[rng.integers(len(speakers))]
        other = rng.choice([s for s in speakers if s != own])
        source = mels[groups[own][rng.integers(len(groups[own]))].utterance_id]

        to_own = converter.convert_mel(source, averages[own]).mel
        to_other = converter.convert_mel(source, averages[other]).mel
        own_score = cosine_similarity(converter.speaker_embedding(to_own), averages[own])
        other_score = cosine_similarity(converter.speaker_embedding(to_other), averages[own])
        wins += own_score > other_score
    assert wins >= 14


def test_evaluation_separates_speakers(overfit, tmp_path):
    outcome = run_evaluation(overfit['config'], overfit['corpus'], tmp_path, overfit['last'])
    threshold = outcome.report['threshold']

    assert threshold['separation'] > 0.1
    assert threshold['eer'] < 0.3
    assert len(outcome.report['summaries']) == 3
    assert (tmp_path / "similarity_conditions.png").exists()
