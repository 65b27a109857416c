"""
Shared fixtures: tiny configs, synthetic audio, a small toy corpus and
tiny pre-trained encoders.
"""

import os

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from sigvc.config import RunConfig, validate_mapping  # noqa: E402
from sigvc.dsp.features import MelSpectrogram, Waveform, mel_spectrogram  # noqa: E402
from sigvc.dsp.manifest import load_manifest  # noqa: E402
from sigvc.dsp.toy_corpus import make_toy_corpus  # noqa: E402
from sigvc.encoders.pretrain import pretrain_encoders  # noqa: E402
from sigvc.encoders.registry import load_encoder_pair, load_evaluation_encoder  # noqa: E402

SR = 16000


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run long acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ============================================================================
# Configs
# ============================================================================

def tiny_mapping(root, **sections):
    """Small-but-complete run config as a raw mapping"""
    raw = {
        'dsp': {'num_workers': 2},
        'encoders': {
            'content': {'channels': 16},
            'speaker': {'channels': 16},
            'evaluation_speaker': {'channels': 12, 'seed': 1},
            'pretrain_steps': 60,
            'pretrain_batch_size': 4,
            'pretrain_crop_frames': 48,
        },
        'model': {
            'width': 32,
            'prenet_units': 32,
            'encoder_layers': 1,
            'decoder_layers': 1,
            'attention_heads': 2,
            'ffn_width': 64,
            'postnet_layers': 3,
            'postnet_channels': 32,
        },
        'training': {
            'batch_size': 2,
            'max_steps': 4,
            'checkpoint_interval': 2,
            'output_dir': str(root / "run"),
            'log_interval': 1,
        },
        'inference': {'griffin_lim_iterations': 4},
    }
    for section, values in sections.items():
        raw.setdefault(section, {}).update(values)
    return raw


def tiny_config(root, **sections) -> RunConfig:
    return validate_mapping(tiny_mapping(root, **sections))


@pytest.fixture
def tmp_config(tmp_path) -> RunConfig:
    return tiny_config(tmp_path)


# ============================================================================
# Audio
# ============================================================================

def sine(freq=440.0, seconds=1.0, amplitude=0.5, sr=SR) -> np.ndarray:
    t = np.arange(int(round(seconds * sr))) / sr
    return amplitude * np.sin(2 * np.pi * freq * t)


def mel_with_frames(num_frames: int, seed: int = 0, utterance_id=None) -> MelSpectrogram:
    """Mel of a noisy harmonic signal with exactly num_frames frames"""
    rng = np.random.default_rng(seed)
    n = (num_frames - 1) * 256
    y = sine(150.0, n / SR, 0.4) + sine(300.0, n / SR, 0.2) + 0.01 * rng.standard_normal(n)
    mel = mel_spectrogram(Waveform(y, SR))
    mel.utterance_id = utterance_id
    return mel


# ============================================================================
# Toy corpus and encoders (built once per session)
# ============================================================================

@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """3 speakers x 3 utterances; returns the manifest path"""
    root = tmp_path_factory.mktemp("toy_corpus")
    return make_toy_corpus(root, num_speakers=3, utts_per_speaker=3, seed=11)


@pytest.fixture(scope="session")
def toy_entries(toy_corpus):
    return load_manifest(toy_corpus)


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory, toy_entries):
    root = tmp_path_factory.mktemp("encoders")
    config = tiny_config(root)
    pretrain_encoders(toy_entries, config.encoders, config.dsp, root)
    return root


def trained_config(root, encoder_dir, **sections) -> RunConfig:
    """Tiny config wired to the session's pre-trained encoders"""
    raw = tiny_mapping(root, **sections)
    for role in ('content', 'speaker', 'evaluation_speaker'):
        raw['encoders'][role]['checkpoint_path'] = str(encoder_dir / f"{role}_encoder")
    return validate_mapping(raw)


@pytest.fixture
def trained_tmp_config(tmp_path, encoder_dir, toy_corpus) -> RunConfig:
    return trained_config(tmp_path, encoder_dir, training={'dataset_manifest': str(toy_corpus)})


@pytest.fixture(scope="session")
def encoder_pair(tmp_path_factory, encoder_dir):
    config = trained_config(tmp_path_factory.mktemp("pair"), encoder_dir)
    return load_encoder_pair(config.encoders)


@pytest.fixture(scope="session")
def evaluation_encoder(tmp_path_factory, encoder_dir):
    config = trained_config(tmp_path_factory.mktemp("eval_enc"), encoder_dir)
    return load_evaluation_encoder(config.encoders)
