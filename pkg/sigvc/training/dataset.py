"""
Training data: cached Mel features and per-step batch sampling.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from sigvc.config import DSPConfig
from sigvc.dsp.extraction import extract_features_for_manifest
from sigvc.dsp.features import MelSpectrogram
from sigvc.dsp.manifest import ManifestEntry, load_corpus
from sigvc.errors import ConfigValidationError, TooShortError

logger = logging.getLogger(__name__)


class FeatureStore:
    """
    In-memory Mel features for a training manifest.

    Batches are drawn with replacement from an RNG seeded by (seed, step),
    so the batch of any step can be regenerated without replaying the
    steps before it.
    """

    def __init__(self, mels: Sequence[MelSpectrogram]):
        if not mels:
            raise ConfigValidationError("Training dataset is empty", key="training.dataset_manifest")
        short = [m.utterance_id for m in mels if m.num_frames < 2]
        if short:
            raise TooShortError(f"Training utterances shorter than 2 frames: {', '.join(map(str, short))}")
        self.mels: List[MelSpectrogram] = list(mels)

    @classmethod
    def from_entries(cls, entries: List[ManifestEntry], config: DSPConfig) -> "FeatureStore":
        if not entries:
            raise ConfigValidationError("Training dataset is empty", key="training.dataset_manifest")
        features = extract_features_for_manifest(entries, config)
        return cls([features[e.utterance_id] for e in entries])

    @classmethod
    def from_manifest(cls, path: Union[str, Path], config: DSPConfig) -> "FeatureStore":
        entries = load_corpus(path, allow_empty=True)
        logger.info("Loading %d training utterances from %s", len(entries), path)
        return cls.from_entries(entries, config)

    def __len__(self) -> int:
        return len(self.mels)

    def sample_indices(self, seed: int, step: int, batch_size: int) -> np.ndarray:
        rng = np.random.default_rng([int(seed), int(step)])
        return rng.integers(0, len(self.mels), size=batch_size)

    def batch_for_step(self, seed: int, step: int, batch_size: int) -> List[MelSpectrogram]:
        return [self.mels[int(i)] for i in self.sample_indices(seed, step, batch_size)]
