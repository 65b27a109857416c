"""
Batch feature extraction over a manifest.

Files are decoded in a thread pool (librosa / soundfile release the GIL in
their heavy parts); results keep manifest order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Union

from sigvc.config import DSPConfig
from sigvc.dsp.feature_io import save_mel
from sigvc.dsp.features import MelSpectrogram, wav_to_mel
from sigvc.dsp.manifest import ManifestEntry

logger = logging.getLogger(__name__)


def extract_features_for_manifest(
    entries: List[ManifestEntry],
    config: Optional[DSPConfig] = None,
    out_dir: Optional[Union[str, Path]] = None,
    trim: bool = True,
) -> Dict[str, MelSpectrogram]:
    """utterance_id -> Mel; also writes <out_dir>/<utterance_id>.mel.f32 when out_dir is set"""
    config = config or DSPConfig()

    def _extract(entry: ManifestEntry) -> MelSpectrogram:
        mel = wav_to_mel(entry.wav_path, config, trim=trim, utterance_id=entry.utterance_id)
        if out_dir is not None:
            save_mel(Path(out_dir) / f"{entry.utterance_id}.mel", mel)
        return mel

    with ThreadPoolExecutor(max_workers=config.num_workers) as pool:
        mels = list(pool.map(_extract, entries))

    logger.info("✓ Extracted Mel features for %d utterances", len(mels))
    return {entry.utterance_id: mel for entry, mel in zip(entries, mels)}
