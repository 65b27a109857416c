"""
Synthetic multi-speaker corpus.

Every speaker says the same content sequences (shared phone strings and
intonation), rendered through speaker-specific pitch, vocal-tract length,
spectral tilt and an extra resonance. Same seed -> byte-identical WAVs.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import soundfile as sf

from sigvc.dsp.manifest import ManifestEntry, write_manifest
from sigvc.errors import ConfigValidationError, FeatureIOError

logger = logging.getLogger(__name__)

# (F1, F2, F3) in Hz for vowel-like phones; phone id 0 is silence
PHONE_FORMANTS = np.array([
    [730, 1090, 2440],
    [270, 2290, 3010],
    [300, 870, 2240],
    [530, 1840, 2480],
    [570, 840, 2410],
    [660, 1720, 2410],
    [490, 1350, 1690],
    [520, 1190, 2390],
], dtype=np.float64)
NUM_PHONE_CLASSES = len(PHONE_FORMANTS) + 1

FORMANT_BANDWIDTHS = np.array([90.0, 110.0, 150.0])

SILENCE_SEC = 0.15
MAX_HARMONIC_HZ = 7600.0


@dataclass(frozen=True)
class SpeakerTraits:
    speaker_id: str
    gender: str
    f0: float
    formant_scale: float
    tilt_db_per_octave: float
    resonance_hz: float
    resonance_gain: float
    breathiness: float


@dataclass(frozen=True)
class ContentScript:
    phones: Tuple[int, ...]
    durations: Tuple[float, ...]
    intonation: Tuple[float, ...]


def speaker_traits(seed: int, index: int) -> SpeakerTraits:
    rng = np.random.default_rng([seed, 1, index])
    male = index % 2 == 0
    return SpeakerTraits(
        speaker_id=f"spk{index:02d}",
        gender="M" if male else "F",
        f0=float(rng.uniform(95, 140) if male else rng.uniform(180, 240)),
        formant_scale=float(rng.uniform(0.86, 1.0) if male else rng.uniform(1.08, 1.22)),
        tilt_db_per_octave=float(rng.uniform(-13.0, -5.0)),
        resonance_hz=float(rng.uniform(2600, 4200)),
        resonance_gain=float(rng.uniform(0.2, 0.8)),
        breathiness=float(rng.uniform(0.002, 0.02)),
    )


def content_script(seed: int, index: int, target_sec: float = 1.9) -> ContentScript:
    rng = np.random.default_rng([seed, 2, index])
    phones: List[int] = []
    durations: List[float] = []
    while sum(durations) < target_sec:
        phones.append(int(rng.integers(1, NUM_PHONE_CLASSES)))
        durations.append(float(rng.uniform(0.10, 0.24)))
    # Intonation: multiplicative pitch contour sampled at a few anchor points
    intonation = tuple(float(v) for v in rng.uniform(0.85, 1.15, size=5))
    return ContentScript(tuple(phones), tuple(durations), intonation)


def _smooth(x: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return x
    kernel = np.ones(width) / width
    padded = np.pad(x, (width // 2, width - 1 - width // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def synthesize_utterance(
    traits: SpeakerTraits,
    script: ContentScript,
    sample_rate: int = 16000,
    noise_seed: int = 0,
) -> Tuple[np.ndarray, List[Tuple[int, int, int]]]:
    """Render one utterance; returns samples and [start, end, phone] segments"""
    bounds = np.round(np.cumsum((0.0,) + script.durations) * sample_rate).astype(int)
    n_voiced = int(bounds[-1])
    t = np.arange(n_voiced) / sample_rate

    # Phone-dependent formant tracks with coarticulation smoothing
    phone_per_sample = np.repeat(np.asarray(script.phones), np.diff(bounds))
    formants = PHONE_FORMANTS[phone_per_sample - 1] * traits.formant_scale
    smooth_width = int(0.025 * sample_rate)
    formants = np.stack([_smooth(formants[:, k], smooth_width) for k in range(3)], axis=1)

    anchors = np.linspace(0.0, t[-1], num=len(script.intonation))
    f0 = traits.f0 * np.interp(t, anchors, script.intonation)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate

    num_harmonics = int(MAX_HARMONIC_HZ // np.min(f0))
    signal = np.zeros(n_voiced)
    for h in range(1, num_harmonics + 1):
        freq = h * f0
        audible = freq < MAX_HARMONIC_HZ
        if not np.any(audible):
            break
        envelope = np.zeros(n_voiced)
        for k in range(3):
            envelope += np.exp(-0.5 * ((freq - formants[:, k]) / (FORMANT_BANDWIDTHS[k] * traits.formant_scale)) ** 2)
        envelope += traits.resonance_gain * np.exp(-0.5 * ((freq - traits.resonance_hz) / 250.0) ** 2)
        tilt = (freq / 100.0) ** (traits.tilt_db_per_octave / 6.0206)
        signal += np.where(audible, envelope * tilt, 0.0) * np.sin(h * phase)

    rng = np.random.default_rng(noise_seed)
    signal += traits.breathiness * np.max(np.abs(signal)) * rng.standard_normal(n_voiced)

    fade = int(0.02 * sample_rate)
    ramp = np.ones(n_voiced)
    ramp[:fade] = np.linspace(0.0, 1.0, fade)
    ramp[-fade:] = np.linspace(1.0, 0.0, fade)
    signal *= ramp
    signal *= 0.9 / np.max(np.abs(signal))

    pad = int(SILENCE_SEC * sample_rate)
    samples = np.concatenate([np.zeros(pad), signal, np.zeros(pad)])
    segments = [
        (int(bounds[i]) + pad, int(bounds[i + 1]) + pad, int(p))
        for i, p in enumerate(script.phones)
    ]
    return samples, segments


def make_toy_corpus(
    out_dir: Union[str, Path],
    num_speakers: int,
    utts_per_speaker: int,
    seed: int,
    sample_rate: int = 16000,
) -> Path:
    """Write <out_dir>/<speaker>/<utt>.wav plus manifest.json; returns the manifest path"""
    if num_speakers < 1:
        raise ConfigValidationError("num_speakers must be at least 1", key="num_speakers")
    if utts_per_speaker < 1:
        raise ConfigValidationError("utts_per_speaker must be at least 1", key="utts_per_speaker")

    out_dir = Path(out_dir)
    scripts = [content_script(seed, k) for k in range(utts_per_speaker)]
    entries: List[ManifestEntry] = []

    try:
        for s in range(num_speakers):
            traits = speaker_traits(seed, s)
            speaker_dir = out_dir / traits.speaker_id
            speaker_dir.mkdir(parents=True, exist_ok=True)
            for k, script in enumerate(scripts):
                utterance_id = f"{traits.speaker_id}_{k:03d}"
                samples, segments = synthesize_utterance(
                    traits, script, sample_rate, noise_seed=seed * 100003 + s * 1009 + k
                )
                wav_path = speaker_dir / f"{utterance_id}.wav"
                sf.write(str(wav_path), samples, sample_rate, subtype="PCM_16")
                entries.append(ManifestEntry(
                    utterance_id=utterance_id,
                    speaker_id=traits.speaker_id,
                    wav_path=str(wav_path.relative_to(out_dir)),
                    gender=traits.gender,
                    phones=segments,
                ))
        manifest = write_manifest(out_dir / "manifest.json", entries)
    except OSError as e:
        raise FeatureIOError(f"Cannot write toy corpus to {out_dir}: {e}") from e

    logger.info("✓ Toy corpus written: %d speakers x %d utterances -> %s",
                num_speakers, utts_per_speaker, manifest)
    return manifest
