"""
Audio ingestion and Mel-spectrogram extraction.

Front end shared by the content encoder, the speaker encoder and the
synthesis path: 16 kHz mono, 80 Mel bins, hop 256, window 1024.
"""

import logging
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path
from typing import Optional, Union

import librosa
import numpy as np
import soundfile as sf
from scipy.signal import resample_poly

from sigvc.config import DSPConfig
from sigvc.errors import ConfigMismatchError, DecodeError, EmptyInputError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Waveform:
    """Mono audio with its sample rate"""

    samples: np.ndarray
    sample_rate: int
    # Set by trim_silence
    all_silent: bool = False
    trim_offset: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.samples)):
            raise ShapeError("Waveform contains non-finite samples")

    def __len__(self) -> int:
        return int(self.samples.shape[0])


@dataclass(eq=False)
class MelSpectrogram:
    """T x d log-amplitude Mel energies"""

    values: np.ndarray
    hop_length: int = 256
    win_length: int = 1024
    sample_rate: int = 16000
    utterance_id: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ShapeError(f"Mel matrix must be 2-D, got shape {self.values.shape}")
        if self.values.shape[0] < 1:
            raise ShapeError("Mel matrix needs at least one frame")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("Mel matrix contains non-finite values")

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def num_bins(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self):
        return self.values.shape

    def metadata(self) -> dict:
        return {
            'num_frames': self.num_frames,
            'num_bins': self.num_bins,
            'sample_rate': self.sample_rate,
            'hop_length': self.hop_length,
            'win_length': self.win_length,
        }


def expected_num_frames(num_samples: int, hop_length: int = 256) -> int:
    """Frame count of a center-padded STFT"""
    return num_samples // hop_length + 1


# ============================================================================
# Loading
# ============================================================================

def resample(samples: np.ndarray, orig_sr: int, target_sr: int) -> np.ndarray:
    """Rational-ratio polyphase resampling"""
    if orig_sr == target_sr:
        return samples
    g = gcd(int(orig_sr), int(target_sr))
    return resample_poly(samples, target_sr // g, orig_sr // g)


def load_and_resample(path: Union[str, Path], config: Optional[DSPConfig] = None) -> Waveform:
    """
    Read a PCM file, average channels to mono and resample to the configured rate.

    Peak amplitude is normalized to at most 1.
    """
    config = config or DSPConfig()
    try:
        data, sr = sf.read(str(path), dtype="float64", always_2d=True)
    except (RuntimeError, sf.LibsndfileError, OSError) as e:
        raise DecodeError(f"Cannot decode audio file {path}: {e}") from e

    if data.shape[0] == 0:
        raise EmptyInputError(f"Audio file {path} has no samples")

    mono = data.mean(axis=1)

    if config.trim_before_resample:
        mono = trim_silence(Waveform(mono, sr), config.trim_threshold_db, config).samples

    samples = resample(mono, sr, config.sample_rate)

    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak > 1.0:
        samples = samples / peak

    return Waveform(samples, config.sample_rate)


# ============================================================================
# Silence trimming
# ============================================================================

def trim_silence(
    w: Waveform,
    threshold_db: Optional[float] = None,
    config: Optional[DSPConfig] = None,
) -> Waveform:
    """
    Remove leading and trailing frames whose RMS is below threshold_db
    relative to the sample peak. The interior is never touched.

    An all-silent input comes back unchanged with all_silent set.
    """
    config = config or DSPConfig()
    if threshold_db is None:
        threshold_db = config.trim_threshold_db
    if len(w) == 0:
        raise EmptyInputError("Cannot trim an empty waveform")

    frame_length = config.trim_frame_length
    hop_length = config.trim_hop_length
    y = w.samples

    if not np.any(y):
        logger.warning("Waveform is entirely silent; returning it untrimmed")
        return Waveform(y.copy(), w.sample_rate, all_silent=True, trim_offset=w.trim_offset)

    if len(y) < frame_length:
        return Waveform(y.copy(), w.sample_rate, trim_offset=w.trim_offset)

    rms = librosa.feature.rms(y=y, frame_length=frame_length, hop_length=hop_length, center=False)[0]
    db = librosa.amplitude_to_db(rms, ref=float(np.max(np.abs(y))), top_db=None)
    loud = np.flatnonzero(db >= threshold_db)

    if loud.size == 0:
        return Waveform(y.copy(), w.sample_rate, all_silent=True, trim_offset=w.trim_offset)

    first, last = int(loud[0]), int(loud[-1])
    start = first * hop_length
    # Samples after the last full frame are never scanned; keep them with it
    end = len(y) if last == len(rms) - 1 else last * hop_length + frame_length

    return Waveform(y[start:end].copy(), w.sample_rate, trim_offset=w.trim_offset + start)


# ============================================================================
# Mel-spectrogram
# ============================================================================

def mel_filterbank(config: DSPConfig) -> np.ndarray:
    return librosa.filters.mel(
        sr=config.sample_rate,
        n_fft=config.n_fft,
        n_mels=config.n_mels,
        fmin=config.fmin,
        fmax=config.fmax,
    )


def mel_spectrogram(w: Waveform, config: Optional[DSPConfig] = None) -> MelSpectrogram:
    """
    Center-padded (reflect) Hann STFT, Mel filterbank over 0..fmax,
    natural-log compression with a floor of log_floor.
    """
    config = config or DSPConfig()
    if w.sample_rate != config.sample_rate:
        raise ConfigMismatchError(
            f"Waveform is {w.sample_rate} Hz but the front end expects {config.sample_rate} Hz"
        )
    if len(w) < 1:
        raise EmptyInputError("Cannot compute a Mel-spectrogram of an empty waveform")

    spec = librosa.stft(
        w.samples,
        n_fft=config.n_fft,
        hop_length=config.hop_length,
        win_length=config.win_length,
        window="hann",
        center=True,
        pad_mode="reflect",
    )
    mel = mel_filterbank(config) @ np.abs(spec)
    log_mel = np.log(np.maximum(mel, config.log_floor))

    return MelSpectrogram(
        values=log_mel.T.astype(np.float32),
        hop_length=config.hop_length,
        win_length=config.win_length,
        sample_rate=config.sample_rate,
    )


def wav_to_mel(
    path: Union[str, Path],
    config: Optional[DSPConfig] = None,
    trim: bool = True,
    utterance_id: Optional[str] = None,
) -> MelSpectrogram:
    """load -> (trim) -> Mel, the pipeline every consumer of audio files uses"""
    config = config or DSPConfig()
    w = load_and_resample(path, config)
    if trim and not config.trim_before_resample:
        w = trim_silence(w, config.trim_threshold_db, config)
    mel = mel_spectrogram(w, config)
    mel.utterance_id = utterance_id or Path(path).stem
    return mel


def write_wav(path: Union[str, Path], w: Waveform, subtype: str = "PCM_16") -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        sf.write(str(path), np.clip(w.samples, -1.0, 1.0), w.sample_rate, subtype=subtype)
    except (RuntimeError, sf.LibsndfileError, OSError) as e:
        raise DecodeError(f"Cannot write audio file {path}: {e}") from e
    return path
