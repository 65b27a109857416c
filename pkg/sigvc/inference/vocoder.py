"""
Waveform reconstruction from log-Mel features.

Griffin-Lim is the bundled fallback; a neural vocoder can be plugged in
through a command template.
"""

import logging
import os
import shlex
import subprocess
from pathlib import Path
from typing import Optional, Union

import librosa
import numpy as np

from sigvc.config import DSPConfig
from sigvc.dsp.features import MelSpectrogram, Waveform
from sigvc.errors import ConfigValidationError, ExternalVocoderError

logger = logging.getLogger(__name__)


def mel_to_linear(mel: MelSpectrogram, config: Optional[DSPConfig] = None) -> np.ndarray:
    """Pseudo-inverse of the Mel filterbank (per-frame NNLS); (1 + n_fft/2) x T magnitudes"""
    config = config or DSPConfig()
    amplitude = np.exp(mel.values.T.astype(np.float64))
    return librosa.feature.inverse.mel_to_stft(
        amplitude,
        sr=mel.sample_rate,
        n_fft=config.n_fft,
        power=1.0,
        fmin=config.fmin,
        fmax=config.fmax,
    )


def vocode_griffin_lim(
    mel: MelSpectrogram,
    iterations: int = 60,
    config: Optional[DSPConfig] = None,
) -> Waveform:
    """Griffin-Lim phase reconstruction; output is peak-normalised"""
    if iterations < 1:
        raise ConfigValidationError("Griffin-Lim needs at least one iteration", key="inference.griffin_lim_iterations")
    config = config or DSPConfig()

    magnitude = mel_to_linear(mel, config)
    y = librosa.griffinlim(
        magnitude,
        n_iter=iterations,
        hop_length=mel.hop_length,
        win_length=mel.win_length,
        n_fft=config.n_fft,
        window="hann",
        center=True,
        momentum=0.0,
        init="random",
        random_state=0,
    )
    peak = float(np.max(np.abs(y))) if y.size else 0.0
    if peak > 0:
        y = y / peak
    return Waveform(y, mel.sample_rate)


def resolve_vocoder_command(configured: str) -> str:
    command = configured or os.getenv("SIGVC_VOCODER_COMMAND", "")
    if not command:
        raise ConfigValidationError(
            "External vocoder selected but no command configured "
            "(set inference.vocoder_command or SIGVC_VOCODER_COMMAND)",
            key="inference.vocoder_command",
        )
    return command


def vocode_external(
    mel_path: Union[str, Path],
    wav_path: Union[str, Path],
    command: str,
) -> Path:
    """
    Run a vocoder command template such as
    "python -m my_vocoder --mel {mel} --out {wav}".
    """
    args = [
        token.format(mel=str(mel_path), wav=str(wav_path))
        for token in shlex.split(resolve_vocoder_command(command))
    ]
    logger.info("Running external vocoder: %s", " ".join(args))
    try:
        result = subprocess.run(args, capture_output=True, text=True)
    except OSError as e:
        raise ExternalVocoderError(args, 127, str(e)) from e
    if result.returncode != 0:
        raise ExternalVocoderError(args, result.returncode, result.stderr)
    return Path(wav_path)
