"""Audio front end: loading, trimming, Mel extraction and feature files"""

from .feature_io import load_mel, read_feature_file, save_mel, write_feature_file
from .features import (
    MelSpectrogram,
    Waveform,
    expected_num_frames,
    load_and_resample,
    mel_filterbank,
    mel_spectrogram,
    trim_silence,
    wav_to_mel,
    write_wav,
)

__all__ = [
    'MelSpectrogram',
    'Waveform',
    'expected_num_frames',
    'load_and_resample',
    'load_mel',
    'mel_filterbank',
    'mel_spectrogram',
    'read_feature_file',
    'save_mel',
    'trim_silence',
    'wav_to_mel',
    'write_feature_file',
    'write_wav',
]
