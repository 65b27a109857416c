"""Conversion service and vocoders"""

import shlex
import sys
from pathlib import Path

import librosa
import numpy as np
import pytest

from conftest import SR, mel_with_frames, sine, trained_config
from sigvc.dsp.feature_io import read_feature_file
from sigvc.dsp.features import MelSpectrogram, Waveform, mel_spectrogram
from sigvc.errors import ConfigValidationError, ExternalVocoderError, TooShortError
from sigvc.inference import (
    ConversionRequest,
    VoiceConverter,
    convert,
    mel_to_linear,
    output_paths,
    vocode_external,
    vocode_griffin_lim,
)
from sigvc.model import build_model, save_checkpoint


@pytest.fixture(scope="module")
def tone_mel():
    return mel_spectrogram(Waveform(sine(440.0, 0.5), SR))


def _spectral_error(y: np.ndarray, target: np.ndarray) -> float:
    """Relative magnitude error after the best scalar gain"""
    magnitude = np.abs(librosa.stft(y, n_fft=1024, hop_length=256, win_length=1024, center=True))
    frames = min(magnitude.shape[1], target.shape[1])
    magnitude, target = magnitude[:, :frames], target[:, :frames]
    gain = np.sum(magnitude * target) / np.sum(magnitude * magnitude)
    return float(np.linalg.norm(gain * magnitude - target) / np.linalg.norm(target))


# ============================================================================
# Griffin-Lim
# ============================================================================

def test_griffin_lim_output_length(tone_mel):
    y = vocode_griffin_lim(tone_mel, iterations=4)
    assert len(y) == (tone_mel.num_frames - 1) * 256
    assert y.sample_rate == SR
    assert np.max(np.abs(y.samples)) == pytest.approx(1.0)


def test_griffin_lim_keeps_the_tone(tone_mel):
    y = vocode_griffin_lim(tone_mel, iterations=60)
    recovered = mel_spectrogram(y)
    original_peak = int(np.argmax(tone_mel.values.mean(axis=0)))
    recovered_peak = int(np.argmax(recovered.values.mean(axis=0)))
    assert abs(original_peak - recovered_peak) <= 1


def test_more_iterations_do_not_hurt(tone_mel):
    target = mel_to_linear(tone_mel)
    many = _spectral_error(vocode_griffin_lim(tone_mel, iterations=60).samples, target)
    one = _spectral_error(vocode_griffin_lim(tone_mel, iterations=1).samples, target)
    assert many <= one


def test_griffin_lim_is_repeatable(tone_mel):
    a = vocode_griffin_lim(tone_mel, iterations=3).samples
    b = vocode_griffin_lim(tone_mel, iterations=3).samples
    assert np.array_equal(a, b)


def test_griffin_lim_rejects_zero_iterations(tone_mel):
    with pytest.raises(ConfigValidationError):
        vocode_griffin_lim(tone_mel, iterations=0)


# ============================================================================
# External vocoder
# ============================================================================

def _python_command(code: str) -> str:
    return f"{shlex.quote(sys.executable)} -c {shlex.quote(code)}"


def test_external_vocoder_fills_placeholders(tmp_path):
    mel_path = tmp_path / "x.mel.f32"
    mel_path.write_bytes(b"\0" * 8)
    wav_path = tmp_path / "x.wav"
    command = _python_command("import shutil, sys; shutil.copy(sys.argv[1], sys.argv[2])") + " {mel} {wav}"

    assert vocode_external(mel_path, wav_path, command) == wav_path
    assert wav_path.read_bytes() == mel_path.read_bytes()


def test_external_vocoder_failure_carries_status(tmp_path):
    command = _python_command("import sys; sys.exit(5)") + " {mel} {wav}"
    with pytest.raises(ExternalVocoderError) as info:
        vocode_external(tmp_path / "a.mel.f32", tmp_path / "a.wav", command)
    assert info.value.returncode == 5

    with pytest.raises(ExternalVocoderError) as info:
        vocode_external(tmp_path / "a.mel.f32", tmp_path / "a.wav", "/nonexistent/vocoder {mel} {wav}")
    assert info.value.returncode == 127


def test_external_vocoder_needs_a_command(tmp_path, monkeypatch):
    monkeypatch.delenv("SIGVC_VOCODER_COMMAND", raising=False)
    with pytest.raises(ConfigValidationError):
        vocode_external(tmp_path / "a.mel.f32", tmp_path / "a.wav", "")


# ============================================================================
# Conversion
# ============================================================================

@pytest.fixture
def checkpoint(tmp_path, encoder_dir):
    config = trained_config(tmp_path, encoder_dir)
    model = build_model(config)
    return config, save_checkpoint(model, tmp_path / "ckpt", 0, config)


def test_output_paths():
    assert output_paths("out/a.wav") == output_paths("out/a")
    mel, wav = output_paths("out/a")
    assert mel.name == "a.mel" and wav.name == "a.wav"


def test_request_needs_a_target(tmp_path):
    with pytest.raises(ConfigValidationError):
        ConversionRequest(tmp_path / "s.wav", [], tmp_path / "out")
    with pytest.raises(ConfigValidationError):
        ConversionRequest(tmp_path / "s.wav", [tmp_path / "t.wav"], tmp_path / "out", vocoder="wavenet")


def test_convert_mel_preserves_frame_count(checkpoint, encoder_pair):
    config, path = checkpoint
    converter = VoiceConverter.from_checkpoint(path, config, encoder_pair)
    target = converter.speaker_embedding(mel_with_frames(40, seed=3))

    result = converter.convert_mel(mel_with_frames(57), target)
    assert result.mel.values.shape == (57, 80)
    assert result.target_embedding is target

    with pytest.raises(TooShortError):
        converter.convert_mel(MelSpectrogram(np.zeros((1, 80))), target)


def test_convert_without_vocoder_writes_features_only(tmp_path, checkpoint, encoder_pair, toy_entries):
    config, path = checkpoint
    source, target = toy_entries[0], toy_entries[-1]
    req = ConversionRequest(source.wav_path, [target.wav_path], tmp_path / "out" / "converted", path, vocoder="none")

    result = convert(req, config, encoder_pair)

    written = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert written == ["converted.mel.f32", "converted.mel.json"]
    assert result.wav_path is None

    matrix, meta = read_feature_file(result.feature_path)
    source_mel = VoiceConverter(config, None, encoder_pair).load_mel(source.wav_path)
    assert matrix.shape == (source_mel.num_frames, 80)
    assert meta['source'] == str(Path(source.wav_path))
    assert meta['checkpoint_step'] == 0


def test_convert_with_griffin_lim_writes_audio(tmp_path, checkpoint, encoder_pair, toy_entries):
    config, path = checkpoint
    req = ConversionRequest(
        toy_entries[0].wav_path, [e.wav_path for e in toy_entries[-2:]], tmp_path / "out.wav", path
    )
    result = VoiceConverter.from_checkpoint(path, config, encoder_pair).convert(req)

    assert result.wav_path == tmp_path / "out.wav"
    audio, sr = librosa.load(result.wav_path, sr=None)
    assert sr == SR
    assert len(audio) == (result.mel.num_frames - 1) * 256


def test_convert_many_keeps_request_order(tmp_path, checkpoint, encoder_pair, toy_entries):
    config, path = checkpoint
    converter = VoiceConverter.from_checkpoint(path, config, encoder_pair)
    sources = toy_entries[:3]
    requests = [
        ConversionRequest(e.wav_path, [toy_entries[-1].wav_path], tmp_path / f"c{i}", path, vocoder="none")
        for i, e in enumerate(sources)
    ]

    results = converter.convert_many(requests, num_workers=2)

    assert [r.feature_path.name for r in results] == [f"c{i}.mel.f32" for i in range(3)]
    for entry, result in zip(sources, results):
        assert result.mel.num_frames == converter.load_mel(entry.wav_path).num_frames
