"""
Run configuration for SIG-VC.

One YAML document describes a whole run. Every section is a pydantic model
that forbids unknown keys, so a typo fails loudly instead of silently
falling back to a default.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from sigvc.errors import ConfigValidationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class DSPConfig(_Section):
    """Audio front end (Mel configuration shared by every path)"""

    sample_rate: int = Field(16000, gt=0)
    n_mels: int = Field(80, gt=0)
    n_fft: int = Field(1024, gt=0)
    win_length: int = Field(1024, gt=0)
    hop_length: int = Field(256, gt=0)
    fmin: float = Field(0.0, ge=0)
    fmax: float = Field(8000.0, gt=0)
    log_floor: float = Field(1e-5, gt=0)

    # Silence trimming
    trim_threshold_db: float = -40.0
    trim_frame_length: int = Field(1024, gt=0)
    trim_hop_length: int = Field(256, gt=0)
    trim_before_resample: bool = False

    num_workers: int = Field(4, ge=1)

    @property
    def frame_rate(self) -> float:
        """Mel frames per second"""
        return self.sample_rate / self.hop_length


class EncoderSpec(_Section):
    """Adapter selection for one encoder"""

    type: Literal["toy", "external"] = "toy"
    checkpoint_path: Optional[str] = None
    # External providers: frame rate of the stored features (None = Mel rate)
    frame_rate: Optional[float] = Field(None, gt=0)
    channels: int = Field(128, gt=0)
    seed: int = 0


class EncodersConfig(_Section):
    content_dim: int = Field(64, gt=0)
    speaker_dim: int = Field(192, gt=0)
    content: EncoderSpec = Field(default_factory=EncoderSpec)
    speaker: EncoderSpec = Field(default_factory=EncoderSpec)
    evaluation_speaker: Optional[EncoderSpec] = Field(
        default_factory=lambda: EncoderSpec(channels=96, seed=1)
    )

    # Toy pre-training
    pretrain_steps: int = Field(300, ge=0)
    pretrain_batch_size: int = Field(8, ge=1)
    pretrain_learning_rate: float = Field(1e-3, gt=0)
    pretrain_crop_frames: int = Field(64, ge=2)


class ModelConfig(_Section):
    """SIG-VC network hyperparameters"""

    width: int = Field(256, gt=0)
    prenet_units: int = Field(256, gt=0)
    prenet_dropout: float = Field(0.2, ge=0, lt=1)
    encoder_layers: int = Field(2, ge=1)
    decoder_layers: int = Field(2, ge=0)
    attention_heads: int = Field(2, ge=1)
    ffn_width: int = Field(1024, gt=0)
    ffn_kernel: int = Field(3, ge=1)
    postnet_layers: int = Field(5, ge=1)
    postnet_kernel: int = Field(5, ge=1)
    postnet_channels: int = Field(256, gt=0)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "ModelConfig":
        if self.width % self.attention_heads:
            raise ValueError("width must be divisible by attention_heads")
        return self

    @property
    def manipulator_layout(self) -> str:
        return "fft_encoder_decoder" if self.decoder_layers else "fft_encoder_only"


class TrainingConfig(_Section):
    learning_rate: float = Field(0.001, gt=0)
    beta1: float = Field(0.9, gt=0, lt=1)
    beta2: float = Field(0.98, gt=0, lt=1)
    epsilon: float = Field(1e-9, gt=0)
    batch_size: int = Field(16, ge=1)
    lambda_spk: float = Field(3.0, ge=0)
    max_steps: int = Field(1000, ge=0)
    seed: int = 1234
    checkpoint_interval: int = Field(250, ge=1)
    dataset_manifest: str = "data/toy_corpus/manifest.json"
    output_dir: str = "runs/sigvc"
    grad_clip_norm: float = Field(1.0, gt=0)
    l1_reduction: Literal["mean", "sum"] = "mean"
    deterministic: bool = True
    compile_step: bool = True
    log_interval: int = Field(10, ge=1)


class InferenceConfig(_Section):
    vocoder: Literal["griffin_lim", "external", "none"] = "griffin_lim"
    griffin_lim_iterations: int = Field(60, ge=1)
    vocoder_command: str = ""
    trim_source: bool = True
    num_workers: int = Field(2, ge=1)


class EvaluationConfig(_Section):
    histogram_bins: int = Field(50, ge=1)
    histogram_range: Tuple[float, float] = (-0.2, 1.0)
    quantiles: List[float] = Field(default_factory=lambda: [5.0, 25.0, 50.0, 75.0, 95.0])
    max_converted: Optional[int] = Field(None, ge=0)
    cross_model: bool = True

    @model_validator(mode="after")
    def _range_ordered(self) -> "EvaluationConfig":
        low, high = self.histogram_range
        if not low < high:
            raise ValueError("histogram_range must be increasing")
        return self


# Training fields that do not change the optimisation trajectory
_RUN_LENGTH_FIELDS = ("max_steps", "checkpoint_interval", "output_dir", "log_interval", "compile_step")


class RunConfig(_Section):
    dsp: DSPConfig = Field(default_factory=DSPConfig)
    encoders: EncodersConfig = Field(default_factory=EncodersConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    inference: InferenceConfig = Field(default_factory=InferenceConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    def canonical(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    @property
    def config_hash(self) -> str:
        return _digest(self.canonical())

    @property
    def compatibility_hash(self) -> str:
        """Digest of everything that must match for a resume to be exact"""
        data = self.canonical()
        training = {k: v for k, v in data["training"].items() if k not in _RUN_LENGTH_FIELDS}
        return _digest({
            "dsp": data["dsp"],
            "encoders": data["encoders"],
            "model": data["model"],
            "training": training,
        })

    def architecture(self) -> Dict[str, Any]:
        """Block recorded in checkpoint manifests and validated on load"""
        return {
            **self.model.model_dump(mode="json"),
            "manipulator_layout": self.model.manipulator_layout,
            "d_s": self.encoders.speaker_dim,
            "d_c": self.encoders.content_dim,
            "n_mels": self.dsp.n_mels,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.canonical(), sort_keys=False)


def _digest(data: Dict[str, Any]) -> str:
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


OverrideItems = Union[Dict[str, Any], Iterable[Tuple[str, Any]]]


def apply_overrides(raw: Dict[str, Any], overrides: OverrideItems) -> Dict[str, Any]:
    """
    Apply dotted-path overrides (e.g. training.lambda_spk=0) to a raw mapping.

    String values are read as YAML scalars so "0", "true" and "1e-3" keep
    their natural types.
    """
    items = overrides.items() if isinstance(overrides, dict) else overrides
    for dotted, value in items:
        if isinstance(value, str):
            value = yaml.safe_load(value) if value.strip() else value
        parts = [p for p in dotted.split(".") if p]
        if not parts:
            raise ConfigValidationError(f"Empty override key '{dotted}'", key=dotted)

        node = raw
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigValidationError(
                    f"Cannot override '{dotted}': '{part}' is not a section", key=dotted
                )
            node = child
        node[parts[-1]] = value
    return raw


def parse_and_validate(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[OverrideItems] = None,
) -> RunConfig:
    """Load a YAML run config, apply CLI overrides and materialize defaults"""
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigValidationError(f"Cannot read config {path}: {e}") from e
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigValidationError(f"Config {path} is not valid YAML: {e}") from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigValidationError(f"Config {path} must be a mapping at top level")
        raw = loaded

    if overrides:
        raw = apply_overrides(raw, overrides)

    return validate_mapping(raw)


def validate_mapping(raw: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise _to_config_error(e) from e


def _to_config_error(error: ValidationError) -> ConfigValidationError:
    first = error.errors()[0]
    key = ".".join(str(p) for p in first["loc"])
    if first["type"] == "extra_forbidden":
        message = f"Unknown config key '{key}'"
    else:
        message = f"Invalid value for '{key}': {first['msg']}"
    if len(error.errors()) > 1:
        message += f" (and {len(error.errors()) - 1} more problem(s))"
    return ConfigValidationError(message, key=key)
