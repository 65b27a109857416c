"""
SIG-VC checkpoints.

A checkpoint is a pair of files sharing a stem:
    step_000250.npz   model weights (w0000...) and optimizer state (opt0000...)
    step_000250.json  manifest: architecture, d_s, d_c, step, config hashes
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import tensorflow as tf

from sigvc.config import RunConfig
from sigvc.errors import ConfigMismatchError, FeatureIOError, ResumeError
from sigvc.model.sigvc_model import SIGVCModel, build_model
from sigvc.utils.runtime import weights_checksum

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class CheckpointManifest:
    architecture: Dict[str, Any]
    d_s: int
    d_c: int
    step: int
    config_hash: str
    compatibility_hash: str
    manipulator_layout: str
    parameter_checksum: str
    weights_file: str
    has_optimizer_state: bool = False
    encoders: Dict[str, Optional[str]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def checkpoint_paths(path: PathLike) -> Tuple[Path, Path]:
    """(weights .npz, manifest .json) for a stem or either file"""
    path = Path(path)
    name = path.name
    for suffix in (".npz", ".json"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return path.with_name(name + ".npz"), path.with_name(name + ".json")


def checkpoint_name(step: int) -> str:
    return f"step_{step:06d}"


def save_checkpoint(
    model: SIGVCModel,
    directory: PathLike,
    step: int,
    config: RunConfig,
    optimizer: Optional[tf.keras.optimizers.Optimizer] = None,
) -> Path:
    """Write weights, optimizer slots and manifest; returns the manifest path"""
    weights_path, manifest_path = checkpoint_paths(Path(directory) / checkpoint_name(step))
    weights_path.parent.mkdir(parents=True, exist_ok=True)

    weights = model.get_weights()
    arrays = {f"w{i:04d}": w for i, w in enumerate(weights)}
    if optimizer is not None:
        arrays.update({f"opt{i:04d}": np.array(v.numpy()) for i, v in enumerate(optimizer.variables)})
    with open(weights_path, "wb") as f:
        np.savez(f, **arrays)

    manifest = CheckpointManifest(
        architecture=config.architecture(),
        d_s=config.encoders.speaker_dim,
        d_c=config.encoders.content_dim,
        step=int(step),
        config_hash=config.config_hash,
        compatibility_hash=config.compatibility_hash,
        manipulator_layout=model.manipulator.layout,
        parameter_checksum=weights_checksum(weights),
        weights_file=weights_path.name,
        has_optimizer_state=optimizer is not None,
        encoders={
            'content': config.encoders.content.checkpoint_path,
            'speaker': config.encoders.speaker.checkpoint_path,
        },
    )
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2), encoding="utf-8")
    logger.info("✓ Checkpoint step %d written to %s", step, manifest_path)
    return manifest_path


def read_manifest(path: PathLike) -> CheckpointManifest:
    _, manifest_path = checkpoint_paths(path)
    try:
        data = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise FeatureIOError(f"Cannot read checkpoint manifest {manifest_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FeatureIOError(f"Corrupt checkpoint manifest {manifest_path}: {e}") from e
    return CheckpointManifest(**data)


def validate_manifest(manifest: CheckpointManifest, config: RunConfig) -> None:
    """Architecture in the manifest must equal the runtime config's"""
    expected = config.architecture()
    differing = sorted(
        k for k in set(expected) | set(manifest.architecture)
        if expected.get(k) != manifest.architecture.get(k)
    )
    if differing:
        details = ", ".join(
            f"{k}: checkpoint={manifest.architecture.get(k)!r} config={expected.get(k)!r}" for k in differing
        )
        raise ConfigMismatchError(f"Checkpoint does not match runtime config ({details})")


def _load_arrays(weights_path: Path) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    try:
        with np.load(weights_path) as data:
            weights = [data[k] for k in sorted(k for k in data.files if k.startswith("w"))]
            slots = [data[k] for k in sorted(k for k in data.files if k.startswith("opt"))]
    except (OSError, ValueError) as e:
        raise FeatureIOError(f"Cannot read checkpoint weights {weights_path}: {e}") from e
    return weights, slots


def load_checkpoint(path: PathLike, config: RunConfig) -> Tuple[SIGVCModel, CheckpointManifest, List[np.ndarray]]:
    """
    Rebuild the model for `config` and load weights.

    Returns (model, manifest, optimizer_state); optimizer_state is empty
    when the checkpoint was written without an optimizer.
    """
    manifest = read_manifest(path)
    validate_manifest(manifest, config)
    weights_path, _ = checkpoint_paths(path)

    weights, slots = _load_arrays(weights_path)
    if weights_checksum(weights) != manifest.parameter_checksum:
        raise FeatureIOError(f"Checkpoint weights {weights_path} do not match the manifest checksum")

    model = build_model(config)
    model.set_weights(weights)
    logger.info("✓ Loaded checkpoint step %d from %s", manifest.step, weights_path)
    return model, manifest, slots


def restore_optimizer(
    optimizer: tf.keras.optimizers.Optimizer,
    model: SIGVCModel,
    slots: List[np.ndarray],
) -> None:
    """Build the optimizer over the model and assign saved slot values"""
    optimizer.build(model.trainable_variables)
    variables = list(optimizer.variables)
    if len(variables) != len(slots):
        raise ResumeError(f"Optimizer state has {len(slots)} tensors, optimizer expects {len(variables)}")
    for var, value in zip(variables, slots):
        if tuple(var.shape) != tuple(value.shape):
            raise ResumeError(f"Optimizer slot shape {value.shape} does not match {tuple(var.shape)}")
        var.assign(value)


def load_for_resume(path: PathLike, config: RunConfig) -> Tuple[SIGVCModel, CheckpointManifest, List[np.ndarray]]:
    """load_checkpoint plus the stricter resume contract"""
    manifest = read_manifest(path)
    if manifest.compatibility_hash != config.compatibility_hash:
        raise ResumeError(
            "Checkpoint was trained under a different config "
            f"(compatibility hash {manifest.compatibility_hash[:12]} != {config.compatibility_hash[:12]})"
        )
    model, manifest, slots = load_checkpoint(path, config)
    if not manifest.has_optimizer_state:
        raise ResumeError(f"Checkpoint {path} carries no optimizer state")
    return model, manifest, slots
