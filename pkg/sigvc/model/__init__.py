from .checkpoint import (
    CheckpointManifest,
    load_checkpoint,
    load_for_resume,
    read_manifest,
    restore_optimizer,
    save_checkpoint,
    validate_manifest,
)
from .sigvc_model import (
    ForwardBundle,
    IntermediateRepresentation,
    SIGVCModel,
    SpeakerInfoManipulator,
    build_model,
    dropout_seeds,
    forward_batch,
    training_forward,
)

__all__ = [
    'CheckpointManifest',
    'ForwardBundle',
    'IntermediateRepresentation',
    'SIGVCModel',
    'SpeakerInfoManipulator',
    'build_model',
    'dropout_seeds',
    'forward_batch',
    'load_checkpoint',
    'load_for_resume',
    'read_manifest',
    'restore_optimizer',
    'save_checkpoint',
    'training_forward',
]
