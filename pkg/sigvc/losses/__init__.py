from .objectives import (
    LOSS_KEYS,
    LossBundle,
    StdVector,
    intermediate_speaker_loss,
    reconstruction_loss,
    sigvc_objective,
    speaker_reconstruction_loss,
    std_loss,
    std_vector,
    total_loss,
)

__all__ = [
    'LOSS_KEYS',
    'LossBundle',
    'StdVector',
    'intermediate_speaker_loss',
    'reconstruction_loss',
    'sigvc_objective',
    'speaker_reconstruction_loss',
    'std_loss',
    'std_vector',
    'total_loss',
]
