"""
SIG-VC training objectives.

    L = L_mid_spk + L_recon + L_recon_postnet + L_std + lambda * L_spk

All l1 terms default to the mean absolute deviation over elements
(reduction="mean"); reduction="sum" gives the unnormalised norm. Every
function accepts a single utterance (T x d / d) or a batch (B x T x d /
B x d) with an optional B x T frame mask; batch results are the mean of
the per-utterance losses.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Union

import numpy as np
import tensorflow as tf

from sigvc.errors import DegenerateInputError, ShapeError

LOSS_KEYS = ('l_mid_spk', 'l_recon', 'l_recon_postnet', 'l_std', 'l_spk')

TensorLike = Union[tf.Tensor, np.ndarray]


def _as_tensor(x) -> tf.Tensor:
    if isinstance(x, (tf.Tensor, tf.Variable)):
        return x
    if hasattr(x, "values") and not isinstance(x, np.ndarray):
        x = x.values
    return tf.convert_to_tensor(np.asarray(x))


def _check_reduction(reduction: str) -> None:
    if reduction not in ("mean", "sum"):
        raise ValueError(f"reduction must be 'mean' or 'sum', got {reduction!r}")


def _check_same_shape(a: tf.Tensor, b: tf.Tensor) -> None:
    if a.shape.is_fully_defined() and b.shape.is_fully_defined() and a.shape != b.shape:
        raise ShapeError(f"Shape mismatch: {a.shape} vs {b.shape}")


def _as_batch(x: tf.Tensor, mask: Optional[TensorLike]):
    """Lift T x d to 1 x T x d and build a float mask of matching dtype"""
    if x.shape.rank == 2:
        x = x[None]
        if mask is not None:
            mask = _as_tensor(mask)[None]
    if mask is None:
        mask = tf.ones(tf.shape(x)[:2], dtype=x.dtype)
    return x, tf.cast(_as_tensor(mask), x.dtype)


def _masked_l1(diff: tf.Tensor, mask: Optional[TensorLike], reduction: str) -> tf.Tensor:
    diff, m = _as_batch(diff, mask)
    m = m[..., None]
    per_item = tf.reduce_sum(tf.abs(diff) * m, axis=[1, 2])
    if reduction == "mean":
        count = tf.reduce_sum(m, axis=[1, 2]) * tf.cast(tf.shape(diff)[-1], diff.dtype)
        per_item = per_item / tf.maximum(count, 1.0)
    return tf.reduce_mean(per_item)


def _vector_l1(v: tf.Tensor, reduction: str) -> tf.Tensor:
    a = tf.abs(v)
    per_item = tf.reduce_mean(a, axis=-1) if reduction == "mean" else tf.reduce_sum(a, axis=-1)
    return tf.reduce_mean(per_item)


# ============================================================================
# Component losses
# ============================================================================

def intermediate_speaker_loss(e, reduction: str = "mean") -> tf.Tensor:
    """|| e - 0 ||_1 on the speaker embedding of the intermediate representation"""
    _check_reduction(reduction)
    return _vector_l1(_as_tensor(e), reduction)


def reconstruction_loss(x, x_hat, mask: Optional[TensorLike] = None, reduction: str = "mean") -> tf.Tensor:
    """|| X - X_hat ||_1 over unmasked frames"""
    _check_reduction(reduction)
    x, x_hat = _as_tensor(x), _as_tensor(x_hat)
    _check_same_shape(x, x_hat)
    return _masked_l1(x - x_hat, mask, reduction)


def std_vector(x, mask: Optional[TensorLike] = None) -> tf.Tensor:
    """
    Per-bin population standard deviation over the T (unmasked) frames.

    Returns d for a single utterance, B x d for a batch. The gradient of the
    square root is taken as zero where the variance is exactly zero.
    """
    x = _as_tensor(x)
    single = x.shape.rank == 2
    xb, m = _as_batch(x, mask)
    m = m[..., None]
    count = tf.maximum(tf.reduce_sum(m, axis=1), 1.0)
    mean = tf.reduce_sum(xb * m, axis=1) / count
    var = tf.reduce_sum(tf.square(xb - mean[:, None, :]) * m, axis=1) / count
    positive = var > 0
    std = tf.where(positive, tf.sqrt(tf.where(positive, var, tf.ones_like(var))), tf.zeros_like(var))
    return std[0] if single else std


def std_loss(x, x_hat_postnet, mask: Optional[TensorLike] = None, reduction: str = "mean") -> tf.Tensor:
    """|| X_std - X_hat_std ||_1"""
    _check_reduction(reduction)
    x, x_hat_postnet = _as_tensor(x), _as_tensor(x_hat_postnet)
    _check_same_shape(x, x_hat_postnet)
    return _vector_l1(std_vector(x, mask) - std_vector(x_hat_postnet, mask), reduction)


def cosine(a: tf.Tensor, b: tf.Tensor) -> tf.Tensor:
    """Row-wise cosine similarity; raises on zero-norm rows when eager"""
    norm_a = tf.norm(a, axis=-1)
    norm_b = tf.norm(b, axis=-1)
    if tf.executing_eagerly():
        if bool(tf.reduce_any(norm_a == 0)) or bool(tf.reduce_any(norm_b == 0)):
            raise DegenerateInputError("Cosine similarity is undefined for a zero-norm vector")
    return tf.math.divide_no_nan(tf.reduce_sum(a * b, axis=-1), norm_a * norm_b)


def speaker_reconstruction_loss(s, s_hat) -> tf.Tensor:
    """1 - cos(s, s_hat); in [0, 2]"""
    s, s_hat = _as_tensor(s), _as_tensor(s_hat)
    _check_same_shape(s, s_hat)
    return tf.reduce_mean(1.0 - cosine(s, s_hat))


def total_loss(components: Dict[str, TensorLike], lambda_spk: float):
    return (
        components['l_mid_spk']
        + components['l_recon']
        + components['l_recon_postnet']
        + components['l_std']
        + lambda_spk * components['l_spk']
    )


def sigvc_objective(
    mel,
    intermediate_embedding,
    mel_pred,
    mel_postnet,
    s,
    s_hat,
    lambda_spk: float,
    mask: Optional[TensorLike] = None,
    reduction: str = "mean",
) -> Dict[str, tf.Tensor]:
    """All five components plus the weighted total, as tensors"""
    components = {
        'l_mid_spk': intermediate_speaker_loss(intermediate_embedding, reduction),
        'l_recon': reconstruction_loss(mel, mel_pred, mask, reduction),
        'l_recon_postnet': reconstruction_loss(mel, mel_postnet, mask, reduction),
        'l_std': std_loss(mel, mel_postnet, mask, reduction),
        'l_spk': speaker_reconstruction_loss(s, s_hat),
    }
    components['total'] = total_loss(components, lambda_spk)
    return components


# ============================================================================
# Plain-value containers
# ============================================================================

@dataclass(eq=False)
class StdVector:
    values: np.ndarray

    @classmethod
    def from_matrix(cls, x) -> "StdVector":
        return cls(np.asarray(std_vector(x)))


@dataclass
class LossBundle:
    l_mid_spk: float
    l_recon: float
    l_recon_postnet: float
    l_std: float
    l_spk: float
    lambda_spk: float
    total: float

    @classmethod
    def from_tensors(cls, values: Dict[str, TensorLike], lambda_spk: float) -> "LossBundle":
        parts = {k: float(values[k]) for k in LOSS_KEYS}
        total = float(values['total']) if 'total' in values else total_loss(parts, lambda_spk)
        return cls(**parts, lambda_spk=float(lambda_spk), total=total)

    def components(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in LOSS_KEYS}

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(list(self.components().values()) + [self.total])))

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)
