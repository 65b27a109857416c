"""
Building blocks of the SIG-VC network.
"""

import numpy as np
import tensorflow as tf


def _frame_mask(x: tf.Tensor, frame_mask=None) -> tf.Tensor:
    if frame_mask is None:
        return tf.ones(tf.shape(x)[:2], dtype=x.dtype)
    return tf.cast(frame_mask, x.dtype)


class PreNet(tf.keras.layers.Layer):
    """
    Two ReLU dense layers, each followed by dropout.

    Dropout is stateless: the caller passes one [2] seed per layer so a
    training step is a pure function of (weights, batch, seeds).
    """

    num_dropout_sites = 2

    def __init__(self, units: int, output_units: int, rate: float, **kwargs):
        super().__init__(**kwargs)
        self.units = units
        self.output_units = output_units
        self.rate = rate
        self.dense1 = tf.keras.layers.Dense(units, activation="relu", name="dense1")
        self.dense2 = tf.keras.layers.Dense(output_units, activation="relu", name="dense2")

    def _dropout(self, h, training, seed):
        if not training or self.rate <= 0:
            return h
        if seed is None:
            return tf.nn.dropout(h, rate=self.rate)
        return tf.nn.experimental.stateless_dropout(h, rate=self.rate, seed=seed)

    def call(self, x, training=False, dropout_seeds=None):
        s1 = None if dropout_seeds is None else dropout_seeds[0]
        s2 = None if dropout_seeds is None else dropout_seeds[1]
        h = self._dropout(self.dense1(x), training, s1)
        return self._dropout(self.dense2(h), training, s2)


def sinusoid_table(length, width: int) -> tf.Tensor:
    """length x width table: sin codes followed by cos codes"""
    half = (width + 1) // 2
    position = tf.cast(tf.range(length), tf.float32)[:, None]
    rates = tf.constant(1.0 / np.power(10000.0, 2.0 * np.arange(half) / width), dtype=tf.float32)
    angles = position * rates[None, :]
    table = tf.concat([tf.sin(angles), tf.cos(angles)], axis=-1)
    return table[:, :width]


class SinusoidalPositionalEncoding(tf.keras.layers.Layer):
    def __init__(self, width: int, **kwargs):
        super().__init__(**kwargs)
        self.width = width

    def call(self, x):
        return x + tf.cast(sinusoid_table(tf.shape(x)[1], self.width), x.dtype)[None]


class FFTBlock(tf.keras.layers.Layer):
    """
    Feed-forward transformer block: self-attention and a 1-D conv
    feed-forward, each with residual + layer norm. Padded frames stay zero.
    """

    def __init__(self, width: int, heads: int, ffn_width: int, ffn_kernel: int, **kwargs):
        super().__init__(**kwargs)
        self.attention = tf.keras.layers.MultiHeadAttention(
            num_heads=heads, key_dim=width // heads, name="attention"
        )
        self.attention_norm = tf.keras.layers.LayerNormalization(epsilon=1e-5, name="attention_norm")
        self.ffn_in = tf.keras.layers.Conv1D(ffn_width, ffn_kernel, padding="same", activation="relu", name="ffn_in")
        self.ffn_out = tf.keras.layers.Conv1D(width, 1, name="ffn_out")
        self.ffn_norm = tf.keras.layers.LayerNormalization(epsilon=1e-5, name="ffn_norm")

    def call(self, x, frame_mask=None):
        mask = _frame_mask(x, frame_mask)
        m = mask[..., None]
        # Every query attends only to real key frames
        attention_mask = tf.cast(mask[:, None, :] * tf.ones_like(mask)[:, :, None], tf.bool)
        h = self.attention(x, x, attention_mask=attention_mask)
        h = self.attention_norm(x + h) * m
        f = self.ffn_out(self.ffn_in(h))
        return self.ffn_norm(h + f) * m


class PostNet(tf.keras.layers.Layer):
    """
    Residual conv refinement: output = input + postnet(input).

    The last conv is zero-initialised so a fresh PostNet is the identity.
    """

    def __init__(self, n_mels: int, channels: int, kernel: int, layers: int, **kwargs):
        super().__init__(**kwargs)
        self.convs = [
            tf.keras.layers.Conv1D(channels, kernel, padding="same", activation="tanh", name=f"conv{i}")
            for i in range(layers - 1)
        ]
        self.convs.append(tf.keras.layers.Conv1D(
            n_mels, kernel, padding="same",
            kernel_initializer="zeros", bias_initializer="zeros",
            name=f"conv{layers - 1}",
        ))

    def call(self, mel, frame_mask=None):
        m = _frame_mask(mel, frame_mask)[..., None]
        h = mel * m
        for conv in self.convs:
            h = conv(h) * m
        return mel + h
