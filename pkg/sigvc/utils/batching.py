"""Padding variable-length Mel matrices into a masked batch"""

from typing import Sequence, Tuple

import numpy as np

from sigvc.errors import EmptyInputError, ShapeError


def pad_batch(matrices: Sequence[np.ndarray], pad_value: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stack T_i x d matrices into B x T_max x d.

    Returns (batch, mask) where mask[b, t] is 1.0 on real frames.
    """
    if not matrices:
        raise EmptyInputError("Cannot pad an empty batch")
    dims = {m.shape[1] for m in matrices}
    if len(dims) != 1:
        raise ShapeError(f"Batch items have different feature widths {sorted(dims)}")

    max_len = max(m.shape[0] for m in matrices)
    batch = np.full((len(matrices), max_len, dims.pop()), pad_value, dtype=np.float32)
    mask = np.zeros((len(matrices), max_len), dtype=np.float32)
    for i, m in enumerate(matrices):
        batch[i, : m.shape[0]] = m
        mask[i, : m.shape[0]] = 1.0
    return batch, mask
