"""
Process-level helpers: logging setup, reproducibility switches, checksums.
"""

import hashlib
import logging
import os
import random
from typing import Iterable, Optional

import numpy as np
import tensorflow as tf

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    level = (level or os.getenv("SIGVC_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, force=True)
    # TF is chatty at INFO
    logging.getLogger("tensorflow").setLevel(logging.WARNING)


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    tf.keras.utils.set_random_seed(seed)


def enable_determinism() -> None:
    """Deterministic kernels and single-threaded numerics"""
    tf.config.experimental.enable_op_determinism()
    try:
        tf.config.threading.set_intra_op_parallelism_threads(1)
        tf.config.threading.set_inter_op_parallelism_threads(1)
    except RuntimeError:
        # Thread pools are fixed once the TF runtime is up
        logger.warning("TF runtime already initialised; thread counts left unchanged")


def weights_checksum(weights: Iterable[np.ndarray]) -> str:
    """sha256 over the raw bytes of a weight list"""
    digest = hashlib.sha256()
    for w in weights:
        arr = np.ascontiguousarray(np.asarray(w))
        digest.update(str(arr.dtype).encode())
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()
