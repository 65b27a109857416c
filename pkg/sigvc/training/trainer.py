"""
SIG-VC training loop.

One step: pad the batch, run the remove -> add -> refine forward with the
frozen encoders in the loop, take gradients of the total loss with respect
to the SIG-VC model only, clip by global norm and apply Adam.
"""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import tensorflow as tf

from sigvc.config import RunConfig
from sigvc.dsp.features import MelSpectrogram
from sigvc.encoders.registry import EncoderPair, load_encoder_pair
from sigvc.encoders.toy_encoders import parameter_checksum
from sigvc.errors import EmptyInputError, EncoderUnavailableError, NonFiniteLossError, SigVCError
from sigvc.losses.objectives import LossBundle, sigvc_objective
from sigvc.model.checkpoint import load_for_resume, restore_optimizer, save_checkpoint
from sigvc.model.sigvc_model import DROPOUT_SITES, SIGVCModel, build_model, dropout_seeds, forward_batch
from sigvc.training.dataset import FeatureStore
from sigvc.utils.batching import pad_batch
from sigvc.utils.runtime import enable_determinism, seed_everything

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
CHECKPOINT_DIR = "checkpoints"


@dataclass
class StepMetrics:
    step: int
    losses: LossBundle
    e_mid_l1: float
    wall_time_ms: float

    def is_finite(self) -> bool:
        return self.losses.is_finite() and bool(np.isfinite(self.e_mid_l1))

    def to_record(self) -> Dict[str, float]:
        """JSONL record; wall time is left out so logs are reproducible"""
        return {
            'step': self.step,
            **self.losses.components(),
            'total': self.losses.total,
            'e_mid_l1': self.e_mid_l1,
        }


def make_optimizer(config: RunConfig) -> tf.keras.optimizers.Optimizer:
    t = config.training
    return tf.keras.optimizers.Adam(
        learning_rate=t.learning_rate,
        beta_1=t.beta1,
        beta_2=t.beta2,
        epsilon=t.epsilon,
        global_clipnorm=t.grad_clip_norm,
    )


class SIGVCTrainer:
    """Owns the model, the optimizer and the frozen encoders for one run"""

    def __init__(
        self,
        config: RunConfig,
        model: SIGVCModel,
        encoders: EncoderPair,
        optimizer: Optional[tf.keras.optimizers.Optimizer] = None,
    ):
        if not encoders.differentiable:
            raise EncoderUnavailableError("Training needs differentiable (toy) content and speaker encoders")
        self.config = config
        self.model = model
        self.encoders = encoders
        self.optimizer = optimizer or make_optimizer(config)
        self.optimizer.build(self.model.trainable_variables)

        self._encoder_checksums = self.encoder_checksums()

        n_mels = config.dsp.n_mels
        signature = [
            tf.TensorSpec([None, None, n_mels], tf.float32),
            tf.TensorSpec([None, None], tf.float32),
            tf.TensorSpec([DROPOUT_SITES, 2], tf.int64),
        ]
        self._gradients = (
            tf.function(self._compute_gradients, input_signature=signature)
            if config.training.compile_step
            else self._compute_gradients
        )

    def encoder_checksums(self) -> Dict[str, str]:
        return {
            'content': parameter_checksum(self.encoders.content),
            'speaker': parameter_checksum(self.encoders.speaker),
        }

    def check_invariants(self) -> None:
        """Frozen encoders untouched and one manipulator shared by both paths"""
        if self.encoder_checksums() != self._encoder_checksums:
            raise SigVCError("Frozen encoder parameters changed during training")
        if self.model.remover_manipulator is not self.model.adder_manipulator:
            raise SigVCError("Remover and adder no longer share the manipulator")
        if self.encoders.content.trainable_variables or self.encoders.speaker.trainable_variables:
            raise SigVCError("Encoder variables are trainable")

    def _compute_gradients(self, mel, mask, seeds):
        t = self.config.training
        with tf.GradientTape() as tape:
            out = forward_batch(self.model, self.encoders, mel, mask, training=True, dropout_seeds=seeds)
            losses = sigvc_objective(
                mel, out['e_mid'], out['mel_pred'], out['mel_postnet'], out['s'], out['s_hat'],
                lambda_spk=t.lambda_spk, mask=mask, reduction=t.l1_reduction,
            )
        variables = self.model.trainable_variables
        grads = tape.gradient(losses['total'], variables)
        losses['e_mid_l1'] = tf.reduce_mean(tf.reduce_sum(tf.abs(out['e_mid']), axis=-1))
        return losses, grads

    def train_step(self, batch: Sequence[MelSpectrogram], step: int) -> StepMetrics:
        """One optimizer update on a list of utterances; step seeds the dropout"""
        if not batch:
            raise EmptyInputError("train_step needs a non-empty batch")
        started = time.perf_counter()

        mel, mask = pad_batch([m.values for m in batch], float(np.log(self.config.dsp.log_floor)))
        seeds = dropout_seeds(self.config.training.seed, step)
        losses, grads = self._gradients(tf.constant(mel), tf.constant(mask), tf.constant(seeds))

        values = {k: float(v) for k, v in losses.items()}
        bundle = LossBundle.from_tensors(values, self.config.training.lambda_spk)
        metrics = StepMetrics(step, bundle, values['e_mid_l1'], (time.perf_counter() - started) * 1000.0)
        if not metrics.is_finite():
            raise NonFiniteLossError(step, {**bundle.components(), 'total': bundle.total})

        pairs = [(g, v) for g, v in zip(grads, self.model.trainable_variables) if g is not None]
        self.optimizer.apply_gradients(pairs)
        metrics.wall_time_ms = (time.perf_counter() - started) * 1000.0
        return metrics


def _truncate_metrics(path: Path, step: int) -> None:
    """Drop records past `step` so a resumed run appends cleanly"""
    if not path.exists():
        return
    kept = [
        line for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and json.loads(line)['step'] <= step
    ]
    path.write_text("".join(line + "\n" for line in kept), encoding="utf-8")


def read_metrics(path: Union[str, Path]) -> List[Dict[str, float]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def train(
    config: RunConfig,
    resume: Optional[Union[str, Path]] = None,
    encoders: Optional[EncoderPair] = None,
    store: Optional[FeatureStore] = None,
) -> Path:
    """
    Run training to config.training.max_steps.

    Returns the manifest path of the last checkpoint written. Metrics go
    to <output_dir>/metrics.jsonl, checkpoints to <output_dir>/checkpoints.
    """
    t = config.training
    if t.deterministic:
        enable_determinism()

    encoders = encoders or load_encoder_pair(config.encoders)
    store = store or FeatureStore.from_manifest(t.dataset_manifest, config.dsp)

    out_dir = Path(t.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_dir = out_dir / CHECKPOINT_DIR
    metrics_path = out_dir / METRICS_FILE
    (out_dir / "config.yaml").write_text(config.to_yaml(), encoding="utf-8")

    optimizer = make_optimizer(config)
    # Initial weights depend only on the seed
    seed_everything(t.seed)
    if resume is not None:
        model, manifest, slots = load_for_resume(resume, config)
        restore_optimizer(optimizer, model, slots)
        start = manifest.step
        _truncate_metrics(metrics_path, start)
        logger.info("Resuming from step %d (%s)", start, resume)
    else:
        model = build_model(config)
        start = 0
        if metrics_path.exists():
            metrics_path.unlink()

    trainer = SIGVCTrainer(config, model, encoders, optimizer)
    logger.info(
        "Training %d params for steps %d..%d on %d utterances (batch %d, lambda_spk %.3g)",
        model.count_params(), start + 1, t.max_steps, len(store), t.batch_size, t.lambda_spk,
    )

    last: Optional[Path] = None
    if start >= t.max_steps:
        last = save_checkpoint(model, checkpoint_dir, start, config, optimizer)

    with open(metrics_path, "a", encoding="utf-8") as log:
        for step in range(start + 1, t.max_steps + 1):
            metrics = trainer.train_step(store.batch_for_step(t.seed, step, t.batch_size), step)
            log.write(json.dumps(metrics.to_record()) + "\n")
            log.flush()

            if step == 1 or step % t.log_interval == 0:
                logger.info(
                    "step %d: total=%.4f recon_postnet=%.4f spk=%.4f e_mid_l1=%.4f (%.0f ms)",
                    step, metrics.losses.total, metrics.losses.l_recon_postnet,
                    metrics.losses.l_spk, metrics.e_mid_l1, metrics.wall_time_ms,
                )
            if step % t.checkpoint_interval == 0 or step == t.max_steps:
                trainer.check_invariants()
                last = save_checkpoint(model, checkpoint_dir, step, config, optimizer)

    logger.info("✓ Training finished at step %d", t.max_steps)
    return last
