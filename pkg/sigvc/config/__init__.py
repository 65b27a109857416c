from .run_config import (
    DSPConfig,
    EncoderSpec,
    EncodersConfig,
    EvaluationConfig,
    InferenceConfig,
    ModelConfig,
    RunConfig,
    TrainingConfig,
    apply_overrides,
    parse_and_validate,
    validate_mapping,
)

__all__ = [
    'DSPConfig',
    'EncoderSpec',
    'EncodersConfig',
    'EvaluationConfig',
    'InferenceConfig',
    'ModelConfig',
    'RunConfig',
    'TrainingConfig',
    'apply_overrides',
    'parse_and_validate',
    'validate_mapping',
]
