from .dataset import FeatureStore
from .trainer import SIGVCTrainer, StepMetrics, make_optimizer, read_metrics, train

__all__ = ['FeatureStore', 'SIGVCTrainer', 'StepMetrics', 'make_optimizer', 'read_metrics', 'train']
