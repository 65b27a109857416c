from .converter import ConversionRequest, ConversionResult, VoiceConverter, convert, output_paths
from .vocoder import mel_to_linear, vocode_external, vocode_griffin_lim

__all__ = [
    'ConversionRequest',
    'ConversionResult',
    'VoiceConverter',
    'convert',
    'mel_to_linear',
    'output_paths',
    'vocode_external',
    'vocode_griffin_lim',
]
