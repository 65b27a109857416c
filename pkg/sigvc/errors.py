"""
Exception hierarchy for the SIG-VC toolkit.

Library code raises these; only the CLI turns them into exit codes.
"""

from typing import Dict, Optional

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


class SigVCError(Exception):
    """Base class for every error raised by sigvc"""

    exit_code: int = EXIT_RUNTIME


class ConfigValidationError(SigVCError):
    """Unknown key, bad type or degenerate value in a run config or CLI argument"""

    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class ConfigMismatchError(SigVCError):
    """Runtime config disagrees with data or a checkpoint manifest"""


class ResumeError(ConfigMismatchError):
    """Checkpoint cannot be resumed under the current config"""


class DecodeError(SigVCError):
    exit_code = EXIT_IO


class FeatureIOError(SigVCError):
    exit_code = EXIT_IO


class EmptyInputError(SigVCError):
    pass


class EncoderUnavailableError(SigVCError):
    pass


class TooShortError(SigVCError):
    pass


class ShapeError(SigVCError):
    pass


class DimensionMismatchError(ShapeError):
    pass


class DegenerateInputError(SigVCError):
    pass


class NonFiniteLossError(SigVCError):
    """Training produced a NaN/Inf loss; carries the diagnostics of the step"""

    def __init__(self, step: int, losses: Dict[str, float]):
        parts = ", ".join(f"{k}={v:.6g}" for k, v in losses.items())
        super().__init__(f"Non-finite loss at step {step}: {parts}")
        self.step = step
        self.losses = losses


class ExternalVocoderError(SigVCError):
    """The user-supplied vocoder command exited non-zero"""

    def __init__(self, command, returncode: int, stderr: str = ""):
        detail = f": {stderr.strip()}" if stderr.strip() else ""
        super().__init__(f"Vocoder command {command!r} exited with status {returncode}{detail}")
        self.command = command
        self.returncode = returncode
