"""Exception hierarchy shared across the engine.

The CLI maps these onto process exit codes (see cli module): config/usage
problems exit 2, I/O problems exit 3, format/shape/integrity problems exit 4,
failed validation or benchmark checks exit 1.
"""


class SpecStreamError(Exception):
    """Base class for all engine errors."""


class ShapeError(SpecStreamError, ValueError):
    """Operand dimensions are inconsistent with the operation's contract."""


class ConfigError(SpecStreamError, ValueError):
    """A configuration value is out of its documented range."""


class ParseError(SpecStreamError, ValueError):
    """A structured-text document violates the context-tree schema.

    The message names the offending JSON path.
    """


class ValidationError(SpecStreamError, ValueError):
    """Parsed data violates an alignment invariant; names the level."""


class FormatError(SpecStreamError, ValueError):
    """A binary file does not carry the expected magic/version."""


class IntegrityError(SpecStreamError, ValueError):
    """A binary file is structurally valid but internally inconsistent."""


class BenchError(SpecStreamError, RuntimeError):
    """The benchmark harness cannot produce a trustworthy measurement."""


class DecodeAborted(SpecStreamError, RuntimeError):
    """A frame sink failed mid-stream; carries the emitted-frame count."""

    def __init__(self, frames_emitted: int, message: str = ""):
        self.frames_emitted = frames_emitted
        super().__init__(message or f"stream aborted after {frames_emitted} frames")
