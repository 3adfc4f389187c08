"""Exception hierarchy shared by every stage."""


class PassportError(Exception):
    """Base class for all library errors."""


class ValidationError(PassportError, ValueError):
    pass


class ConfigurationError(PassportError, ValueError):
    pass


class TrainingError(PassportError, RuntimeError):
    pass


class CalibrationError(PassportError, RuntimeError):
    pass


class UnknownTermError(PassportError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown term"


class StageError(PassportError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
