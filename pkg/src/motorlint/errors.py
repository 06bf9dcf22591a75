"""Exception hierarchy shared by all motorlint modules."""


class MotorLintError(Exception):
    """Base class for every error raised by motorlint."""


class MalformedBounds(MotorLintError, ValueError):
    pass


class MalformedXml(MotorLintError, ValueError):
    pass


class NoPairsFound(MotorLintError, FileNotFoundError):
    pass


class EmptyCrop(MotorLintError, ValueError):
    pass


class InvalidParams(MotorLintError, ValueError):
    pass


class MissingPrediction(MotorLintError, KeyError):
    """Labels reference units for which no prediction exists."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"no prediction for {len(self.missing)} labeled unit(s): {', '.join(self.missing[:10])}")

    def __str__(self):
        return self.args[0]


class ConfigError(MotorLintError, ValueError):
    pass
