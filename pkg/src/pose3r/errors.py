"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class Pose3rError(Exception):
    exit_code = 5


class InvalidInputError(Pose3rError, ValueError):
    """Malformed geometry or file content."""
    exit_code = 2


class DegenerateError(Pose3rError):
    """Configuration has no finite solution set or is unobservable."""
    exit_code = 3


class TranslationDegenerateError(DegenerateError):
    pass


class SingularParameterizationError(DegenerateError):
    """Rotation at or near 180 degrees, which CGR cannot represent."""


class DegenerateMetricError(DegenerateError):
    pass


class UnsupportedConfigurationError(DegenerateError):
    pass


class InsufficientDataError(DegenerateError):
    pass


class NoSolutionError(Pose3rError):
    exit_code = 4


class NoConsensusError(NoSolutionError):
    pass


class NumericFailure(Pose3rError):
    exit_code = 5

    def __init__(self, msg, **diagnostics):
        super().__init__(msg)
        self.diagnostics = diagnostics
