class YieldError(RuntimeError):
    """
    Base class for domain failures.

    The CLI reports these with exit status 1.
    """


class NotFoundError(YieldError):
    """
    Raised when a tree or branch is not present in a ledger.
    """


class InsufficientDataError(YieldError):
    """
    Raised when a regression receives fewer than three points.
    """


class DegeneratePredictorError(YieldError):
    """
    Raised when all predictor values of a regression are equal.
    """


class DomainError(YieldError, ValueError):
    """
    Raised when a numerical routine receives an argument outside its domain.
    """


class NoTargetDataError(YieldError):
    """
    Raised when a ledger holds no harvest records of the requested target.
    """


class NoFittableStagesError(YieldError):
    """
    Raised when no measurement day has enough complete branches to fit.
    """


class NoCalibrationError(YieldError):
    """
    Raised when a forecast asks for a stage the calibration doesn't cover.
    """

    def __init__(self, stage: str, available: list[str]):
        super().__init__(f"no calibration for stage {stage}")
        self.stage = stage
        self.available = available


class NoWeightDataError(YieldError):
    """
    Raised when no harvest record carries both a positive count and a weight.
    """


class EmptyScheduleError(YieldError):
    """
    Raised when a simulation is requested over an empty stage schedule.
    """


class UnknownStageError(YieldError):
    """
    Raised when a stage is not part of a simulation schedule.
    """


class EmptyInputError(YieldError):
    """
    Raised when a plot has nothing to draw.
    """


class UsageError(RuntimeError):
    """
    Base class for usage and IO failures.

    The CLI reports these with exit status 2.
    """


class IngestError(UsageError):
    """
    Raised when a CSV stream can't be read or its header is wrong.
    """


class InvalidParameterError(UsageError):
    """
    Raised when a simulation parameter is out of range or unknown.

    Attributes:
        parameter (str): Name of the offending parameter.
    """

    def __init__(self, parameter: str, message: str):
        super().__init__(f"Invalid parameter '{parameter}': {message}")
        self.parameter = parameter
