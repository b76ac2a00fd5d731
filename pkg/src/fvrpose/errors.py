"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class DegenerateInputError(InvalidInputError):
    """Input sits on a singular configuration that cannot be decoded."""


class RankDeficientError(DegenerateInputError):
    """Point correspondences do not constrain a unique transform."""


class InvalidPredictionError(ValueError):
    """A predicted quantity decodes to a physically invalid value."""


class TrainingDivergedError(RuntimeError):
    """Loss or gradients became non-finite during fitting."""

    def __init__(self, message, epoch=None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch
