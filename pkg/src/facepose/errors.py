"""Exception types raised across the package."""


class FacePoseError(ValueError):
    """Base class for all data errors raised by facepose."""


class InvalidRotationError(FacePoseError):
    pass


class ProjectionError(FacePoseError):
    """A point lies on or behind the camera plane."""

    def __init__(self, index, depth):
        self.index = int(index)
        self.depth = float(depth)
        super().__init__(f"point {self.index} has nonpositive camera depth {self.depth:.6g}")


class SchemeError(FacePoseError):
    pass


class TooFewCorrespondencesError(FacePoseError):
    pass


class DegenerateConfigurationError(FacePoseError):
    pass


class DegenerateGroundTruthError(FacePoseError):
    pass


class EmptyInputError(FacePoseError):
    pass


class DivergenceError(FacePoseError):
    def __init__(self, epoch, loss):
        self.epoch = int(epoch)
        self.loss = float(loss)
        super().__init__(f"training diverged at epoch {self.epoch} (loss={self.loss})")
