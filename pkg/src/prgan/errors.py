"""Exception types raised across the package."""


class PrganError(Exception):
    """Base class for all package errors."""


# data / splitting
class TooFewRecords(PrganError):
    pass


class TooFewPoints(PrganError):
    pass


class OutOfRange(PrganError, ValueError):
    pass


class SchemaMismatch(PrganError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class MissingCoordinates(PrganError):
    pass


class WrongKind(PrganError):
    pass


class ShapeMismatch(PrganError):
    pass


# models / training
class UnknownArchitecture(PrganError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnshapedLayer(PrganError):
    pass


class Divergence(PrganError, FloatingPointError):
    def __init__(self, message, last_losses=None):
        super().__init__(message)
        self.last_losses = last_losses or {}


class EmptyEvaluationSet(PrganError):
    pass


class FrozenModelMutated(PrganError, AssertionError):
    pass


# tuning
class NoFeasibleCandidate(PrganError):
    pass


class NoFeasibleEpsilon(PrganError):
    pass


# theory
class SupportMismatch(PrganError):
    pass


class NotBalanced(PrganError):
    pass


class EmptyJointSupport(PrganError):
    pass


class AccuracyPreconditionUnmet(PrganError):
    pass


# cli
class MissingArtifact(PrganError):
    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry
