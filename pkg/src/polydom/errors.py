"""Exception types shared across the package.

Two families matter to the CLI: validation errors fault the caller's inputs
(exit code 2), computation errors fault the run itself (exit code 3).
"""


class PolydomError(Exception):
    """Base class for all package errors."""


class ValidationError(PolydomError):
    """Bad inputs: malformed files, out-of-range parameters, violated preconditions."""


class ComputationError(PolydomError):
    """A run failed after inputs were accepted."""


class InsufficientSamples(ValidationError):
    """Too few distinct sizes to fit a cost curve of the requested degree."""


class IdenticalCurves(ValidationError):
    """Intersection of a cost curve with itself was requested."""


class UniverseTooLarge(ValidationError):
    """Feature universe exceeds the hard cap for exhaustive/lattice work."""


class EmptyDataset(ValidationError):
    """A learner was given no items to train on."""


class DegenerateFit(ComputationError):
    """The least-squares design matrix was rank deficient."""


class AccuracyTie(ComputationError):
    """Two candidate curves share an exact accuracy and tie resolution is off."""


class NoFeasibleModel(ComputationError):
    """No indexed model fits within the requested budget."""


class EquivalenceError(ComputationError):
    """A baseline cross-check disagreed with the indexed answer."""


class TrainingFailed(ComputationError):
    """The black-box learner failed; carries the offending feature mask."""

    def __init__(self, message: str, mask: int | None = None):
        super().__init__(message)
        self.mask = mask
