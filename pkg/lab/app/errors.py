"""
Exception hierarchy for the lab.
Every error raised on purpose by the package derives from LabError.
"""


class LabError(Exception):
    """Base class for all lab errors"""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of an operation"""


class SingularityError(DomainError):
    """A quantity diverges at the requested parameter (e.g. theta = 1/6)"""


class InsufficientExplorationError(LabError):
    """The revealed map does not yet determine the requested hull"""


class ResourceCapExceeded(LabError):
    """A configured step or vertex cap was hit during exploration"""

    def __init__(self, message: str, steps: int = 0, vertices: int = 0):
        super().__init__(message)
        self.steps = steps
        self.vertices = vertices


class FitError(LabError):
    """Fitting input is degenerate (too few points, all samples equal, ...)"""


class MapConsistencyError(LabError, AssertionError):
    """A structural invariant of a revealed map was violated"""
