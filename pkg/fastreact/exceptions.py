"""
Exceptions raised across fastreact.
"""


class InvalidInputError(ValueError):
    pass


class SolverFailure(RuntimeError):
    """
    Raised when a time step cannot be completed. Carries the offending state
    for diagnostics when the failure came from a reaction solve.
    """

    def __init__(self, message, u=None, v=None, k=None, dt=None):
        super().__init__(message)
        self.u = u
        self.v = v
        self.k = k
        self.dt = dt


class FreeBoundaryError(RuntimeError):
    """
    Raised when the similarity constant could not be bracketed or resolved
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
