"""Exception hierarchy shared by all solver services."""


class WaveSolverError(Exception):
    """Base class for every error raised by the solver packages."""
