"""Exception hierarchy shared across the package.

The command line maps these onto distinct exit codes: format/parse
problems, topology problems, engine (numerical) failures, and resource
guards are kept separate so callers can react programmatically.
"""


class EquimeshError(Exception):
    """Base class for all package errors."""


class FormatError(EquimeshError):
    """Malformed input file or unparsable value."""


class TopologyError(EquimeshError):
    """Mesh connectivity violates the supported topology class."""


class EngineError(EquimeshError):
    """Numerical failure inside a solver or remeshing loop."""


class SolverError(EngineError):
    """Iterative linear solve did not reach the requested residual."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class FoldError(EngineError):
    """Parameter-domain fold: a mapped triangle reversed orientation."""


class SingularityError(EngineError):
    """Coordinate inversion requested on or too near the singular locus."""


class IntersectionError(EngineError):
    """Remeshed contour crosses itself."""

    def __init__(self, message, particle_ids=()):
        super().__init__(message)
        self.particle_ids = list(particle_ids)


class GuardError(EquimeshError):
    """A resource guard (refinement depth, expansion degree) was exceeded."""
