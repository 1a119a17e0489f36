"""Exception types shared across the toolkit."""


class RelaxkitError(Exception):
    """Base class for toolkit errors."""


class ShapeError(RelaxkitError, ValueError):
    """A matrix, grid or nodal array has the wrong shape."""


class DomainEscapeError(RelaxkitError, ValueError):
    """A cube or sample point leaves the working domain."""


class ResolutionError(RelaxkitError, ValueError):
    """Meshes or grids are not aligned at compatible resolutions."""


class ConfigurationError(RelaxkitError, ValueError):
    """An option bundle is inconsistent or out of range."""


class DegenerateInputError(RelaxkitError, ValueError):
    """Input carries no finite information (e.g. an all-infinite table)."""


class ToleranceError(RelaxkitError):
    """A checked inequality failed by more than its allowed slack.

    The command line maps this to its own exit code so callers can tell a
    tolerance violation from a crash.
    """
