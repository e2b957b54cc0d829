"""Exception hierarchy shared by all rmfem modules."""


class RMFemError(Exception):
    """Base class for all errors raised by rmfem."""


class TopologyError(RMFemError):
    """Invalid mesh connectivity (non-manifold edges, duplicate cells, ...)."""


class ParameterError(RMFemError, ValueError):
    """Invalid user-supplied parameter."""


class GeometryError(RMFemError):
    """Degenerate or inverted cell geometry."""


class ElementError(RMFemError, ValueError):
    """Unsupported element family/order or misuse of a dof functional."""


class ConstraintError(RMFemError):
    """Inconsistent or unresolvable constraint set."""


class SolverError(RMFemError):
    """Linear solver failure (indefinite matrix, no convergence)."""


class ConfigError(RMFemError):
    """Malformed or invalid run configuration."""
