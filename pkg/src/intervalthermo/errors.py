"""Exception hierarchy shared by all modules."""


class ThermoError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(ThermoError, ValueError):
    """A point lies outside the domain of a map or tower domain."""


class NumericError(ThermoError, ArithmeticError):
    """A root solve or refinement failed to reach its tolerance."""


class AmbiguityError(NumericError):
    """More than one root was found where exactly one was expected."""


class StructuralError(ThermoError):
    """A symbolic or graph structure is unusable (empty sums, reducible matrices)."""


class DependencyError(ThermoError):
    """A required precomputed object is missing or too shallow."""


class PreconditionError(ThermoError, ValueError):
    """Input violates the documented precondition of an operation."""


class BracketError(NumericError):
    """A root could not be bracketed."""


class ConfigError(ThermoError, ValueError):
    """Malformed run configuration."""


class TruncationBoundary(ThermoError):
    """Stepping would leave the retained part of a truncated Hofbauer tower."""

    def __init__(self, domain_id, branch):
        super().__init__(f"edge from domain {domain_id} along branch {branch} leaves the truncated tower")
        self.domain_id = domain_id
        self.branch = branch
