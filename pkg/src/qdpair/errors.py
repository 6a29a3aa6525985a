"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should
raise the most specific type that applies rather than bare ValueError.
"""


class ContractError(ValueError):
    """An argument violates a documented precondition of an operation."""


class ConfigError(ValueError):
    """A configuration file or dictionary is malformed or inconsistent."""


class ModelDomainError(ValueError):
    """Parameters are syntactically valid but outside the physical model's domain."""


class NumericalError(RuntimeError):
    """An iterative or quadrature routine failed to converge to tolerance."""


class ReconstructionError(ModelDomainError):
    """A measurement record cannot identify a state (not informationally complete)."""
