"""Exception hierarchy. CLI exit codes hang off these classes."""


class EcoEdgeError(Exception):
    exit_code = 1


class ConfigError(EcoEdgeError, ValueError):
    exit_code = 2


class DataError(EcoEdgeError, ValueError):
    exit_code = 3


class NumericError(EcoEdgeError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class DomainError(EcoEdgeError, ValueError):
    """Input outside the mathematical domain of a formula."""


class InfeasibleLinkError(DomainError):
    """Offloaded fraction with a zero-rate link."""


class ConsistencyError(EcoEdgeError, ValueError):
    pass


class ShapeError(EcoEdgeError, ValueError):
    # at the CLI boundary this means a checkpoint that does not fit the scenario
    exit_code = 3


class LifecycleError(EcoEdgeError, RuntimeError):
    pass
