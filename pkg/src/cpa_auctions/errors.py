"""Exception hierarchy shared by the library and the CLI."""


class CpaAuctionError(Exception):
    pass


class ConfigError(CpaAuctionError, ValueError):
    """Invalid parameters or configuration records.

    ``key`` names the offending field when one can be identified.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalError(CpaAuctionError, ArithmeticError):
    """A numerical routine failed (quadrature, NaN in a sweep, ...)."""


class SolverError(NumericalError):
    """Root finding or bisection could not certify its answer."""


class DegenerateEstimateError(NumericalError):
    """A Monte Carlo ratio estimator saw no accepted samples."""


class UnsupportedCaseError(CpaAuctionError, NotImplementedError):
    """Requested rule/distribution combination has no implemented closed form."""


class CFLError(NumericalError):
    """Explicit finite-difference step violates the stability bound."""

    def __init__(self, message, suggested_t_steps):
        super().__init__(message)
        self.suggested_t_steps = suggested_t_steps
