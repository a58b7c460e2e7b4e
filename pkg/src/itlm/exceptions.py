"""Exception types raised by the package."""


class ITLMError(Exception):
    """Base class for all errors raised by :mod:`itlm`."""


class ConfigError(ITLMError, ValueError):
    """An invalid configuration or argument."""


class RankDeficiencyError(ITLMError, ArithmeticError):
    """The selected rows do not determine a unique least-squares solution.

    Attributes
    ----------
    ratio : float
        sigma_min / sigma_max of the selected-row Gram matrix.
    trace : EstimationTrace or None
        Partial trace, attached by :func:`itlm.driver.run_itlm` when the
        failure happens mid-run.
    """

    def __init__(self, message, ratio=float("nan"), trace=None):
        super().__init__(message)
        self.ratio = ratio
        self.trace = trace


class EnumerationLimitError(ITLMError):
    """An exhaustive enumeration would exceed its configured guard."""
