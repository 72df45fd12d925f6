class MarkovModelError(Exception):
    """Base exception class for panel Markov model errors."""
    pass


class InvalidParameterError(MarkovModelError):
    """Exception for out-of-domain parameters (negative rates, negative times)."""
    pass


class ModelDegeneracyError(MarkovModelError):
    """Exception for parameter values where a closed-form path is undefined.

    Callers are expected to fall back to the series matrix exponential.
    """
    pass


class InfiniteSojournError(ModelDegeneracyError):
    """Exception for a transient state with zero total exit rate."""
    pass


class EstimationInputError(MarkovModelError):
    """Exception for count tables that cannot be used for estimation."""
    pass


class ZeroCellError(EstimationInputError):
    """Exception for a zero observable cell in the Hessian scale factor."""

    def __init__(self, message: str, cell: tuple):
        super().__init__(message)
        self.cell = cell


class EstimationFailureError(MarkovModelError):
    """Exception for a Hessian block that cannot be inverted."""
    pass


class NonConvergenceError(MarkovModelError):
    """Exception for an iteration that exhausted max_iter."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


class IllDefinedCellError(MarkovModelError):
    """Exception for a chi-square cell with zero expectation and nonzero count."""
    pass


class InternalConsistencyError(MarkovModelError):
    """Exception for probabilities outside [0, 1] beyond rounding noise."""
    pass


class DataParsingError(MarkovModelError):
    """Exception for malformed input files."""
    pass


class ConfigError(MarkovModelError):
    """Exception for configuration related errors."""
    pass


class ExcelExportError(MarkovModelError):
    """Exception for Excel export related errors."""
    pass
