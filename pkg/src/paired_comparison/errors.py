"""
Exception hierarchy shared by every paired_comparison module.

The command-line layer maps each family onto a process exit code.
"""


class PairedComparisonError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 1


class DomainError(PairedComparisonError, ValueError):
    """A special function was called outside its mathematical domain."""

    exit_code = 4


class ConfigurationError(PairedComparisonError):
    """An invalid model, posterior or run configuration.

    Not a ValueError: pydantic would otherwise wrap it in a ValidationError.
    """

    exit_code = 2


class DataParseError(PairedComparisonError):
    """Paired-comparison counts could not be parsed or validated."""

    exit_code = 3

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EstimationError(PairedComparisonError):
    """Posterior estimation failed; carries the best iterate when one exists."""

    exit_code = 4

    def __init__(self, message, best_iterate=None):
        super().__init__(message)
        self.best_iterate = best_iterate


class GoodnessOfFitError(PairedComparisonError):
    """The chi-square test cannot be evaluated for the given estimate."""

    exit_code = 4
