"""Exception hierarchy shared by all modules."""


class CausalPairsError(Exception):
    """Base class for every error raised by this package."""


class InputError(CausalPairsError):
    """Base class for problems with user-supplied data or configuration."""


class ParseError(InputError):
    """Malformed row in an input file; carries the 1-based line number."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class ConsistencyError(InputError):
    """Ids do not align across the pairs/info/target files."""


class ValidationError(InputError):
    """A value violates a domain invariant."""


class ConfigurationError(InputError):
    """An operation was configured outside its legal parameter range."""


class ShapeError(CausalPairsError):
    """Array shapes do not conform; message names both shapes."""


class TrainingError(CausalPairsError):
    """Training failed (non-finite loss or gradient); names the location."""


class UndefinedMetricError(CausalPairsError):
    """A metric is undefined for the given inputs (e.g. one-class AUC)."""
