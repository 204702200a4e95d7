class DomainError(ValueError):
    """Input outside the domain where a quantity is defined."""


class SelectionRuleError(ValueError):
    """Dipole selection rule violated (|L - L'| != 1 or m_L changed)."""


class ConfigError(ValueError):
    """Missing, unknown or malformed configuration key."""


class SchemaError(ValueError):
    """Input file does not conform to its documented schema."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SingularFitError(RuntimeError):
    """Normal equations are singular; carries the degenerate parameter pair."""

    def __init__(self, pair):
        super().__init__(f"degenerate parameters: {pair[0]} and {pair[1]}")
        self.pair = pair


class UnderdeterminedFitError(ValueError):
    """Fewer data points than free parameters + 1."""


class UnidentifiedSeriesError(RuntimeError):
    """No integer assignment reproduces the lines within the threshold."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates
