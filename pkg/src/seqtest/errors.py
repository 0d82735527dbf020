"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto its exit codes: ConfigError -> 2,
InfeasibleDesignError -> 3, NumericError -> 4.
"""


class SeqtestError(Exception):
    """Base class for library errors."""


class ConfigError(SeqtestError):
    """A configuration value is missing, malformed, or out of range."""


class InfeasibleDesignError(SeqtestError):
    """The requested detection design has no solution in the admissible range."""


class NumericError(SeqtestError):
    """An iterative routine failed to reach its tolerance."""
