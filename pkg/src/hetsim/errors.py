"""Exception types and process exit codes shared across the package."""

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class SimError(Exception):
    """Base class for simulator-specific failures."""


class ConfigError(SimError):
    """Bad configuration input; carries the offending key and source location."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        parts = [message]
        if key is not None:
            parts.append(f"key={key!r}")
        if line is not None:
            parts.append(f"line={line}")
        super().__init__(" | ".join(parts))


class GenerationError(SimError):
    """Topology generation failed (e.g. small cells cannot be packed)."""


class NumericError(SimError):
    """A numerical routine failed to converge or produced invalid values."""


class OracleError(SimError):
    """A closed-form oracle was asked for a singular or infeasible system."""
