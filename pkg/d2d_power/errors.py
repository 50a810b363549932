"""Exceptions raised by the library"""

from typing import Any


class D2DPowerError(Exception):
    """Base class for all library errors"""


class InputError(D2DPowerError, ValueError):
    """Problem instance or argument violates a precondition"""


class ConfigurationError(D2DPowerError, ValueError):
    """Experiment configuration could not be parsed or validated"""

    def __init__(self, message: str, findings: list[Any] | None = None) -> None:
        super().__init__(message)
        self.findings: list[Any] = findings or []
        """Validation findings collected while checking the configuration"""

    def __str__(self) -> str:
        lines = [super().__str__()]
        for finding in self.findings:
            lines.append(f"  {finding}")
        return "\n".join(lines)


class NumericalError(D2DPowerError, RuntimeError):
    """Iterative numerical procedure failed to reach its tolerance"""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics: dict[str, Any] = diagnostics or {}
        """Solver state at the time of failure"""
