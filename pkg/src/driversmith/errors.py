"""Exception taxonomy shared across the package."""

from __future__ import annotations


class DriversmithError(Exception):
    """Base class for all package errors."""


class ConfigError(DriversmithError):
    """Bad or missing configuration."""


class IngestError(DriversmithError):
    """Malformed or unusable AST dump."""


class UnknownApiName(DriversmithError):
    """An API name was requested that the library model does not know."""


class OversizedContext(DriversmithError):
    """Prompt context cannot fit the token budget even without padding."""


class PromptTooLong(DriversmithError):
    """Prompt exceeds the largest model's context window."""


class BudgetExhausted(DriversmithError):
    """Spending cap reached; raised before the call that would overrun."""


class BackendError(DriversmithError):
    """Generation backend failed after retries."""


class AnalysisError(DriversmithError):
    """Program analysis could not process a source file."""


class BuildFailed(DriversmithError):
    """A compile or link step failed."""

    def __init__(self, message: str, output: str = "") -> None:
        super().__init__(message)
        self.output = output


class ToolchainMissing(DriversmithError):
    """Required external tool is not available."""


class EmptyPivot(DriversmithError):
    """Pivot seed yielded an empty API combination."""


class DuplicateSource(DriversmithError):
    """Candidate program is byte-identical to an admitted seed."""


class UnparseableTrace(DriversmithError):
    """Sanitizer report contains no parseable stack frames."""


class CrossBuildMerge(DriversmithError):
    """Coverage from a different library build was offered to the bank."""
