from __future__ import annotations
from typing import Any, Optional


class SinksimError(RuntimeError):
    """Base for every failure the CLI turns into an exit code."""

    exit_code = 1


class ConfigError(SinksimError):
    exit_code = 2

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        self.detail = message
        super().__init__(f"{path}: {message}" if path else message)


class InvalidMaterialError(ConfigError):
    pass


class InputFileError(SinksimError):
    exit_code = 2


class SettleTimeoutError(SinksimError):
    exit_code = 3


class StabilityError(SinksimError):
    """A run went numerically wrong. Carries where and when it happened."""

    exit_code = 4

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        time: Optional[float] = None,
        phase: str = "",
    ) -> None:
        self.message = message
        self.step = step
        self.time = time
        self.phase = phase
        # samples recorded before the failure, attached by the scenario runner
        self.partial_record: Optional[Any] = None
        where = []
        if phase:
            where.append(f"phase={phase}")
        if step is not None:
            where.append(f"step={step}")
        if time is not None:
            where.append(f"t={time:.6g}s")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class IntegrationFault(StabilityError):
    pass


class DomainEscapeError(StabilityError):
    pass


class TunnelingError(StabilityError):
    pass


class ModelFaultError(StabilityError):
    pass


class AnalysisError(SinksimError):
    exit_code = 5


class FitError(AnalysisError):
    pass


class ComparisonError(AnalysisError):
    pass


def with_context(err: StabilityError, time: float, phase: str) -> StabilityError:
    """Return a copy of `err` with simulated time and phase filled in."""
    out = type(err)(err.message, step=err.step, time=time, phase=err.phase or phase)
    out.partial_record = err.partial_record
    return out
