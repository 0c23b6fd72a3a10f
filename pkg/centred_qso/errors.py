#!/usr/bin/env python
# coding: utf-8

"""Exception hierarchy shared by the engine, the samplers and the CLI."""

from typing import Any, Dict, Optional


class QSOValidationError(ValueError):
    """Input rejected before any computation started (CLI exit code 2)."""

    def diagnostic(self) -> Dict[str, Any]:
        return {"kind": type(self).__name__, "message": str(self)}


class InvalidSpecError(QSOValidationError):
    pass


class InvalidGridError(QSOValidationError):
    pass


class InvalidPopulationError(QSOValidationError):
    pass


class DomainError(QSOValidationError):
    pass


class BudgetInapplicableError(QSOValidationError):
    pass


class FeasibilityError(QSOValidationError):
    """Exact drawing would need more random draws than the guard allows."""

    def __init__(self, message: str, estimated_draws: int) -> None:
        super().__init__(message)
        self.estimated_draws = estimated_draws

    def diagnostic(self) -> Dict[str, Any]:
        report = super().diagnostic()
        report["estimated_draws"] = self.estimated_draws
        return report


class NumericFailure(ArithmeticError):
    """Numerical routine failed to deliver the requested accuracy (exit code 3)."""

    def diagnostic(self) -> Dict[str, Any]:
        return {"kind": type(self).__name__, "message": str(self)}


class QuadratureError(NumericFailure):
    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual

    def diagnostic(self) -> Dict[str, Any]:
        report = super().diagnostic()
        report["residual"] = self.residual
        return report


class NonConvergenceError(NumericFailure):
    def __init__(
        self, message: str, last_increment: float, depth: Optional[int] = None
    ) -> None:
        super().__init__(message)
        self.last_increment = last_increment
        self.depth = depth

    def diagnostic(self) -> Dict[str, Any]:
        report = super().diagnostic()
        report["last_increment"] = self.last_increment
        report["depth"] = self.depth
        return report
