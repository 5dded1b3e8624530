"""Typed failures; every class carries a stable machine-readable ``code``."""

from __future__ import annotations


class SlitflowError(Exception):
    code = "error"


class NumericsError(SlitflowError):
    code = "numerics-error"


class BudgetExceeded(NumericsError):
    code = "budget-exceeded"


class UndecidableError(NumericsError):
    code = "undecidable-at-budget"


class PreconditionViolation(SlitflowError, ValueError):
    code = "precondition-violation"


class DegenerateError(SlitflowError, ValueError):
    code = "degenerate"


class ScheduleInfeasible(SlitflowError):
    code = "schedule-infeasible"


class NotFoundAtCap(SlitflowError):
    code = "not-found-at-cap"


class InsufficientLines(SlitflowError):
    code = "insufficient-lines"


class SingularOrbit(SlitflowError):
    code = "singular-orbit"


class Infeasible(SlitflowError, ValueError):
    code = "infeasible"
