"""Exact Diophantine tools, slit-tree constructions and flow simulation on the
double torus glued along a slit."""

from .errors import (
    BudgetExceeded,
    DegenerateError,
    Infeasible,
    InsufficientLines,
    NotFoundAtCap,
    NumericsError,
    PreconditionViolation,
    ScheduleInfeasible,
    SingularOrbit,
    SlitflowError,
    UndecidableError,
)
from .numerics import L1, L2, SUP, Ordering, Verdict, compare, enclose, format_real, parse_real, quadratic, rational

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "DegenerateError",
    "Infeasible",
    "InsufficientLines",
    "L1",
    "L2",
    "NotFoundAtCap",
    "NumericsError",
    "Ordering",
    "PreconditionViolation",
    "SUP",
    "ScheduleInfeasible",
    "SingularOrbit",
    "SlitflowError",
    "UndecidableError",
    "Verdict",
    "compare",
    "enclose",
    "format_real",
    "parse_real",
    "quadratic",
    "rational",
]
