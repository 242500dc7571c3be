"""Static point-in-time validation of feature expressions.

Everything here is syntactic: non-negative lags, sane window bounds, and
references only to declared columns. An expression that passes is safe to
evaluate without look-ahead by construction of the evaluator's operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .nodes import (BINARY_OPS, UNARY_OPS, Binary, ColumnRef, Const, CsRank,
                    CsZScore, EwmMean, Expr, FillMissing, GroupZScore, Lag,
                    Rolling, Unary, walk)


@dataclass
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.passed:
            return "PASS"
        return "FAIL\n" + "\n".join(f"  {v}" for v in self.violations)


def check_point_in_time(expr: Expr, columns: set[str] | None = None) -> ValidationReport:
    """Validate one expression; ``columns`` is the declared panel schema.

    Returns a report listing every violation with its node path; never raises.
    """
    report = ValidationReport()

    def fail(path: str, message: str) -> None:
        report.violations.append(Violation(path, message))

    for path, node in walk(expr):
        if isinstance(node, ColumnRef):
            if columns is not None and node.name not in columns:
                fail(path, f"unknown column {node.name!r}")
        elif isinstance(node, Const):
            if not math.isfinite(node.value):
                fail(path, "non-finite constant")
        elif isinstance(node, Unary):
            if node.op not in UNARY_OPS:
                fail(path, f"unknown unary op {node.op!r}")
        elif isinstance(node, Binary):
            if node.op not in BINARY_OPS:
                fail(path, f"unknown binary op {node.op!r}")
        elif isinstance(node, Lag):
            if node.periods < 0:
                fail(path, f"negative lag {node.periods}")
        elif isinstance(node, Rolling):
            if node.window < 1:
                fail(path, f"window {node.window} must be >= 1")
            if node.min_periods < 1:
                fail(path, f"min_periods {node.min_periods} must be >= 1")
            elif node.window >= 1 and node.min_periods > node.window:
                fail(path, f"min_periods {node.min_periods} exceeds window {node.window}")
        elif isinstance(node, EwmMean):
            if node.span < 1:
                fail(path, f"span {node.span} must be >= 1")
        elif isinstance(node, GroupZScore):
            if node.window < 1:
                fail(path, f"window {node.window} must be >= 1")
        elif isinstance(node, (CsRank, CsZScore)):
            pass
        elif isinstance(node, FillMissing):
            if not math.isfinite(node.value):
                fail(path, "non-finite fill value")
        else:
            fail(path, f"unknown node type {type(node).__name__}")
    return report
