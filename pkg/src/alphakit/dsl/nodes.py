"""AST node types for the feature expression language.

Nodes are plain frozen dataclasses so structural equality is free.
Constructors deliberately accept invalid parameters (negative lags,
min_periods > window, ...): static validation is the checker's job and it
must be able to report every violation with a node path.
"""
from __future__ import annotations

from dataclasses import dataclass

UNARY_OPS = ("neg", "abs", "log", "sqrt")
BINARY_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Expr:
    def children(self) -> tuple["Expr", ...]:
        return ()


@dataclass(frozen=True)
class ColumnRef(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Lag(Expr):
    operand: Expr
    periods: int

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Rolling(Expr):
    """Trailing-window statistic over the security's own rows.

    stat in {mean, std, min, max}. ``sample`` selects ddof=1 for std
    (default is population variance).
    """

    stat: str
    operand: Expr
    window: int
    min_periods: int
    sample: bool = False

    def children(self):
        return (self.operand,)


def rolling_mean(operand: Expr, window: int, min_periods: int | None = None) -> Rolling:
    return Rolling("mean", operand, window, window if min_periods is None else min_periods)


def rolling_std(operand: Expr, window: int, min_periods: int | None = None,
                sample: bool = False) -> Rolling:
    return Rolling("std", operand, window, window if min_periods is None else min_periods, sample)


def rolling_min(operand: Expr, window: int, min_periods: int | None = None) -> Rolling:
    return Rolling("min", operand, window, window if min_periods is None else min_periods)


def rolling_max(operand: Expr, window: int, min_periods: int | None = None) -> Rolling:
    return Rolling("max", operand, window, window if min_periods is None else min_periods)


@dataclass(frozen=True)
class EwmMean(Expr):
    """Recursive exponential mean, smoothing factor 2/(span+1).

    State starts at the first non-missing observation; later missing inputs
    leave the state untouched and emit the held value.
    """

    operand: Expr
    span: int

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class GroupZScore(Expr):
    """Per-security rolling z-score: (x - mean_w(x)) / (std_w(x) + 1e-8).

    The dispersion is the trailing sample standard deviation over ``window``
    observations (full window required), with the additive epsilon guard in
    the denominator, so the node never divides by zero.
    """

    operand: Expr
    window: int

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class CsRank(Expr):
    """Per-date percentile rank in (0, 1], average ranks on ties."""

    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class CsZScore(Expr):
    """Per-date z-score with population sigma; zero-variance dates map to 0."""

    operand: Expr

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class FillMissing(Expr):
    operand: Expr
    value: float

    def children(self):
        return (self.operand,)


def walk(expr: Expr, path: str = "root"):
    """Yield (path, node) over the tree, parents before children."""
    yield path, expr
    kids = expr.children()
    if len(kids) == 1:
        yield from walk(kids[0], f"{path}.arg")
    elif len(kids) == 2:
        yield from walk(kids[0], f"{path}.left")
        yield from walk(kids[1], f"{path}.right")


def referenced_columns(expr: Expr) -> set[str]:
    return {node.name for _, node in walk(expr) if isinstance(node, ColumnRef)}


def operation_count(expr: Expr) -> int:
    """Complexity metric: AST nodes excluding ColumnRef and Const."""
    return sum(1 for _, node in walk(expr) if not isinstance(node, (ColumnRef, Const)))
