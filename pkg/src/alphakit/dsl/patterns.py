"""Syntactic pattern analysis over a feature corpus.

Classification rules (documented in docs/dsl.md):

- cross_sectional_rank: tree contains a per-date operator (cs_rank or
  cs_zscore).
- regime_normalization: some division has a rolling dispersion
  (rolling_std) inside its denominator.
- variable_interaction: some '*' or '/' combines subtrees that both read
  columns and whose column sets differ (different underlying variables).
- multi_timeframe: some arithmetic node combines two trailing means
  (rolling_mean / ewm_mean) with different window lengths.
- outlier_zscore: tree contains a per-security rolling z (group_zscore).
- momentum_adjustment: some division has a trailing mean in the numerator
  and a rolling dispersion in the denominator.

Window histogram buckets: 5, 10, 20-21, 60, other; fractions over all
window/span specifications used in the corpus.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .nodes import (Binary, CsRank, CsZScore, EwmMean, Expr, GroupZScore,
                    Rolling, operation_count, referenced_columns, walk)

WINDOW_BUCKETS = ("5", "10", "20-21", "60", "other")

PATTERNS = (
    "cross_sectional_rank",
    "regime_normalization",
    "variable_interaction",
    "multi_timeframe",
    "outlier_zscore",
    "momentum_adjustment",
)


@dataclass
class PatternStats:
    n_features: int
    operation_counts: list[int]
    prevalence: dict[str, float]
    window_histogram: dict[str, float]
    window_count: int

    @property
    def mean_operations(self) -> float:
        return sum(self.operation_counts) / len(self.operation_counts)

    @property
    def median_operations(self) -> float:
        ordered = sorted(self.operation_counts)
        n = len(ordered)
        mid = n // 2
        return float(ordered[mid]) if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2.0


def _windows(expr: Expr) -> list[int]:
    out = []
    for _, node in walk(expr):
        if isinstance(node, Rolling):
            out.append(node.window)
        elif isinstance(node, EwmMean):
            out.append(node.span)
        elif isinstance(node, GroupZScore):
            out.append(node.window)
    return out


def _contains(expr: Expr, kinds) -> bool:
    return any(isinstance(node, kinds) for _, node in walk(expr))


def _mean_windows(expr: Expr) -> set[int]:
    out = set()
    for _, node in walk(expr):
        if isinstance(node, Rolling) and node.stat == "mean":
            out.add(node.window)
        elif isinstance(node, EwmMean):
            out.add(node.span)
    return out


def classify(expr: Expr) -> dict[str, bool]:
    """Per-feature boolean flags for each pattern."""
    flags = dict.fromkeys(PATTERNS, False)
    flags["cross_sectional_rank"] = _contains(expr, (CsRank, CsZScore))
    flags["outlier_zscore"] = _contains(expr, GroupZScore)
    for _, node in walk(expr):
        if not isinstance(node, Binary):
            continue
        if node.op == "/":
            if _contains(node.right, Rolling) and any(
                    isinstance(n, Rolling) and n.stat == "std"
                    for _, n in walk(node.right)):
                flags["regime_normalization"] = True
                if any(isinstance(n, (EwmMean, Rolling)) and getattr(n, "stat", "mean") == "mean"
                       for _, n in walk(node.left)):
                    flags["momentum_adjustment"] = True
        if node.op in ("*", "/"):
            left_cols = referenced_columns(node.left)
            right_cols = referenced_columns(node.right)
            if left_cols and right_cols and left_cols != right_cols:
                flags["variable_interaction"] = True
        left_means = _mean_windows(node.left)
        right_means = _mean_windows(node.right)
        if left_means and right_means and left_means != right_means:
            flags["multi_timeframe"] = True
    return flags


def _bucket(window: int) -> str:
    if window == 5:
        return "5"
    if window == 10:
        return "10"
    if window in (20, 21):
        return "20-21"
    if window == 60:
        return "60"
    return "other"


def analyze_patterns(corpus: list[Expr]) -> PatternStats:
    """Deterministic corpus-level pattern statistics."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    counts = dict.fromkeys(PATTERNS, 0)
    windows: list[int] = []
    op_counts = []
    for expr in corpus:
        for name, hit in classify(expr).items():
            counts[name] += int(hit)
        windows.extend(_windows(expr))
        op_counts.append(operation_count(expr))
    prevalence = {name: counts[name] / len(corpus) for name in PATTERNS}
    histogram = dict.fromkeys(WINDOW_BUCKETS, 0.0)
    for w in windows:
        histogram[_bucket(w)] += 1.0
    if windows:
        histogram = {k: v / len(windows) for k, v in histogram.items()}
    # report only buckets that are used
    histogram = {k: v for k, v in histogram.items() if v > 0}
    return PatternStats(
        n_features=len(corpus),
        operation_counts=op_counts,
        prevalence=prevalence,
        window_histogram=histogram,
        window_count=len(windows),
    )
