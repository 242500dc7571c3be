"""Feature expression evaluator.

Point-in-time by construction: time-series operators see only the trailing
window of the security's own rows, cross-sectional operators see only the
same date. All kernels are written directly against numpy (no pandas
rolling/ewm), so test oracles built on pandas stay an independent route.

Missing-value policy: NaN propagates through arithmetic; any non-finite
arithmetic result (division by zero, log of a non-positive value, ...)
becomes NaN; nothing is imputed unless the expression itself says so via
``fillna``.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..panel import Panel
from .checker import check_point_in_time
from .nodes import (Binary, ColumnRef, Const, CsRank, CsZScore, EwmMean,
                    Expr, FillMissing, GroupZScore, Lag, Rolling, Unary)


class FeatureError(ValueError):
    """Expression failed static validation or references missing columns."""


def evaluate(expr: Expr, panel: Panel, *, validate: bool = True) -> np.ndarray:
    """Evaluate ``expr`` to one float per panel row (NaN = missing)."""
    if validate:
        report = check_point_in_time(expr, columns=set(panel.frame.columns))
        if not report.passed:
            raise FeatureError(str(report))
    return _eval(expr, panel)


def _clean(values: np.ndarray) -> np.ndarray:
    values[~np.isfinite(values)] = np.nan
    return values


def _eval(expr: Expr, panel: Panel) -> np.ndarray:
    if isinstance(expr, ColumnRef):
        return panel.column(expr.name).copy()
    if isinstance(expr, Const):
        return np.full(len(panel), float(expr.value))
    if isinstance(expr, Unary):
        x = _eval(expr.operand, panel)
        with np.errstate(all="ignore"):
            if expr.op == "neg":
                return -x
            if expr.op == "abs":
                return np.abs(x)
            if expr.op == "log":
                out = np.where(x > 0, x, np.nan)
                return _clean(np.log(out))
            if expr.op == "sqrt":
                out = np.where(x >= 0, x, np.nan)
                return _clean(np.sqrt(out))
        raise FeatureError(f"unknown unary op {expr.op!r}")
    if isinstance(expr, Binary):
        left = _eval(expr.left, panel)
        right = _eval(expr.right, panel)
        with np.errstate(all="ignore"):
            if expr.op == "+":
                return _clean(left + right)
            if expr.op == "-":
                return _clean(left - right)
            if expr.op == "*":
                return _clean(left * right)
            if expr.op == "/":
                return _clean(np.where(right == 0, np.nan, left / right))
        raise FeatureError(f"unknown binary op {expr.op!r}")
    if isinstance(expr, Lag):
        x = _eval(expr.operand, panel)
        return _per_security(panel, x, lambda s: _lag(s, expr.periods))
    if isinstance(expr, Rolling):
        x = _eval(expr.operand, panel)
        return _per_security(
            panel, x,
            lambda s: _rolling(s, expr.stat, expr.window, expr.min_periods, expr.sample))
    if isinstance(expr, EwmMean):
        x = _eval(expr.operand, panel)
        alpha = 2.0 / (expr.span + 1.0)
        return _per_security(panel, x, lambda s: _ewm(s, alpha))
    if isinstance(expr, GroupZScore):
        x = _eval(expr.operand, panel)

        def zscore(s: np.ndarray) -> np.ndarray:
            mean = _rolling(s, "mean", expr.window, expr.window, False)
            std = _rolling(s, "std", expr.window, expr.window, True)
            return (s - mean) / (std + 1e-8)

        return _per_security(panel, x, zscore)
    if isinstance(expr, CsRank):
        x = _eval(expr.operand, panel)
        return _per_date(panel, x, _pct_ranks)
    if isinstance(expr, CsZScore):
        x = _eval(expr.operand, panel)
        return _per_date(panel, x, _cross_z)
    if isinstance(expr, FillMissing):
        x = _eval(expr.operand, panel)
        x[np.isnan(x)] = float(expr.value)
        return x
    raise FeatureError(f"unknown node type {type(expr).__name__}")


# -- per-security kernels ----------------------------------------------------


def _per_security(panel: Panel, values: np.ndarray, fn) -> np.ndarray:
    out = np.full(len(panel), np.nan)
    for _, sl in panel.security_slices():
        out[sl] = fn(values[sl])
    return out


def _lag(x: np.ndarray, periods: int) -> np.ndarray:
    if periods == 0:
        return x.copy()
    out = np.full(len(x), np.nan)
    if periods < len(x):
        out[periods:] = x[:-periods]
    return out


def _rolling(x: np.ndarray, stat: str, window: int, min_periods: int,
             sample: bool) -> np.ndarray:
    n = len(x)
    out = np.full(n, np.nan)
    if n == 0:
        return out
    padded = np.concatenate([np.full(window - 1, np.nan), x])
    win = sliding_window_view(padded, window)
    finite = np.isfinite(win)
    count = finite.sum(axis=1)
    ok = count >= min_periods
    if stat == "min":
        vals = np.where(finite, win, np.inf).min(axis=1)
        out[ok] = vals[ok]
        return out
    if stat == "max":
        vals = np.where(finite, win, -np.inf).max(axis=1)
        out[ok] = vals[ok]
        return out
    total = np.where(finite, win, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = total / count
    if stat == "mean":
        out[ok] = mean[ok]
        return out
    if stat == "std":
        dev = np.where(finite, win - mean[:, None], 0.0)
        ss = (dev * dev).sum(axis=1)
        denom = count - 1 if sample else count
        ok = ok & (denom > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            var = ss / denom
        out[ok] = np.sqrt(var[ok])
        return out
    raise FeatureError(f"unknown rolling stat {stat!r}")


def _ewm(x: np.ndarray, alpha: float) -> np.ndarray:
    out = np.full(len(x), np.nan)
    state = np.nan
    for i, v in enumerate(x):
        if np.isfinite(v):
            state = v if np.isnan(state) else (1.0 - alpha) * state + alpha * v
        out[i] = state
    return out


# -- per-date kernels --------------------------------------------------------


def _per_date(panel: Panel, values: np.ndarray, fn) -> np.ndarray:
    out = np.full(len(panel), np.nan)
    for _, rows in panel.date_groups():
        out[rows] = fn(values[rows])
    return out


def average_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks with ties mapped to their average rank."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    new_group = np.r_[True, sv[1:] != sv[:-1]]
    first = np.flatnonzero(new_group)
    counts = np.diff(np.r_[first, len(sv)])
    avg = first + (counts + 1) / 2.0
    ranks = np.empty(len(v))
    ranks[order] = avg[np.cumsum(new_group) - 1]
    return ranks


def _pct_ranks(v: np.ndarray) -> np.ndarray:
    out = np.full(len(v), np.nan)
    finite = np.isfinite(v)
    n = int(finite.sum())
    if n == 0:
        return out
    out[finite] = average_ranks(v[finite]) / n
    return out


def _cross_z(v: np.ndarray) -> np.ndarray:
    out = np.full(len(v), np.nan)
    finite = np.isfinite(v)
    if not finite.any():
        return out
    vals = v[finite]
    std = vals.std()
    out[finite] = 0.0 if std == 0.0 else (vals - vals.mean()) / std
    return out
