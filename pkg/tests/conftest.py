from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from alphakit.dsl.nodes import (Binary, ColumnRef, Const, CsRank, CsZScore,
                                EwmMean, FillMissing, GroupZScore, Lag,
                                Rolling, Unary)
from alphakit.panel import Panel

BASE_DATE = 737060  # 2019-01-01


def make_panel(records, columns=None) -> Panel:
    """Panel from (security_id, date_offset, value...) tuples."""
    columns = columns or ["x"]
    rows = []
    for rec in records:
        sid, off, *vals = rec
        row = {"security_id": sid, "date": BASE_DATE + off}
        row.update(dict(zip(columns, vals)))
        rows.append(row)
    return Panel(pd.DataFrame(rows))


def grid_panel(n_securities, n_days, columns, rng, *, missing_frac=0.0) -> Panel:
    """Dense random panel: every security trades every day."""
    sids = [f"S{i:03d}" for i in range(n_securities)]
    frames = []
    for sid in sids:
        data = {"security_id": sid, "date": BASE_DATE + np.arange(n_days)}
        for col in columns:
            vals = rng.normal(size=n_days)
            if missing_frac > 0:
                mask = rng.random(n_days) < missing_frac
                vals = np.where(mask, np.nan, vals)
            data[col] = vals
        frames.append(pd.DataFrame(data))
    return Panel(pd.concat(frames, ignore_index=True))


# -- random expression generator (always checker-clean) ----------------------

_WINDOWS = (2, 3, 5, 10, 21)


def random_expr(rng: np.random.Generator, columns: list[str], depth: int):
    if depth <= 0:
        if rng.random() < 0.85:
            return ColumnRef(columns[rng.integers(len(columns))])
        return Const(float(np.round(rng.normal(), 3)))
    kind = rng.choice([
        "unary", "binary", "lag", "rolling", "ewm", "groupz",
        "csrank", "cszscore", "fillna", "leaf",
    ], p=[0.08, 0.22, 0.10, 0.20, 0.08, 0.08, 0.10, 0.06, 0.04, 0.04])
    if kind == "leaf":
        return random_expr(rng, columns, 0)
    if kind == "unary":
        op = str(rng.choice(["neg", "abs", "log", "sqrt"]))
        return Unary(op, random_expr(rng, columns, depth - 1))
    if kind == "binary":
        op = str(rng.choice(["+", "-", "*", "/"]))
        return Binary(op, random_expr(rng, columns, depth - 1),
                      random_expr(rng, columns, depth - 1))
    if kind == "lag":
        return Lag(random_expr(rng, columns, depth - 1), int(rng.integers(0, 6)))
    if kind == "rolling":
        stat = str(rng.choice(["mean", "std", "min", "max"]))
        window = int(rng.choice(_WINDOWS))
        min_periods = int(rng.integers(1, window + 1))
        sample = bool(rng.random() < 0.5) if stat == "std" else False
        return Rolling(stat, random_expr(rng, columns, depth - 1), window, min_periods, sample)
    if kind == "ewm":
        return EwmMean(random_expr(rng, columns, depth - 1), int(rng.choice([2, 3, 5, 10])))
    if kind == "groupz":
        return GroupZScore(random_expr(rng, columns, depth - 1), int(rng.choice([3, 5, 10])))
    if kind == "csrank":
        return CsRank(random_expr(rng, columns, depth - 1))
    if kind == "cszscore":
        return CsZScore(random_expr(rng, columns, depth - 1))
    return FillMissing(random_expr(rng, columns, depth - 1), float(np.round(rng.normal(), 2)))


def corpus_panel(n_securities=20, n_days=100, seed=2024) -> Panel:
    """Synthetic vendor-style panel carrying every column the bundled
    feature corpus reads: prices, returns, quote midpoints, analyst fields,
    and option-flow fields. Values are O(1) and continuous."""
    rng = np.random.default_rng(seed)
    frames = []
    for i in range(n_securities):
        sid = f"S{i:03d}"
        rets = rng.normal(0.0, 0.02, size=n_days)
        close = 50.0 * np.exp(np.cumsum(rets))
        log_ret = np.r_[np.nan, np.diff(np.log(close))]
        mid = close * (1.0 + rng.normal(0.0, 0.001, size=n_days))
        prev_midpoint = np.r_[np.nan, mid[:-1]]
        eps_fq6 = rng.normal(0.0, 1.0, size=n_days)
        sal_fq6 = rng.normal(0.0, 1.0, size=n_days)
        sal_fq1 = rng.normal(0.0, 1.0, size=n_days)
        for arr in (eps_fq6, sal_fq6, sal_fq1):
            arr[rng.random(n_days) < 0.05] = np.nan
        frames.append(pd.DataFrame({
            "security_id": sid,
            "date": BASE_DATE + np.arange(n_days),
            "close": close,
            "prev_midpoint": prev_midpoint,
            "returns": log_ret,
            "truebeat_eps_fq6": eps_fq6,
            "truebeat_sal_fq6": sal_fq6,
            "truebeat_sal_fq1": sal_fq1,
            "adcallvolume": np.exp(rng.normal(0.0, 0.8, size=n_days)),
            "putcallgammaimbalanceratio": rng.normal(0.0, 1.0, size=n_days),
            "number_of_analysts_fq1": rng.integers(1, 30, size=n_days).astype(float),
        }))
    return Panel(pd.concat(frames, ignore_index=True))


def nan_equal(a: np.ndarray, b: np.ndarray) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all((a == b) | (np.isnan(a) & np.isnan(b))))
