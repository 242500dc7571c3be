"""Score-to-weights transforms and portfolio accounting.

Books are dollar-neutral with unit leverage per side: winsorized scores
split into positive and negative parts, each side normalized to sum to
one. A date whose scores are all one sign produces no book and is flagged;
the engine never emits a one-sided portfolio.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd

from .panel import DATE_COL, ID_COL, Panel

REBALANCE_STEP = {"daily": 1, "weekly": 5, "monthly": 21}


@dataclass
class WeightBook:
    """Per-date weight vectors linked by date order for turnover."""

    frame: pd.DataFrame  # columns: date, security_id, weight; sorted
    flagged_dates: list[int] = field(default_factory=list)

    def dates(self) -> np.ndarray:
        return self.frame[DATE_COL].unique()

    def by_date(self):
        for date, grp in self.frame.groupby(DATE_COL, sort=True):
            yield int(date), grp[ID_COL].to_numpy(), grp["weight"].to_numpy()

    def weights_at(self, date: int) -> pd.Series:
        grp = self.frame[self.frame[DATE_COL] == date]
        return pd.Series(grp["weight"].to_numpy(), index=grp[ID_COL].to_numpy())

    def to_csv(self, path) -> None:
        from .panel import format_date
        out = self.frame.copy()
        out[DATE_COL] = [format_date(d) for d in out[DATE_COL]]
        out.to_csv(path, index=False, float_format="%.17g")


def _score_frame(scores: pd.DataFrame) -> pd.DataFrame:
    for col in (ID_COL, DATE_COL, "score"):
        if col not in scores.columns:
            raise ValueError(f"score frame needs column {col!r}")
    return scores


def standardize_and_winsorize(scores: pd.DataFrame, clip: float = 3.0) -> pd.DataFrame:
    """Per-date z-score (population sigma) clamped to [-clip, clip].

    Zero-variance dates (including single-name dates) map to all zeros.
    """
    scores = _score_frame(scores).copy()
    values = scores["score"].to_numpy(dtype=float).copy()
    dates = scores[DATE_COL].to_numpy()
    for _, rows in _group_rows(dates):
        v = values[rows]
        finite = np.isfinite(v)
        if not finite.any():
            continue
        vals = v[finite]
        std = vals.std()
        z = np.zeros_like(vals) if std == 0.0 else (vals - vals.mean()) / std
        v[finite] = np.clip(z, -clip, clip)
        values[rows] = v
    scores["score"] = values
    return scores


def _group_rows(keys: np.ndarray):
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
    bounds = np.r_[starts, len(keys)]
    for k in range(len(starts)):
        yield sorted_keys[starts[k]], order[bounds[k]:bounds[k + 1]]


def long_short_weights(values: np.ndarray) -> np.ndarray | None:
    """Positive/negative-part weight map; None when either side is empty."""
    v = np.where(np.isfinite(values), values, 0.0)
    pos = np.clip(v, 0.0, None)
    neg = np.clip(-v, 0.0, None)
    pos_sum = pos.sum()
    neg_sum = neg.sum()
    if pos_sum <= 0.0 or neg_sum <= 0.0:
        return None
    return pos / pos_sum - neg / neg_sum


def weights_from_scores(scores: pd.DataFrame, rebalance: str = "daily") -> WeightBook:
    """Build the dollar-neutral book from winsorized scores.

    Rebalance frequencies hold weights between rebalance dates without
    renormalizing drift; weekly/monthly step 5/21 trading dates over the
    score calendar. One-sided or all-zero dates are flagged and emit
    nothing (weights from the previous rebalance keep applying on hold
    dates regardless).
    """
    step = REBALANCE_STEP[rebalance]
    scores = _score_frame(scores)
    dates = np.unique(scores[DATE_COL].to_numpy())
    rebalance_dates = set(dates[::step].tolist())
    by_date = {int(d): grp for d, grp in scores.groupby(DATE_COL, sort=True)}

    rows = []
    flagged: list[int] = []
    held: pd.DataFrame | None = None
    for date in dates:
        date = int(date)
        if date in rebalance_dates:
            grp = by_date[date]
            w = long_short_weights(grp["score"].to_numpy(dtype=float))
            if w is None:
                flagged.append(date)
                held = None
                continue
            mask = w != 0.0
            held = pd.DataFrame({ID_COL: grp[ID_COL].to_numpy()[mask], "weight": w[mask]})
        if held is not None:
            rows.append(held.assign(**{DATE_COL: date}))
    if rows:
        frame = pd.concat(rows, ignore_index=True)[[DATE_COL, ID_COL, "weight"]]
        frame = frame.sort_values([DATE_COL, ID_COL], kind="stable").reset_index(drop=True)
    else:
        frame = pd.DataFrame(columns=[DATE_COL, ID_COL, "weight"])
    return WeightBook(frame, flagged)


def smooth_scores(scores: pd.DataFrame, window: int) -> pd.DataFrame:
    """Trailing per-security moving average of raw scores (min 1 obs).

    Applied to raw predictions before any cross-sectional standardization.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    scores = _score_frame(scores)
    if window == 1:
        return scores.copy()
    out = scores.sort_values([ID_COL, DATE_COL], kind="stable").reset_index(drop=True)
    values = out["score"].to_numpy(dtype=float)
    ids = out[ID_COL].to_numpy()
    smoothed = np.empty_like(values)
    starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
    bounds = np.r_[starts, len(ids)]
    for k in range(len(starts)):
        sl = slice(int(bounds[k]), int(bounds[k + 1]))
        v = values[sl]
        finite = np.isfinite(v)
        total = np.cumsum(np.where(finite, v, 0.0))
        count = np.cumsum(finite.astype(np.int64))
        if len(v) > window:
            total[window:] -= total.copy()[:-window]
            count[window:] -= count.copy()[:-window]
        with np.errstate(invalid="ignore", divide="ignore"):
            smoothed[sl] = np.where(count > 0, total / count, np.nan)
    out["score"] = smoothed
    return out


def ensemble_scores(score_frames: list[pd.DataFrame]) -> pd.DataFrame:
    """Equal-weight mean per (security, date) over the inputs where present.

    Inputs are expected to be standardized already; a cell missing from
    some inputs averages over the ones that have it.
    """
    if not score_frames:
        raise ValueError("ensemble needs at least one score frame")
    merged = pd.concat([_score_frame(f)[[ID_COL, DATE_COL, "score"]] for f in score_frames],
                       ignore_index=True)
    out = (merged.groupby([ID_COL, DATE_COL], sort=True)["score"]
           .mean().reset_index())
    return out


class PortfolioReturns(NamedTuple):
    returns: pd.Series  # indexed by date ordinal
    missing_return_count: pd.Series


def portfolio_returns(book: WeightBook, panel: Panel, return_column: str) -> PortfolioReturns:
    """R_t = sum_i w_{i,t} * r_{i,t} using the given forward-return column.

    Names with a missing return contribute zero and are counted per date.
    """
    panel.require_columns([return_column])
    lookup = pd.Series(
        panel.column(return_column),
        index=pd.MultiIndex.from_arrays([panel.frame[ID_COL], panel.frame[DATE_COL]]),
    )
    dates, totals, missing = [], [], []
    for date, ids, weights in book.by_date():
        idx = pd.MultiIndex.from_arrays([ids, np.full(len(ids), date)])
        rets = lookup.reindex(idx).to_numpy()
        absent = ~np.isfinite(rets)
        totals.append(float(np.where(absent, 0.0, rets * weights).sum()))
        missing.append(int(absent.sum()))
        dates.append(date)
    return PortfolioReturns(pd.Series(totals, index=dates, dtype=float),
                            pd.Series(missing, index=dates, dtype=int))
