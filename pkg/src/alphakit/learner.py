"""Feature standardization and walk-forward model estimation.

The walk-forward loop partitions the evaluation window into refit blocks.
A block's model trains only on rows whose feature date precedes the block
and whose target return is realized strictly before the block's first test
date, so no training row's forward-return window can overlap the dates it
is scored on.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from ._seeds import child_seeds
from .boosting import BoostedTreeRegressor
from .panel import (DATE_COL, ID_COL, Panel, forward_return,
                    forward_return_column, forward_target_dates)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoostParams:
    n_trees: int = 50
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf_count: int = 20
    l2_leaf_penalty: float = 1.0
    subsample_fraction: float = 1.0
    seed: int = 0

    def estimator(self, seed: int | None = None) -> BoostedTreeRegressor:
        kwargs = asdict(self)
        if seed is not None:
            kwargs["seed"] = seed
        return BoostedTreeRegressor(**kwargs)


@dataclass(frozen=True)
class WalkForwardSchedule:
    """Refit plan. Dates are day ordinals; refit_interval counts trading dates."""

    train_start: int
    train_end: int
    test_start: int
    test_end: int
    refit_interval: int = 21
    mode: str = "expanding"  # or "rolling"
    rolling_window: int = 0  # trading dates; required for mode="rolling"

    def __post_init__(self) -> None:
        if self.train_end >= self.test_start:
            raise ValueError("train_end must precede test_start")
        if self.train_start > self.train_end:
            raise ValueError("train_start must not exceed train_end")
        if self.test_start > self.test_end:
            raise ValueError("test_start must not exceed test_end")
        if self.refit_interval < 1:
            raise ValueError("refit_interval must be >= 1")
        if self.mode not in ("expanding", "rolling"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "rolling" and self.rolling_window < 1:
            raise ValueError("rolling mode needs rolling_window >= 1")


def standardize_features(panel: Panel, feature_columns: list[str]) -> Panel:
    """Cross-sectionally z-score each column per date (population sigma).

    Zero-variance date/column cells become 0; missing stays missing.
    Columns are replaced in place under the same names.
    """
    panel.require_columns(feature_columns)
    updates = {}
    for name in feature_columns:
        values = panel.column(name).copy()
        for _, rows in panel.date_groups():
            v = values[rows]
            finite = np.isfinite(v)
            if not finite.any():
                continue
            vals = v[finite]
            std = vals.std()
            v[finite] = 0.0 if std == 0.0 else (vals - vals.mean()) / std
            values[rows] = v
        updates[name] = values
    return panel.with_columns(**updates)


def run_walk_forward(panel: Panel, features: list[str], schedule: WalkForwardSchedule,
                     params: BoostParams, horizon_lag: int = 1) -> pd.DataFrame:
    """Fit per refit block, score only test rows.

    Returns a frame (security_id, date, score) covering the evaluation
    window; blocks with an empty purged training set are skipped with a
    warning and emit no scores.
    """
    target_col = forward_return_column(horizon_lag)
    if not panel.has_column(target_col):
        panel = forward_return(panel, horizon_lag)
    panel.require_columns(features)
    dates = panel.dates
    target = panel.column(target_col)
    target_dates = forward_target_dates(panel, horizon_lag)
    X = np.column_stack([panel.column(f) for f in features])

    all_dates = panel.unique_dates()
    test_dates = all_dates[(all_dates >= schedule.test_start) & (all_dates <= schedule.test_end)]
    if len(test_dates) == 0:
        raise ValueError("no panel dates inside the evaluation window")
    blocks = [test_dates[i:i + schedule.refit_interval]
              for i in range(0, len(test_dates), schedule.refit_interval)]
    seeds = child_seeds(params.seed, "walk_forward", len(blocks))

    pieces = []
    for block, block_seed in zip(blocks, seeds):
        block_start = int(block[0])
        lo = schedule.train_start
        if schedule.mode == "rolling":
            prior = all_dates[all_dates < block_start]
            window = prior[-schedule.rolling_window:]
            if len(window) == 0:
                log.warning("walk-forward block at %s skipped: empty rolling window", block_start)
                continue
            lo = int(window[0])
        train = ((dates >= lo) & (dates < block_start)
                 & (target_dates >= 0) & (target_dates < block_start)
                 & np.isfinite(target))
        n_train = int(train.sum())
        if n_train < params.min_leaf_count:
            log.warning("walk-forward block at %s skipped: %d usable training rows",
                        block_start, n_train)
            continue
        model = params.estimator(seed=block_seed).fit(X[train], target[train])
        score_rows = np.isin(dates, block)
        pieces.append(pd.DataFrame({
            ID_COL: panel.security_ids[score_rows],
            DATE_COL: dates[score_rows],
            "score": model.predict(X[score_rows]),
        }))
    if not pieces:
        raise ValueError("every walk-forward block was skipped; nothing scored")
    out = pd.concat(pieces, ignore_index=True)
    return out.sort_values([ID_COL, DATE_COL], kind="stable").reset_index(drop=True)


def load_scores(path) -> pd.DataFrame:
    """External score ingestion: delimited text with security_id, date, score."""
    from .panel import FormatSpec, load_panel
    panel = load_panel(path, FormatSpec(id_column=ID_COL, date_column=DATE_COL,
                                        value_columns={"score": "score"}))
    return panel.frame[[ID_COL, DATE_COL, "score"]].copy()
