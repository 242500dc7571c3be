"""Point-in-time panel store.

A panel is a long-format table keyed by (security_id, date): one row per
security per trading day, numeric columns, NaN for missing. Dates are held
as integer proleptic-Gregorian ordinals; parsing/formatting is an I/O
concern. All operations are pure and return new panels; a security that
does not trade on a date simply has no row, and every shift/window runs on
the security's own trading calendar.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

ID_COL = "security_id"
DATE_COL = "date"


class PanelError(ValueError):
    """Structural problem in panel input data."""


def parse_date(text: str) -> int:
    """ISO 'YYYY-MM-DD' (or a raw integer ordinal) -> day ordinal."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(text).toordinal()
    except ValueError as exc:
        raise PanelError(f"unparseable date {text!r}") from exc


def format_date(ordinal: int) -> str:
    return dt.date.fromordinal(int(ordinal)).isoformat()


@dataclass(frozen=True)
class FormatSpec:
    """Column mapping for delimited-text ingestion."""

    id_column: str
    date_column: str
    # source -> canonical rename for value columns; None keeps all columns as-is
    value_columns: dict[str, str] | None = None
    delimiter: str = ","


@dataclass(frozen=True)
class UniverseSpec:
    """Top-k-by-capitalization universe filter."""

    top_k: int = 2500
    cap_column: str = "cap"
    exclusion_flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


class Panel:
    """Immutable-by-convention long panel, sorted by (security_id, date).

    Invariants enforced on construction: (security_id, date) pairs unique,
    dates strictly increasing within each security. ``meta`` carries
    non-structural bookkeeping (e.g. warning counters) across derivations.
    """

    def __init__(self, frame: pd.DataFrame, *, meta: dict | None = None, copy: bool = True):
        if ID_COL not in frame.columns or DATE_COL not in frame.columns:
            raise PanelError(f"panel frame needs {ID_COL!r} and {DATE_COL!r} columns")
        df = frame.copy() if copy else frame
        df[ID_COL] = df[ID_COL].astype(str)
        df[DATE_COL] = df[DATE_COL].astype(np.int64)
        df = df.sort_values([ID_COL, DATE_COL], kind="stable").reset_index(drop=True)
        dup = df.duplicated([ID_COL, DATE_COL])
        if dup.any():
            i = int(np.flatnonzero(dup.to_numpy())[0])
            raise PanelError(
                f"duplicate (security_id, date) pair "
                f"({df[ID_COL].iat[i]!r}, {format_date(df[DATE_COL].iat[i])})"
            )
        self._frame = df
        self.meta: dict = dict(meta or {})
        self._sec_slices: list[tuple[str, slice]] | None = None
        self._date_groups: list[tuple[int, np.ndarray]] | None = None

    # -- basic access ------------------------------------------------------

    @property
    def frame(self) -> pd.DataFrame:
        """Underlying frame; treat as read-only."""
        return self._frame

    def __len__(self) -> int:
        return len(self._frame)

    @property
    def columns(self) -> list[str]:
        return [c for c in self._frame.columns if c not in (ID_COL, DATE_COL)]

    def has_column(self, name: str) -> bool:
        return name in self._frame.columns

    def require_columns(self, names) -> None:
        missing = [n for n in names if n not in self._frame.columns]
        if missing:
            raise PanelError(f"missing panel columns: {missing}")

    def column(self, name: str) -> np.ndarray:
        self.require_columns([name])
        return self._frame[name].to_numpy(dtype=np.float64, copy=False)

    @property
    def security_ids(self) -> np.ndarray:
        return self._frame[ID_COL].to_numpy()

    @property
    def dates(self) -> np.ndarray:
        return self._frame[DATE_COL].to_numpy()

    def unique_dates(self) -> np.ndarray:
        return np.unique(self.dates)

    def security_slices(self) -> list[tuple[str, slice]]:
        """Contiguous row slice per security (frame is sorted by id, date)."""
        if self._sec_slices is None:
            ids = self.security_ids
            starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
            bounds = np.r_[starts, len(ids)]
            self._sec_slices = [
                (ids[bounds[k]], slice(int(bounds[k]), int(bounds[k + 1])))
                for k in range(len(starts))
            ]
        return self._sec_slices

    def date_groups(self) -> list[tuple[int, np.ndarray]]:
        """Row indices per date, dates ascending."""
        if self._date_groups is None:
            dates = self.dates
            order = np.argsort(dates, kind="stable")
            sorted_dates = dates[order]
            starts = np.flatnonzero(np.r_[True, sorted_dates[1:] != sorted_dates[:-1]])
            bounds = np.r_[starts, len(dates)]
            self._date_groups = [
                (int(sorted_dates[bounds[k]]), order[bounds[k]:bounds[k + 1]])
                for k in range(len(starts))
            ]
        return self._date_groups

    # -- derivation --------------------------------------------------------

    def with_columns(self, **named: np.ndarray) -> "Panel":
        df = self._frame.copy()
        for name, values in named.items():
            if len(values) != len(df):
                raise PanelError(f"column {name!r} has {len(values)} rows, panel has {len(df)}")
            df[name] = np.asarray(values, dtype=np.float64)
        return Panel(df, meta=self.meta, copy=False)

    def select(self, mask: np.ndarray) -> "Panel":
        return Panel(self._frame.loc[np.asarray(mask, dtype=bool)].reset_index(drop=True),
                     meta=self.meta, copy=False)


# -- I/O --------------------------------------------------------------------

_MISSING_TOKENS = {"", "nan", "NaN", "NA", "null", "None"}


def load_panel(path, spec: FormatSpec) -> Panel:
    """Load a delimited text file into a Panel.

    Values are parsed strictly: an unparseable date or number is rejected
    with its row index rather than silently coerced to missing.
    """
    raw = pd.read_csv(path, sep=spec.delimiter, dtype=str, keep_default_na=False)
    for col in (spec.id_column, spec.date_column):
        if col not in raw.columns:
            raise PanelError(f"file {path} lacks required column {col!r}")

    if spec.value_columns is not None:
        missing = [c for c in spec.value_columns if c not in raw.columns]
        if missing:
            raise PanelError(f"file {path} lacks value columns {missing}")
        value_cols = dict(spec.value_columns)
    else:
        value_cols = {c: c for c in raw.columns if c not in (spec.id_column, spec.date_column)}

    out = pd.DataFrame()
    out[ID_COL] = raw[spec.id_column].astype(str)

    dates = np.empty(len(raw), dtype=np.int64)
    cache: dict[str, int] = {}
    for i, text in enumerate(raw[spec.date_column].tolist()):
        if text not in cache:
            try:
                cache[text] = parse_date(text)
            except PanelError as exc:
                raise PanelError(f"row {i}: {exc}") from None
        dates[i] = cache[text]
    out[DATE_COL] = dates

    for src, dst in value_cols.items():
        texts = raw[src].str.strip().tolist()
        parsed = np.empty(len(texts), dtype=np.float64)
        for i, text in enumerate(texts):
            if text in _MISSING_TOKENS:
                parsed[i] = np.nan
                continue
            try:
                parsed[i] = float(text)  # correctly-rounded parse, exact round-trip
            except ValueError:
                raise PanelError(
                    f"row {i}: unparseable number {text!r} in column {src!r}") from None
        out[dst] = parsed

    return Panel(out, copy=False)


def write_panel(panel: Panel, path, *, delimiter: str = ",") -> None:
    """Emit a panel as delimited text; numeric values round-trip exactly."""
    df = panel.frame.copy()
    df[DATE_COL] = [format_date(d) for d in df[DATE_COL]]
    df.to_csv(path, sep=delimiter, index=False, float_format="%.17g")


# -- derived columns ---------------------------------------------------------


def compute_log_returns(panel: Panel, price_column: str) -> Panel:
    """Add per-security log returns as column 'ret'.

    First observation per security is missing. A non-positive price makes
    every return that touches it missing and bumps
    meta['nonpositive_price_returns'] once per affected return cell.
    """
    prices = panel.column(price_column)
    ret = np.full(len(panel), np.nan)
    n_warn = 0
    for _, sl in panel.security_slices():
        p = prices[sl]
        good = np.isfinite(p) & (p > 0)
        bad_price = np.isfinite(p) & ~ (p > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.log(p[1:] / p[:-1])
        valid = good[1:] & good[:-1]
        r[~valid] = np.nan
        ret[sl][1:] = r
        # warn once per return cell invalidated by a non-positive price
        n_warn += int(np.sum((bad_price[1:] | bad_price[:-1])))
    out = panel.with_columns(ret=ret)
    out.meta["nonpositive_price_returns"] = out.meta.get("nonpositive_price_returns", 0) + n_warn
    return out


def forward_return_column(lag: int) -> str:
    return f"fwd_ret_lag{lag}"


def forward_return(panel: Panel, lag: int = 0) -> Panel:
    """Add the lag-N forward target: ret at the security's (t + N + 1)-th row.

    Lag 0 is the next-day return; lag 1 is the one-day-execution-lag target.
    Missing where the security has too few future observations.
    """
    if lag < 0:
        raise ValueError("lag must be >= 0")
    panel.require_columns(["ret"])
    ret = panel.column("ret")
    shift = lag + 1
    target = np.full(len(panel), np.nan)
    for _, sl in panel.security_slices():
        r = ret[sl]
        if len(r) > shift:
            target[sl][: len(r) - shift] = r[shift:]
    return panel.with_columns(**{forward_return_column(lag): target})


def forward_target_dates(panel: Panel, lag: int) -> np.ndarray:
    """Date on which each row's lag-N target return is realized (-1 if none).

    Used by the walk-forward purge: a training row leaks iff its target date
    reaches into the evaluation window.
    """
    dates = panel.dates
    shift = lag + 1
    out = np.full(len(panel), -1, dtype=np.int64)
    for _, sl in panel.security_slices():
        d = dates[sl]
        if len(d) > shift:
            out[sl][: len(d) - shift] = d[shift:]
    return out


def apply_universe_filter(panel: Panel, spec: UniverseSpec) -> Panel:
    """Keep, per date, the top_k securities by capitalization.

    Rows with any exclusion flag set (non-zero) are dropped first, as are
    rows with missing capitalization. Boundary ties break by security_id.
    """
    panel.require_columns([spec.cap_column, *spec.exclusion_flags])
    caps = panel.column(spec.cap_column)
    ids = panel.security_ids
    excluded = np.zeros(len(panel), dtype=bool)
    for flag in spec.exclusion_flags:
        f = panel.column(flag)
        excluded |= np.isfinite(f) & (f != 0)
    keep = np.zeros(len(panel), dtype=bool)
    for _, rows in panel.date_groups():
        rows = rows[~excluded[rows] & np.isfinite(caps[rows])]
        if len(rows) == 0:
            continue
        order = sorted(range(len(rows)), key=lambda k: (-caps[rows[k]], ids[rows[k]]))
        keep[rows[order[: spec.top_k]]] = True
    return panel.select(keep)


def forward_fill_to_daily(scores: pd.DataFrame, calendar: np.ndarray) -> pd.DataFrame:
    """Hold each security's latest score forward across the given calendar.

    ``scores`` has columns (security_id, date, score). Output has one row per
    security per calendar date from the security's first observation onward.
    Dense input comes back unchanged.
    """
    calendar = np.asarray(sorted(set(int(d) for d in calendar)), dtype=np.int64)
    pieces = []
    for sid, grp in scores.groupby(ID_COL, sort=True):
        grp = grp.sort_values(DATE_COL)
        d = grp[DATE_COL].to_numpy(dtype=np.int64)
        v = grp["score"].to_numpy(dtype=np.float64)
        grid = calendar[calendar >= d[0]]
        # most recent observation at or before each grid date
        pos = np.searchsorted(d, grid, side="right") - 1
        pieces.append(pd.DataFrame({ID_COL: sid, DATE_COL: grid, "score": v[pos]}))
    if not pieces:
        return scores.iloc[0:0].copy()
    out = pd.concat(pieces, ignore_index=True)
    return out.sort_values([ID_COL, DATE_COL], kind="stable").reset_index(drop=True)
