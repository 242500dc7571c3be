"""Position-level trading frictions: spreads, square-root impact, turnover.

Costs are charged one-way per unit of traded weight. A round-trip doubles
the charge only because a position is eventually both entered and exited;
set ``round_trip=True`` to instead apply the doubled per-trade convention
up front.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .panel import DATE_COL, ID_COL, Panel
from .portfolio import WeightBook


@dataclass(frozen=True)
class CostParams:
    impact_k: float = 0.3
    static_cost_bps: float | None = None
    aum: float = 100e6
    vol_window: int = 20
    adv_window: int = 21
    round_trip: bool = False
    min_adv_dollars: float = 1e6
    max_spread: float = 0.0050  # 50 bps

    def __post_init__(self) -> None:
        if self.impact_k < 0:
            raise ValueError("impact_k must be >= 0")
        if self.aum <= 0:
            raise ValueError("aum must be positive")


def table7_preset(**overrides) -> CostParams:
    """Published robustness-table convention (impact coefficient 0.2)."""
    kwargs = {"impact_k": 0.2}
    kwargs.update(overrides)
    return CostParams(**kwargs)


def spread_cost(bid: float, ask: float) -> float:
    """Half spread as a fraction of mid; NaN on a crossed or empty quote."""
    if not (np.isfinite(bid) and np.isfinite(ask)) or bid <= 0 or ask < bid:
        return math.nan
    mid = (ask + bid) / 2.0
    return (ask - bid) / (2.0 * mid)


def impact_cost(params: CostParams, sigma: float, q_dollars: float,
                adv_dollars: float) -> float:
    """Square-root impact k * sigma * sqrt(Q / ADV)."""
    if not (np.isfinite(sigma) and np.isfinite(q_dollars) and np.isfinite(adv_dollars)):
        return math.nan
    if adv_dollars <= 0:
        return math.nan
    if q_dollars < 0:
        raise ValueError("position size must be non-negative")
    return params.impact_k * sigma * math.sqrt(q_dollars / adv_dollars)


def compute_cost_inputs(panel: Panel, params: CostParams) -> Panel:
    """Attach spread_cost, sigma (trailing vol of 'ret'), and adv_dollars.

    Vol is the trailing ``vol_window``-day population std of log returns;
    ADV the trailing ``adv_window``-day median dollar volume. Both need at
    least half a window of observations.
    """
    panel.require_columns(["ret", "dollar_volume", "bid", "ask"])
    bid = panel.column("bid")
    ask = panel.column("ask")
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = (ask + bid) / 2.0
        spread = np.where(
            np.isfinite(bid) & np.isfinite(ask) & (bid > 0) & (ask >= bid),
            (ask - bid) / (2.0 * mid), np.nan)

    ret = panel.column("ret")
    volume = panel.column("dollar_volume")
    sigma = np.full(len(panel), np.nan)
    adv = np.full(len(panel), np.nan)
    for _, sl in panel.security_slices():
        sigma[sl] = _trailing_std(ret[sl], params.vol_window,
                                  max(2, params.vol_window // 2))
        adv[sl] = _trailing_median(volume[sl], params.adv_window,
                                   max(1, params.adv_window // 2))
    return panel.with_columns(spread_cost=spread, sigma=sigma, adv_dollars=adv)


def _trailing_std(x: np.ndarray, window: int, min_periods: int) -> np.ndarray:
    from numpy.lib.stride_tricks import sliding_window_view
    n = len(x)
    out = np.full(n, np.nan)
    if n == 0:
        return out
    padded = np.concatenate([np.full(window - 1, np.nan), x])
    win = sliding_window_view(padded, window)
    finite = np.isfinite(win)
    cnt = finite.sum(axis=1)
    ok = cnt >= min_periods
    total = np.where(finite, win, 0.0).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = total / cnt
        dev = np.where(finite, win - mean[:, None], 0.0)
        var = (dev * dev).sum(axis=1) / cnt
    out[ok] = np.sqrt(var[ok])
    return out


def _trailing_median(x: np.ndarray, window: int, min_periods: int) -> np.ndarray:
    from numpy.lib.stride_tricks import sliding_window_view
    n = len(x)
    out = np.full(n, np.nan)
    if n == 0:
        return out
    padded = np.concatenate([np.full(window - 1, np.nan), x])
    win = sliding_window_view(padded, window)
    cnt = np.isfinite(win).sum(axis=1)
    ok = cnt >= min_periods
    med = np.nanmedian(np.where(np.isfinite(win), win, np.nan), axis=1)
    out[ok] = med[ok]
    return out


def liquidity_filter(panel: Panel, params: CostParams) -> np.ndarray:
    """True where the name is tradable on the date.

    Excludes rows whose trailing median dollar volume is below the floor or
    whose full quoted spread (twice the half-spread) exceeds the cap;
    missing inputs fail the screen. Re-run the weight map on survivors to
    redistribute the excluded names' score mass.
    """
    panel.require_columns(["spread_cost", "adv_dollars"])
    spread = panel.column("spread_cost") * 2.0  # quoted spread, not half
    adv = panel.column("adv_dollars")
    return (np.isfinite(adv) & (adv >= params.min_adv_dollars)
            & np.isfinite(spread) & (spread <= params.max_spread))


def turnover(book: WeightBook) -> pd.Series:
    """Per-date sum of absolute weight changes; first date establishes."""
    prev: dict[str, float] = {}
    dates, values = [], []
    for date, ids, weights in book.by_date():
        current = dict(zip(ids, weights))
        names = set(current) | set(prev)
        total = sum(abs(current.get(s, 0.0) - prev.get(s, 0.0)) for s in names)
        dates.append(date)
        values.append(total)
        prev = current
    return pd.Series(values, index=dates, dtype=float)


@dataclass
class NetResult:
    net: pd.Series
    cost_drag: pd.Series
    fallback_count: int
    ledger: pd.DataFrame  # date, security_id, dw, spread_bps, impact_bps, cost_bps


def net_returns(gross: pd.Series, book: WeightBook, cost_panel: Panel | None,
                params: CostParams) -> NetResult:
    """Charge each date's trades: net_t = gross_t - sum_i |dw_i| * c_i.

    c_i is the one-way fraction (half-spread + impact at Q_i = |dw_i| * AUM).
    With ``cost_panel=None`` a flat ``static_cost_bps`` applies to all traded
    notional; with per-name inputs missing, the static rate is the per-name
    fallback (counted), or zero if none is configured.
    """
    static = (params.static_cost_bps or 0.0) / 1e4
    factor = 2.0 if params.round_trip else 1.0
    lookup = None
    if cost_panel is not None:
        cost_panel.require_columns(["spread_cost", "sigma", "adv_dollars"])
        lookup = cost_panel.frame.set_index([ID_COL, DATE_COL])[
            ["spread_cost", "sigma", "adv_dollars"]]

    prev: dict[str, float] = {}
    drags, dates = [], []
    fallback = 0
    ledger_rows = []
    for date, ids, weights in book.by_date():
        current = dict(zip(ids, weights))
        names = sorted(set(current) | set(prev))
        drag = 0.0
        for sid in names:
            dw = abs(current.get(sid, 0.0) - prev.get(sid, 0.0))
            if dw == 0.0:
                continue
            if lookup is None:
                unit = static
                spread_i = impact_i = math.nan
            else:
                try:
                    row = lookup.loc[(sid, date)]
                    spread_i = float(row["spread_cost"])
                    impact_i = impact_cost(params, float(row["sigma"]),
                                           dw * params.aum, float(row["adv_dollars"]))
                except KeyError:
                    spread_i = impact_i = math.nan
                if np.isfinite(spread_i) and np.isfinite(impact_i):
                    unit = spread_i + impact_i
                else:
                    unit = static
                    fallback += 1
            cost = factor * unit * dw
            drag += cost
            ledger_rows.append((date, sid, current.get(sid, 0.0) - prev.get(sid, 0.0),
                                spread_i * 1e4, impact_i * 1e4, factor * unit * 1e4))
        dates.append(date)
        drags.append(drag)
        prev = current
    drag_series = pd.Series(drags, index=dates, dtype=float)
    net = gross.reindex(drag_series.index) - drag_series
    ledger = pd.DataFrame(ledger_rows, columns=[
        DATE_COL, ID_COL, "dw", "spread_bps", "impact_bps", "cost_bps"])
    return NetResult(net=net, cost_drag=drag_series, fallback_count=fallback, ledger=ledger)


def break_even_cost(gross: pd.Series, turnover_series: pd.Series) -> float:
    """Constant one-way cost (bps of traded notional) zeroing mean net return."""
    common = gross.index.intersection(turnover_series.index)
    t_mean = float(turnover_series.loc[common].mean())
    if not len(common) or t_mean <= 0:
        raise ValueError("break-even cost needs positive average turnover")
    return float(gross.loc[common].mean()) / t_mean * 1e4


def write_trade_ledger(ledger: pd.DataFrame, path) -> None:
    from .panel import format_date
    out = ledger.copy()
    out[DATE_COL] = [format_date(d) for d in out[DATE_COL]]
    out.to_csv(path, index=False, float_format="%.10g")
