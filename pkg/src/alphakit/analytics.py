"""Performance metrics and statistical inference for daily return series.

Conventions: 252 trading days per year, population standard deviations,
annualized Sharpe = sqrt(252) * mean / std. Long-run variances use the
Bartlett kernel; bootstrap confidence intervals use the stationary
bootstrap with geometric mean block length ceil(n^(1/3)) by default.
p-values come from the normal approximation throughout.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ._seeds import substream
from .dsl.evaluator import average_ranks
from .panel import DATE_COL, ID_COL, Panel, forward_return, forward_return_column

ANNUALIZATION = 252.0

FACTOR_COLUMNS = ("MktRF", "SMB", "HML", "RMW", "CMA", "Mom")


def sharpe(series: pd.Series | np.ndarray) -> float:
    """Annualized Sharpe ratio of daily returns."""
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 2:
        raise ValueError("sharpe needs at least two observations")
    std = x.std()
    if std == 0.0:
        raise ValueError("sharpe undefined for a zero-variance series")
    return math.sqrt(ANNUALIZATION) * x.mean() / std


def hit_rate(series: pd.Series | np.ndarray) -> float:
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) == 0:
        raise ValueError("hit_rate needs a non-empty series")
    return float((x > 0).mean())


def max_drawdown(series: pd.Series | np.ndarray) -> float:
    """Largest peak-to-trough loss of the compounded curve (<= 0)."""
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) == 0:
        raise ValueError("max_drawdown needs a non-empty series")
    equity = np.cumprod(1.0 + x)
    peaks = np.maximum.accumulate(np.r_[1.0, equity])[1:]
    return float(np.min(equity / peaks - 1.0))


def calmar(series: pd.Series | np.ndarray) -> float:
    """Annualized arithmetic return over |max drawdown|; NaN when flat-topped."""
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    mdd = max_drawdown(x)
    if mdd == 0.0:
        return math.nan
    return float(x.mean() * ANNUALIZATION / abs(mdd))


def spearman_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Average-rank Spearman correlation of two aligned vectors."""
    ra = average_ranks(np.asarray(a, dtype=float))
    rb = average_ranks(np.asarray(b, dtype=float))
    sa = ra.std()
    sb = rb.std()
    if sa == 0.0 or sb == 0.0:
        return math.nan
    return float(((ra - ra.mean()) * (rb - rb.mean())).mean() / (sa * sb))


def spearman_ic(scores: pd.DataFrame, panel: Panel, return_column: str,
                min_names: int = 3) -> tuple[pd.Series, float]:
    """Per-date rank IC of scores against the given forward-return column.

    Dates with fewer than ``min_names`` complete pairs are skipped. Returns
    the daily series and its mean.
    """
    panel.require_columns([return_column])
    merged = scores.merge(
        panel.frame[[ID_COL, DATE_COL, return_column]], on=[ID_COL, DATE_COL], how="inner")
    merged = merged.dropna(subset=["score", return_column])
    dates, values = [], []
    for date, grp in merged.groupby(DATE_COL, sort=True):
        if len(grp) < min_names:
            continue
        ic = spearman_correlation(grp["score"].to_numpy(), grp[return_column].to_numpy())
        if np.isfinite(ic):
            dates.append(int(date))
            values.append(ic)
    daily = pd.Series(values, index=dates, dtype=float)
    return daily, float(daily.mean()) if len(daily) else math.nan


# -- HAC / bootstrap inference ------------------------------------------------


def newey_west_variance(x: np.ndarray, lags: int) -> float:
    """Bartlett-kernel long-run variance; equals plain variance at lags=0."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two observations")
    d = x - x.mean()
    total = float(d @ d) / n
    for j in range(1, min(lags, n - 1) + 1):
        gamma = float(d[j:] @ d[:-j]) / n
        total += 2.0 * (1.0 - j / (lags + 1.0)) * gamma
    return total


def normal_two_sided_p(t: float) -> float:
    return math.erfc(abs(t) / math.sqrt(2.0))


@dataclass(frozen=True)
class MeanDiffTest:
    t_stat: float
    p_value: float
    mean_diff: float
    n: int


def nw_sharpe_diff_test(a: pd.Series, b: pd.Series, lags: int = 5,
                        min_overlap: int = 30) -> MeanDiffTest:
    """HAC t-test on the mean of daily return differentials a - b."""
    common = a.index.intersection(b.index)
    if len(common) < min_overlap:
        raise ValueError(f"need >= {min_overlap} overlapping dates, got {len(common)}")
    d = (a.loc[common] - b.loc[common]).to_numpy(dtype=float)
    d = d[np.isfinite(d)]
    n = len(d)
    lrv = newey_west_variance(d, lags)
    if lrv <= 0:
        return MeanDiffTest(0.0, 1.0, float(d.mean()), n)
    t = d.mean() / math.sqrt(lrv / n)
    return MeanDiffTest(float(t), normal_two_sided_p(t), float(d.mean()), n)


def stationary_bootstrap_indices(rng: np.random.Generator, n: int,
                                 mean_block: float, n_resamples: int) -> np.ndarray:
    """Politis-Romano circular resampling index matrix (n_resamples x n)."""
    p = min(1.0, 1.0 / mean_block)
    restart = rng.random((n_resamples, n)) < p
    restart[:, 0] = True
    starts = rng.integers(0, n, size=(n_resamples, n))
    t_idx = np.arange(n)
    last = np.maximum.accumulate(np.where(restart, t_idx, -1), axis=1)
    anchors = starts[np.arange(n_resamples)[:, None], last]
    return (anchors + (t_idx - last)) % n


def stationary_bootstrap_ci(series: pd.Series | np.ndarray, statistic,
                            level: float = 0.95, block_mean: float | None = None,
                            n_resamples: int = 2000, seed: int = 0,
                            min_length: int = 100) -> tuple[float, float]:
    """Percentile confidence interval from the stationary bootstrap.

    ``statistic`` maps a 1-d array to a float. Default block length is
    ceil(n^(1/3)); draws are reproducible from ``seed``.
    """
    x = np.asarray(series, dtype=float)
    x = x[np.isfinite(x)]
    n = len(x)
    if n < min_length:
        raise ValueError(f"series too short for a bootstrap CI (n={n})")
    if block_mean is None:
        block_mean = float(math.ceil(n ** (1.0 / 3.0)))
    rng = substream(seed, "stationary_bootstrap")
    estimates = np.empty(n_resamples)
    chunk = 500
    done = 0
    while done < n_resamples:
        take = min(chunk, n_resamples - done)
        idx = stationary_bootstrap_indices(rng, n, block_mean, take)
        samples = x[idx]
        for i in range(take):
            estimates[done + i] = statistic(samples[i])
        done += take
    alpha = (1.0 - level) / 2.0
    return (float(np.quantile(estimates, alpha)),
            float(np.quantile(estimates, 1.0 - alpha)))


# -- factor attribution --------------------------------------------------------


@dataclass(frozen=True)
class FactorRegression:
    alpha_annual: float
    alpha_t: float
    betas: dict[str, float]
    t_stats: dict[str, float]
    r_squared: float
    n: int


def load_factor_panel(path, delimiter: str = ",") -> pd.DataFrame:
    """Factor file: date column plus MktRF, SMB, HML, RMW, CMA, Mom, RF."""
    from .panel import parse_date
    raw = pd.read_csv(path, sep=delimiter)
    date_col = raw.columns[0]
    raw[date_col] = [parse_date(str(v)) for v in raw[date_col]]
    missing = [c for c in (*FACTOR_COLUMNS, "RF") if c not in raw.columns]
    if missing:
        raise ValueError(f"factor file lacks columns {missing}")
    return raw.set_index(date_col)[list(FACTOR_COLUMNS) + ["RF"]].astype(float)


def _find_collinear(X: np.ndarray, names: list[str]) -> list[str]:
    bad = []
    for j in range(X.shape[1]):
        others = np.delete(X, j, axis=1)
        coef, _, _, _ = np.linalg.lstsq(others, X[:, j], rcond=None)
        resid = X[:, j] - others @ coef
        scale = X[:, j].std() + 1e-30
        if resid.std() / scale < 1e-8:
            bad.append(names[j])
    return bad


def factor_attribution(strategy: pd.Series, factors: pd.DataFrame, lags: int = 5,
                       shift: int = 0, min_overlap: int = 100) -> FactorRegression:
    """OLS of daily strategy returns on the six factors, HAC standard errors.

    ``shift`` aligns information timing: the strategy return labeled t is
    regressed on the factor row dated t + shift (two for strategies whose
    returns realize two days after signal formation).
    """
    fac = factors.copy()
    fac.index = fac.index - shift
    common = strategy.index.intersection(fac.index)
    if len(common) < min_overlap:
        raise ValueError(f"need >= {min_overlap} overlapping dates, got {len(common)}")
    y = strategy.loc[common].to_numpy(dtype=float)
    F = fac.loc[common, list(FACTOR_COLUMNS)].to_numpy(dtype=float)
    keep = np.isfinite(y) & np.isfinite(F).all(axis=1)
    y, F = y[keep], F[keep]
    n = len(y)
    X = np.column_stack([np.ones(n), F])
    names = ["alpha", *FACTOR_COLUMNS]
    if np.linalg.matrix_rank(X) < X.shape[1]:
        bad = _find_collinear(F, list(FACTOR_COLUMNS))
        raise ValueError(f"singular design: collinear columns {bad}")
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta

    # Bartlett-kernel sandwich
    xu = X * resid[:, None]
    S = (xu.T @ xu) / n
    for j in range(1, min(lags, n - 1) + 1):
        gamma = (xu[j:].T @ xu[:-j]) / n
        S += (1.0 - j / (lags + 1.0)) * (gamma + gamma.T)
    bread = np.linalg.inv(X.T @ X)
    cov = bread @ (n * S) @ bread
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, beta / se, 0.0)

    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return FactorRegression(
        alpha_annual=float(beta[0] * ANNUALIZATION),
        alpha_t=float(t_stats[0]),
        betas=dict(zip(FACTOR_COLUMNS, beta[1:].tolist())),
        t_stats=dict(zip(names, t_stats.tolist())),
        r_squared=float(r2),
        n=n,
    )


# -- pipeline-level diagnostics ------------------------------------------------


def _pipeline_returns(scores: pd.DataFrame, panel: Panel, return_column: str) -> pd.Series:
    from .portfolio import (portfolio_returns, standardize_and_winsorize,
                            weights_from_scores)
    book = weights_from_scores(standardize_and_winsorize(scores))
    return portfolio_returns(book, panel, return_column).returns


def alpha_decay(scores: pd.DataFrame, panel: Panel,
                lags: tuple[int, ...] = (0, 1, 2, 3, 5, 10)) -> dict[int, float]:
    """Sharpe of the full portfolio pipeline at each execution lag."""
    out = {}
    for lag in lags:
        col = forward_return_column(lag)
        lagged = panel if panel.has_column(col) else forward_return(panel, lag)
        out[lag] = sharpe(_pipeline_returns(scores, lagged, col))
    return out


def cap_segment_report(panel: Panel, scores: pd.DataFrame, cap_column: str,
                       return_column: str, min_names: int = 6) -> dict[str, float]:
    """Sharpe by daily capitalization tercile plus the full universe."""
    panel.require_columns([cap_column, return_column])
    caps = panel.column(cap_column)
    ids = panel.security_ids
    dates = panel.dates
    labels = ("small", "mid", "large")
    assignments = {}
    for date, rows in panel.date_groups():
        rows = rows[np.isfinite(caps[rows])]
        if len(rows) < min_names:
            continue
        order = rows[np.argsort(caps[rows], kind="stable")]
        terciles = np.array_split(order, 3)
        for label, members in zip(labels, terciles):
            for r in members:
                assignments[(ids[r], int(dates[r]))] = label
    keys = pd.MultiIndex.from_arrays([scores[ID_COL], scores[DATE_COL]])
    tercile_of = pd.Series([assignments.get(k, "") for k in keys], index=scores.index)
    out: dict[str, float] = {}
    for label in labels:
        subset = scores[tercile_of == label]
        out[label] = sharpe(_pipeline_returns(subset, panel, return_column))
    out["full"] = sharpe(_pipeline_returns(scores, panel, return_column))
    return out


def strategy_correlations(returns_by_name: dict[str, pd.Series],
                          min_overlap: int = 30) -> pd.DataFrame:
    """Pearson correlation matrix on common dates; NaN under min overlap."""
    names = list(returns_by_name)
    out = pd.DataFrame(np.eye(len(names)), index=names, columns=names)
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            b = names[j]
            common = returns_by_name[a].index.intersection(returns_by_name[b].index)
            if len(common) < min_overlap:
                rho = math.nan
            else:
                x = returns_by_name[a].loc[common].to_numpy(dtype=float)
                y = returns_by_name[b].loc[common].to_numpy(dtype=float)
                rho = float(np.corrcoef(x, y)[0, 1])
            out.iloc[i, j] = out.iloc[j, i] = rho
    return out


# -- bundled report -------------------------------------------------------------


@dataclass
class PerfReport:
    name: str
    sharpe: float
    ann_return: float
    ann_vol: float
    max_drawdown: float
    calmar: float
    mean_ic: float
    hit_rate: float
    total_return: float
    n_days: int
    yearly_sharpe: dict[int, float] = field(default_factory=dict)
    bootstrap_ci: tuple[float, float] | None = None

    @property
    def avg_yearly_sharpe(self) -> float:
        vals = list(self.yearly_sharpe.values())
        return float(np.mean(vals)) if vals else math.nan

    @property
    def std_yearly_sharpe(self) -> float:
        vals = list(self.yearly_sharpe.values())
        return float(np.std(vals)) if vals else math.nan

    @property
    def best_year(self) -> tuple[int, float] | None:
        if not self.yearly_sharpe:
            return None
        year = max(self.yearly_sharpe, key=self.yearly_sharpe.get)
        return year, self.yearly_sharpe[year]

    @property
    def worst_year(self) -> tuple[int, float] | None:
        if not self.yearly_sharpe:
            return None
        year = min(self.yearly_sharpe, key=self.yearly_sharpe.get)
        return year, self.yearly_sharpe[year]


def compute_perf_report(name: str, returns: pd.Series, mean_ic: float = math.nan,
                        compound_total: bool = True,
                        bootstrap: dict | None = None) -> PerfReport:
    """Assemble the metrics bundle for one strategy's daily returns.

    ``bootstrap`` (optional) holds stationary_bootstrap_ci keyword args and
    adds a CI on the Sharpe ratio.
    """
    x = returns.dropna()
    years = pd.Series([dt.date.fromordinal(int(d)).year for d in x.index], index=x.index)
    yearly = {}
    for year, grp in x.groupby(years):
        if len(grp) >= 2 and grp.std() > 0:
            yearly[int(year)] = sharpe(grp)
    total = float(np.prod(1.0 + x.to_numpy()) - 1.0) if compound_total \
        else float(x.sum())
    ci = None
    if bootstrap is not None:
        ci = stationary_bootstrap_ci(x, sharpe, **bootstrap)
    return PerfReport(
        name=name,
        sharpe=sharpe(x),
        ann_return=float(x.mean() * ANNUALIZATION),
        ann_vol=float(x.std() * math.sqrt(ANNUALIZATION)),
        max_drawdown=max_drawdown(x),
        calmar=calmar(x),
        mean_ic=mean_ic,
        hit_rate=hit_rate(x),
        total_return=total,
        n_days=len(x),
        yearly_sharpe=yearly,
        bootstrap_ci=ci,
    )
