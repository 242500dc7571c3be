"""Synthetic panel generator with planted, persistent signals.

Gives every experiment a ground truth: next-day log returns are a linear
function of AR(1) signal columns plus Gaussian noise, so planted betas,
signal persistence, and therefore expected alpha decay are all known.
Prices, capitalizations, dollar volumes, and quotes are generated so the
universe, cost, and liquidity machinery can run end to end.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ._seeds import substream
from .panel import Panel


@dataclass(frozen=True)
class SyntheticSpec:
    n_securities: int = 50
    n_days: int = 400
    signal_names: tuple[str, ...] = ("sig_a", "sig_b")
    signal_betas: tuple[float, ...] = (0.004, 0.002)
    signal_phis: tuple[float, ...] = (0.9, 0.5)
    noise_vol: float = 0.02
    start_date: str = "2015-01-02"
    base_price: float = 50.0
    spread_bps_median: float = 8.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (len(self.signal_names) == len(self.signal_betas) == len(self.signal_phis)):
            raise ValueError("signal names/betas/phis must align")
        if self.n_securities < 1 or self.n_days < 2:
            raise ValueError("need at least one security and two days")
        if any(not -1.0 < phi < 1.0 for phi in self.signal_phis):
            raise ValueError("signal persistence must satisfy |phi| < 1")


def weekday_ordinals(start_date: str, n_days: int) -> np.ndarray:
    """Consecutive weekday ordinals starting at (or after) start_date."""
    day = dt.date.fromisoformat(start_date)
    out = []
    while len(out) < n_days:
        if day.weekday() < 5:
            out.append(day.toordinal())
        day += dt.timedelta(days=1)
    return np.asarray(out, dtype=np.int64)


def generate_synthetic(spec: SyntheticSpec) -> tuple[Panel, dict]:
    """Build the panel plus a ground-truth dict (betas, phis, noise vol)."""
    rng = substream(spec.seed, "synthetic")
    n, t = spec.n_securities, spec.n_days
    dates = weekday_ordinals(spec.start_date, t)
    k = len(spec.signal_names)
    betas = np.asarray(spec.signal_betas)
    phis = np.asarray(spec.signal_phis)

    # stationary AR(1) signals, unit marginal variance
    signals = np.empty((k, n, t))
    eps = rng.standard_normal((k, n, t))
    signals[:, :, 0] = eps[:, :, 0]
    for j in range(1, t):
        signals[:, :, j] = (phis[:, None] * signals[:, :, j - 1]
                            + np.sqrt(1.0 - phis[:, None] ** 2) * eps[:, :, j])

    # r_{t+1} = sum_k beta_k * x_{k,t} + noise
    predictable = np.tensordot(betas, signals, axes=(0, 0))  # (n, t)
    noise = rng.normal(0.0, spec.noise_vol, size=(n, t))
    log_ret = np.empty((n, t))
    log_ret[:, 0] = rng.normal(0.0, spec.noise_vol, size=n)
    log_ret[:, 1:] = predictable[:, :-1] + noise[:, 1:]

    base = spec.base_price * np.exp(rng.normal(0.0, 0.5, size=n))
    close = base[:, None] * np.exp(np.cumsum(log_ret, axis=1))

    # slowly drifting capitalization and volume; spreads lognormal around median
    cap0 = np.exp(rng.normal(9.0, 1.2, size=n))
    cap = cap0[:, None] * np.exp(np.cumsum(rng.normal(0.0, 0.004, size=(n, t)), axis=1))
    adv0 = cap0 * np.exp(rng.normal(-4.0, 0.6, size=n))
    dollar_volume = adv0[:, None] * np.exp(rng.normal(0.0, 0.25, size=(n, t)))
    half_spread = (spec.spread_bps_median / 1e4) * np.exp(rng.normal(0.0, 0.4, size=(n, t)))
    bid = close * (1.0 - half_spread)
    ask = close * (1.0 + half_spread)

    frames = []
    for i in range(n):
        data = {
            "security_id": f"S{i:04d}",
            "date": dates,
            "close": close[i],
            "cap": cap[i],
            "dollar_volume": dollar_volume[i],
            "bid": bid[i],
            "ask": ask[i],
        }
        for s, name in enumerate(spec.signal_names):
            data[name] = signals[s, i]
        frames.append(pd.DataFrame(data))
    panel = Panel(pd.concat(frames, ignore_index=True), copy=False)
    truth = {
        "signal_betas": dict(zip(spec.signal_names, betas.tolist())),
        "signal_phis": dict(zip(spec.signal_names, phis.tolist())),
        "noise_vol": spec.noise_vol,
    }
    return panel, truth
