from __future__ import annotations

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphakit.panel import DATE_COL, ID_COL
from alphakit.portfolio import (PortfolioReturns, WeightBook, ensemble_scores,
                                long_short_weights, portfolio_returns,
                                smooth_scores, standardize_and_winsorize,
                                weights_from_scores)
from conftest import BASE_DATE, make_panel


def frame(cells):
    """cells: list of (sid, date_offset, score)."""
    return pd.DataFrame(
        {ID_COL: [c[0] for c in cells],
         DATE_COL: [BASE_DATE + c[1] for c in cells],
         "score": [c[2] for c in cells]})


class TestStandardizeWinsorize:
    def test_three_values(self):
        out = standardize_and_winsorize(frame([("A", 0, 1.0), ("B", 0, 2.0), ("C", 0, 3.0)]))
        assert out["score"].to_numpy() == pytest.approx([-1.2247448, 0.0, 1.2247448], abs=1e-6)

    def test_outlier_clamped_to_three(self):
        # max attainable |z| with population sigma is sqrt(n-1), so a lone
        # outlier needs n > 10 to ever breach the clamp
        cells = [("X99", 0, 1000.0)] + [(f"X{i:02d}", 0, float(i % 7)) for i in range(29)]
        out = standardize_and_winsorize(frame(cells))
        raw = frame(cells)["score"].to_numpy()
        z_outlier = (1000.0 - raw.mean()) / raw.std()
        assert z_outlier > 3.0
        assert out["score"].max() == pytest.approx(3.0)
        assert (out["score"] >= -3.0).all() and (out["score"] <= 3.0).all()

    def test_single_name_date_zero(self):
        out = standardize_and_winsorize(frame([("A", 0, 7.0)]))
        assert out["score"].iloc[0] == 0.0


class TestWeightMap:
    def test_direct_formula(self):
        w = long_short_weights(np.array([1.0, 1.0, -2.0]))
        assert w == pytest.approx([0.5, 0.5, -1.0])

    def test_second_example(self):
        w = long_short_weights(np.array([2.0, -1.0, -1.0]))
        assert w == pytest.approx([1.0, -0.5, -0.5])

    def test_one_sided_returns_none(self):
        assert long_short_weights(np.array([1.0, 1.0])) is None

    def test_one_sided_date_flagged_empty(self):
        book = weights_from_scores(frame([("A", 0, 1.0), ("B", 0, 1.0)]))
        assert book.flagged_dates == [BASE_DATE]
        assert len(book.frame) == 0

    def test_all_zero_scores_flagged(self):
        book = weights_from_scores(frame([("A", 0, 0.0), ("B", 0, 0.0)]))
        assert book.flagged_dates == [BASE_DATE]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=60),
           st.randoms(use_true_random=False))
    def test_neutrality_and_leverage_property(self, values, rnd):
        w = long_short_weights(np.array(values))
        if w is None:
            assert not (min(values) < 0 < max(values))
            return
        assert abs(w.sum()) <= 1e-10
        assert abs(np.abs(w).sum() - 2.0) <= 1e-10

    def test_scale_invariance(self):
        v = np.array([0.3, -0.7, 1.9, -0.2])
        base = long_short_weights(v)
        for c in (0.1, 3.0, 1e6):
            assert long_short_weights(c * v) == pytest.approx(base, abs=1e-14)

    def test_rank_preserved_within_long_side(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=30)
        w = long_short_weights(v)
        longs = v > 0
        assert np.array_equal(np.argsort(v[longs]), np.argsort(w[longs]))


class TestSmoothing:
    def test_window_one_identity(self):
        f = frame([("A", 0, 1.0), ("A", 1, 2.0)])
        pd.testing.assert_frame_equal(smooth_scores(f, 1), f)

    def test_constant_unchanged(self):
        f = frame([("A", t, 3.0) for t in range(5)])
        assert smooth_scores(f, 3)["score"].to_numpy() == pytest.approx([3.0] * 5)

    def test_two_point_average(self):
        f = frame([("A", 0, 0.0), ("A", 1, 1.0)])
        assert smooth_scores(f, 2)["score"].to_numpy() == pytest.approx([0.0, 0.5])

    def test_matches_pandas_rolling(self):
        rng = np.random.default_rng(4)
        cells = [(f"S{i}", t, float(rng.normal())) for i in range(3) for t in range(40)]
        f = frame(cells)
        mine = smooth_scores(f, 7)
        ref = (f.sort_values([ID_COL, DATE_COL]).reset_index(drop=True)
               .groupby(ID_COL)["score"]
               .transform(lambda s: s.rolling(7, min_periods=1).mean()))
        assert np.allclose(mine["score"].to_numpy(), ref.to_numpy(), atol=1e-12)


class TestEnsemble:
    def test_idempotent_on_identical_inputs(self):
        f = frame([("A", 0, 1.0), ("B", 0, -1.0)])
        out = ensemble_scores([f, f.copy()])
        assert out["score"].to_numpy() == pytest.approx([1.0, -1.0])

    def test_cell_missing_in_one_input(self):
        a = frame([("A", 0, 1.0), ("B", 0, 3.0)])
        b = frame([("A", 0, 2.0)])
        out = ensemble_scores([a, b])
        assert dict(zip(out[ID_COL], out["score"])) == {"A": 1.5, "B": 3.0}

    def test_opposite_signals_cancel(self):
        a = frame([("A", 0, 1.0)])
        b = frame([("A", 0, -1.0)])
        assert ensemble_scores([a, b])["score"].iloc[0] == 0.0

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            ensemble_scores([])


class TestPortfolioReturns:
    def _panel(self, rets):
        panel = make_panel([(sid, 0, 0.0) for sid in rets], ["px"])
        return panel.with_columns(fwd_ret_lag0=np.array(list(rets.values())))

    def test_arithmetic(self):
        book = weights_from_scores(frame([("A", 0, 1.0), ("B", 0, 1.0), ("C", 0, -2.0)]))
        panel = self._panel({"A": 0.02, "B": 0.0, "C": 0.01})
        out = portfolio_returns(book, panel, "fwd_ret_lag0")
        assert out.returns.iloc[0] == pytest.approx(0.5 * 0.02 + 0.5 * 0.0 - 1.0 * 0.01)

    def test_missing_return_dropped_and_counted(self):
        book = weights_from_scores(frame([("A", 0, 1.0), ("B", 0, 1.0), ("C", 0, -2.0)]))
        panel = self._panel({"A": 0.02, "B": 0.0, "C": np.nan})
        out = portfolio_returns(book, panel, "fwd_ret_lag0")
        assert out.returns.iloc[0] == pytest.approx(0.01)
        assert out.missing_return_count.iloc[0] == 1

    def test_empty_book_gives_empty_series(self):
        book = weights_from_scores(frame([("A", 0, 1.0)]))
        panel = self._panel({"A": 0.02})
        out = portfolio_returns(book, panel, "fwd_ret_lag0")
        assert len(out.returns) == 0


class TestRebalanceHolding:
    def test_weekly_holds_weights_between_rebalances(self):
        rng = np.random.default_rng(1)
        cells = [(f"S{i}", t, float(rng.normal())) for i in range(6) for t in range(10)]
        book = weights_from_scores(standardize_and_winsorize(frame(cells)), rebalance="weekly")
        w0 = book.weights_at(BASE_DATE)
        for off in range(1, 5):
            held = book.weights_at(BASE_DATE + off)
            pd.testing.assert_series_equal(w0, held)
        w5 = book.weights_at(BASE_DATE + 5)
        assert not w5.equals(w0)

    def test_daily_rebalances_every_date(self):
        rng = np.random.default_rng(2)
        cells = [(f"S{i}", t, float(rng.normal())) for i in range(4) for t in range(3)]
        book = weights_from_scores(frame(cells), rebalance="daily")
        assert len(book.dates()) == 3
