"""Point-in-time property: future perturbations never reach the past."""
from __future__ import annotations

import numpy as np
import pytest

from alphakit.dsl import check_point_in_time, evaluate
from conftest import grid_panel, random_expr

COLUMNS = ["a", "b", "c"]


def perturb(panel, rng):
    """Randomly change one input cell; returns (panel, date of the change)."""
    row = int(rng.integers(len(panel)))
    col = COLUMNS[rng.integers(len(COLUMNS))]
    values = panel.column(col).copy()
    values[row] = rng.normal() * 3.0 + 1.0
    return panel.with_columns(**{col: values}), int(panel.dates[row])


def test_no_lookahead_under_random_perturbation():
    rng = np.random.default_rng(1234)
    panel = grid_panel(6, 30, COLUMNS, rng, missing_frac=0.05)
    dates = panel.dates
    checked = 0
    for _ in range(40):
        expr = random_expr(rng, COLUMNS, depth=int(rng.integers(2, 6)))
        if not check_point_in_time(expr, columns=set(COLUMNS)).passed:
            continue
        base = evaluate(expr, panel)
        for _ in range(5):
            bumped, change_date = perturb(panel, rng)
            out = evaluate(expr, bumped)
            past = dates < change_date
            same = (out[past] == base[past]) | (np.isnan(out[past]) & np.isnan(base[past]))
            assert same.all(), f"leak in {expr}"
            checked += 1
    assert checked >= 150


def test_bit_reproducible():
    rng = np.random.default_rng(7)
    panel = grid_panel(4, 25, COLUMNS, rng)
    for _ in range(10):
        expr = random_expr(rng, COLUMNS, depth=4)
        a = evaluate(expr, panel)
        b = evaluate(expr, panel)
        assert np.array_equal(a, b, equal_nan=True)


def test_cross_sectional_ops_isolate_dates():
    # perturbing one date never moves a pure per-date feature on other dates
    rng = np.random.default_rng(3)
    panel = grid_panel(8, 10, COLUMNS, rng)
    from alphakit.dsl import ColumnRef, CsRank
    expr = CsRank(ColumnRef("a"))
    base = evaluate(expr, panel)
    bumped, change_date = perturb(panel, rng)
    out = evaluate(expr, bumped)
    other = panel.dates != change_date
    assert np.array_equal(base[other], out[other], equal_nan=True)
