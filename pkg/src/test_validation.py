import math

import pytest

from utils.run_utils import DomainError
from validation import (
    COMBO_SLOPE_BAND,
    SUITES,
    run_suite,
    suite_almosttrivi,
    suite_exponents,
    suite_firstfact,
    suite_grover,
    suite_isolation,
)


def test_useful_suite_passes():
    table, passed = run_suite("useful")
    assert passed
    assert len(table) > 0


def test_exponents_suite_reports_measured_combinatorial_slope():
    table, _ = suite_exponents(combo_grid=(48, 64, 96), combo_seeds=2)
    row = table[table["quantity"] == "combinatorial-measured-slope"].iloc[0]
    assert math.isfinite(row["value"])
    assert row["expected"] == pytest.approx(10 / 7)
    assert bool(row["ok"]) == (COMBO_SLOPE_BAND[0] <= row["value"] <= COMBO_SLOPE_BAND[1])
    analytic = table[table["quantity"] != "combinatorial-measured-slope"]
    assert analytic["ok"].all()


def test_grover_suite_small():
    table, passed = suite_grover(max_N=16, max_j=8)
    assert passed
    assert table["error"].max() < 1e-9


def test_sampling_suites_small():
    assert suite_almosttrivi(seeds=10)[1]
    assert suite_firstfact(seeds=10)[1]


def test_unknown_suite():
    with pytest.raises(DomainError):
        run_suite("lemma-nine")
    assert set(SUITES) >= {"useful", "almosttrivi", "firstfact", "isolation", "grover", "exponents"}


@pytest.mark.slow
def test_exponents_suite_passes():
    table, passed = run_suite("exponents")
    assert passed
    assert "combinatorial-measured-slope" in set(table["quantity"])


@pytest.mark.slow
def test_almosttrivi_suite_50_seeds():
    table, passed = suite_almosttrivi(seeds=50)
    assert passed
    assert len(table) == 50


@pytest.mark.slow
def test_grover_suite_full_grid():
    table, passed = suite_grover()
    assert passed
    assert table["N"].max() == 64 and table["j"].max() == 20


@pytest.mark.slow
def test_isolation_suite():
    table, passed = suite_isolation()
    assert passed
    assert table["isolated"].mean() >= 0.75
