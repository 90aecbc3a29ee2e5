import math

import pytest

from polargraph.decoders import ScConfig
from polargraph.engine import FerCache
from polargraph.evaluation import (
    REQUIRED_SNR_COLUMNS,
    SIMULATION_COLUMNS,
    Bracket,
    StopRule,
    required_snr,
    simulate_sweep,
)
from polargraph.intervals import estimate
from polargraph.polar import CodeDesign, beta_expansion_sequence, design_from_sequence

SEQ8 = beta_expansion_sequence(8, 2 ** 0.25)


def test_sweep_rows_follow_the_stop_rule():
    d = design_from_sequence(SEQ8, 4)
    rows = simulate_sweep(d, [0.0, 2.0], ScConfig(), seed=3, stop=StopRule(20, 50_000), batch_size=64)
    assert [tuple(r) for r in rows] == [SIMULATION_COLUMNS] * 2
    for r in rows:
        assert r["n_fe"] == 20
        assert r["lb"] <= r["fer"] <= r["ub"]
        assert r["fer"] == r["n_fe"] / r["n_t"]
    assert rows[0]["fer"] > rows[1]["fer"]


def test_sweep_is_deterministic_and_cache_backed():
    d = design_from_sequence(SEQ8, 5)
    a = simulate_sweep(d, [1.0], ScConfig(), seed=7, stop=StopRule(15, 10 ** 6), batch_size=32)
    cache = FerCache()
    b = simulate_sweep(d, [1.0], ScConfig(), seed=7, stop=StopRule(15, 10 ** 6), batch_size=32, cache=cache)
    assert a == b
    # a second run over the same cache adds no frames
    assert simulate_sweep(d, [1.0], ScConfig(), seed=7, stop=StopRule(15, 10 ** 6), batch_size=32, cache=cache) == b


def test_sweep_caps_trials():
    d = design_from_sequence(SEQ8, 1)
    (row,) = simulate_sweep(d, [8.0], ScConfig(), stop=StopRule(100, 256), batch_size=64)
    assert row["n_t"] == 256


def test_rate_zero_design_reports_zero_fer():
    (row,) = simulate_sweep(CodeDesign.all_frozen(8), [1.0], ScConfig(), stop=StopRule(10, 1000))
    assert row["n_fe"] == 0 and row["fer"] == 0.0


def test_bracket_grid():
    b = Bracket(0.0, 10.0, 0.05)
    assert b.points == 200
    assert b.snr(0) == 0.0 and b.snr(200) == 10.0 and b.snr(37) == 1.85


def test_required_snr_rows_and_rate_zero():
    rows = required_snr(SEQ8, [0, 4], 0.05, ScConfig(), seed=1, bracket=Bracket(0.0, 8.0, 0.25),
                        stop=StopRule(10, 20_000), batch_size=256)
    assert [tuple(r) for r in rows] == [REQUIRED_SNR_COLUMNS] * 2
    assert rows[0]["required_ebn0_db"] == 0.0 and rows[0]["points_simulated"] == 0
    assert rows[1]["status"] == "ok" and 0.0 < rows[1]["required_ebn0_db"] <= 8.0


def test_required_snr_is_the_first_grid_point_that_clears_the_target():
    stop = StopRule(10, 20_000)
    bracket = Bracket(0.0, 8.0, 0.25)
    (row,) = required_snr(SEQ8, [6], 0.05, ScConfig(), seed=2, bracket=bracket, stop=stop, batch_size=256)
    snr = row["required_ebn0_db"]
    assert row["ub"] <= 0.05
    # one grid step lower does not clear the target
    (below,) = simulate_sweep(design_from_sequence(SEQ8, 6), [snr - 0.25], ScConfig(), seed=2,
                              stop=stop, batch_size=256)
    assert below["fer"] > 0.05 or below["ub"] > 0.05


def test_required_snr_grows_with_dimension():
    rows = required_snr(SEQ8, [2, 5, 8], 0.05, ScConfig(), seed=4, bracket=Bracket(0.0, 12.0, 0.25),
                        stop=StopRule(10, 20_000), batch_size=256)
    snrs = [r["required_ebn0_db"] for r in rows]
    assert snrs == sorted(snrs)


def test_bracket_failure_is_reported_per_row():
    rows = required_snr(SEQ8, [8, 1], 1e-3, ScConfig(), bracket=Bracket(-5.0, -4.0, 0.5),
                        stop=StopRule(10, 5000), batch_size=256)
    assert rows[0]["status"] == "bracket_failure" and math.isnan(rows[0]["required_ebn0_db"])
    assert rows[1]["k"] == 1


def test_required_snr_rejects_bad_target():
    with pytest.raises(ValueError):
        required_snr(SEQ8, [1], 0.0, ScConfig())


def test_interval_used_by_required_snr_matches_estimate():
    (row,) = simulate_sweep(design_from_sequence(SEQ8, 3), [3.0], ScConfig(), stop=StopRule(12, 10 ** 6),
                            gamma=0.9)
    e = estimate(row["n_fe"], row["n_t"], 0.9)
    assert (row["lb"], row["ub"]) == (e.lb, e.ub)
