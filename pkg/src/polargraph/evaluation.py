"""FER-versus-SNR sweeps and required-SNR search for a reliability sequence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .decoders import DecoderConfig
from .engine import CodingSource, FerCache, FerEngine
from .intervals import FerEstimate
from .polar import CodeDesign, ReliabilitySequence, design_from_sequence

SIMULATION_COLUMNS = ("ebn0_db", "n_fe", "n_t", "fer", "lb", "ub", "gamma", "method")
REQUIRED_SNR_COLUMNS = ("k", "required_ebn0_db", "fer", "lb", "ub", "n_t", "points_simulated", "status")


@dataclass(frozen=True)
class StopRule:
    min_errors: int = 100
    max_trials: int = 10_000_000


def simulate_sweep(design: CodeDesign, snr_grid: Iterable[float], decoder: DecoderConfig, *, seed: int = 0,
                   stop: StopRule = StopRule(), gamma: float = 0.95, method: str = "normal",
                   batch_size: int = 512, cache: FerCache | None = None) -> list[dict]:
    """One row per SNR point, simulated to ``stop.min_errors`` errors or ``stop.max_trials`` frames."""
    cache = cache if cache is not None else FerCache()
    rows = []
    for snr in snr_grid:
        engine = FerEngine(CodingSource(decoder, float(snr), seed, batch_size), gamma, method, cache=cache)
        est = engine.measure(design, stop.min_errors, stop.max_trials)
        rows.append(_row(float(snr), est))
    return rows


def _row(snr: float, est: FerEstimate) -> dict:
    return {"ebn0_db": snr, "n_fe": est.n_fe, "n_t": est.n_t, "fer": est.p_hat, "lb": est.lb,
            "ub": est.ub, "gamma": est.gamma, "method": est.method}


@dataclass(frozen=True)
class Bracket:
    lo_db: float = 0.0
    hi_db: float = 10.0
    resolution_db: float = 0.05

    @property
    def points(self) -> int:
        return int(round((self.hi_db - self.lo_db) / self.resolution_db))

    def snr(self, i: int) -> float:
        return round(self.lo_db + i * self.resolution_db, 10)


def _meets_target(engine: FerEngine, design: CodeDesign, target: float, stop: StopRule,
                  gamma: float) -> tuple[bool, FerEstimate]:
    """Simulate until the interval clears ``target`` on one side or the trial cap is hit."""
    while True:
        n_fe, n_t = engine.counts(design)
        est = engine.estimate(design, gamma)
        if n_t > 0:
            decided = n_fe >= stop.min_errors or n_fe == 0
            if est.ub <= target and decided:
                return True, est
            if est.lb > target and decided:
                return False, est
        if n_t >= stop.max_trials:
            return est.p_hat <= target, est
        engine.simulate_one_error(design, stop.max_trials - n_t)


def required_snr(seq: ReliabilitySequence, ks: Iterable[int], target_fer: float, decoder: DecoderConfig, *,
                 seed: int = 0, bracket: Bracket = Bracket(), stop: StopRule = StopRule(min_errors=10),
                 gamma: float = 0.95, method: str = "normal", batch_size: int = 512,
                 cache: FerCache | None = None) -> list[dict]:
    """Smallest grid Eb/N0 whose FER interval sits at or below ``target_fer``, per dimension.

    Binary search over the grid ``lo + i * resolution``; FER is assumed to fall
    with SNR, which is checked at both bracket ends. A failing bracket is
    reported in that row's ``status`` and the remaining dimensions still run.
    """
    if not 0.0 < target_fer < 1.0:
        raise ValueError("target FER must be in (0, 1)")
    cache = cache if cache is not None else FerCache()
    rows = []
    for k in ks:
        design = design_from_sequence(seq, int(k))
        engines: dict[int, FerEngine] = {}

        def check(i: int) -> tuple[bool, FerEstimate]:
            if i not in engines:
                src = CodingSource(decoder, bracket.snr(i), seed, batch_size)
                engines[i] = FerEngine(src, gamma, method, cache=cache)
            return _meets_target(engines[i], design, target_fer, stop, gamma)

        if design.k == 0:
            rows.append({"k": k, "required_ebn0_db": bracket.lo_db, "fer": 0.0, "lb": 0.0, "ub": 0.0,
                         "n_t": 0, "points_simulated": 0, "status": "ok"})
            continue
        ok_lo, est_lo = check(0)
        if ok_lo:
            rows.append(_snr_row(k, bracket.lo_db, est_lo, 1, "ok"))
            continue
        ok_hi, est_hi = check(bracket.points)
        if not ok_hi:
            rows.append(_snr_row(k, math.nan, est_hi, 2, "bracket_failure"))
            continue
        lo, hi, best = 0, bracket.points, est_hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            ok, est = check(mid)
            if ok:
                hi, best = mid, est
            else:
                lo = mid
        rows.append(_snr_row(k, bracket.snr(hi), best, len(engines), "ok"))
    return rows


def _snr_row(k: int, snr: float, est: FerEstimate, points: int, status: str) -> dict:
    return {"k": k, "required_ebn0_db": snr, "fer": est.p_hat, "lb": est.lb, "ub": est.ub,
            "n_t": est.n_t, "points_simulated": points, "status": status}
