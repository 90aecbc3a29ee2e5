"""Monte Carlo FER estimation and confidence-interval racing of candidate designs.

Every (design, setup) pair owns a deterministic, infinite sequence of frame
outcomes: frame ``t`` lives in batch ``t // batch_size`` and each batch is
simulated from its own counter-based random stream. The FER cache stores
``(n_fe, n_t)`` per design, so ``n_t`` doubles as the cursor into that
sequence. Results therefore do not depend on scheduling or worker count,
and a run restarted from a saved cache continues where it stopped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .channel import RngStream, ebn0_to_sigma2, esn0_to_sigma2, transmit
from .decoders import DecoderConfig, decode_batch
from .intervals import FerEstimate, estimate
from .polar import CodeDesign, encode, sort_key

log = logging.getLogger(__name__)


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


class FrameSource(Protocol):
    """Anything that can tell, batch by batch, which frames of a design fail."""

    ebn0_db: float
    tag: str
    batch_size: int

    def error_flags(self, design: CodeDesign, batch_index: int) -> np.ndarray: ...


@dataclass(frozen=True)
class CodingSource:
    """Random information words, BPSK/AWGN and a decoder.

    ``snr_db`` is Eb/N0 by default (noise depends on the design's rate);
    with ``snr_mode="esn0"`` every design sees the same noise variance.
    """

    decoder: DecoderConfig
    snr_db: float
    seed: int = 0
    batch_size: int = 512
    all_zero: bool = False
    snr_mode: str = "ebn0"

    def __post_init__(self):
        if self.snr_mode not in ("ebn0", "esn0"):
            raise ValueError(f"unknown SNR mode {self.snr_mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    @property
    def ebn0_db(self) -> float:
        return self.snr_db

    @property
    def tag(self) -> str:
        tag = self.decoder.tag
        if self.snr_mode == "esn0":
            tag += "|esn0"
        if self.all_zero:
            tag += "|allzero"
        return tag

    def sigma2(self, design: CodeDesign) -> float:
        if self.snr_mode == "esn0":
            return esn0_to_sigma2(self.snr_db)
        return ebn0_to_sigma2(self.snr_db, design.rate)

    def stream(self, design: CodeDesign) -> RngStream:
        setup = stable_hash(f"{self.tag}|{self.snr_db!r}|{self.batch_size}")
        return RngStream(self.seed, design.stable_hash ^ setup)

    def error_flags(self, design: CodeDesign, batch_index: int) -> np.ndarray:
        B = self.batch_size
        if design.k == 0:
            return np.zeros(B, dtype=bool)
        gen = self.stream(design).substream(batch_index).generator
        if self.all_zero:
            info = np.zeros((B, design.k), dtype=np.uint8)
        else:
            info = gen.integers(0, 2, size=(B, design.k), dtype=np.uint8)
        llrs = transmit(encode(design, info), self.sigma2(design), gen)
        res = decode_batch(design, llrs, self.decoder)
        return np.any(res.u_hat[:, design.info_mask] != info, axis=1)


class BudgetExhausted(RuntimeError):
    """The run-wide frame budget was used up."""


@dataclass(frozen=True)
class RaceBudget:
    max_trials_per_code: int = 10_000_000
    min_errors_before_prune: int = 8

    def __post_init__(self):
        if self.max_trials_per_code < 1 or self.min_errors_before_prune < 1:
            raise ValueError("race budget entries must be positive")


class FerCache:
    """Accumulated ``(n_fe, n_t)`` per (design, Eb/N0, decoder tag).

    Stored as JSON lines with fields ``mask_hex, n, ebn0_db, decoder, n_fe, n_t``
    where ``n`` is the blocklength.
    """

    def __init__(self):
        self._data: dict[tuple[int, int, float, str], list[int]] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(design: CodeDesign, source: FrameSource):
        return (design.N, design.mask, float(source.ebn0_db), source.tag)

    def get(self, design: CodeDesign, source: FrameSource) -> tuple[int, int]:
        n_fe, n_t = self._data.get(self._key(design, source), (0, 0))
        return n_fe, n_t

    def put(self, design: CodeDesign, source: FrameSource, n_fe: int, n_t: int) -> None:
        with self._lock:
            self._data[self._key(design, source)] = [int(n_fe), int(n_t)]

    def add(self, N: int, mask: int, ebn0_db: float, decoder: str, n_fe: int, n_t: int) -> None:
        with self._lock:
            entry = self._data.setdefault((N, mask, float(ebn0_db), decoder), [0, 0])
            entry[0] += int(n_fe)
            entry[1] += int(n_t)

    def __len__(self):
        return len(self._data)

    def records(self) -> list[dict]:
        rows = []
        for (N, mask, ebn0, dec), (n_fe, n_t) in sorted(self._data.items()):
            design = CodeDesign(N.bit_length() - 1, mask)
            rows.append({"mask_hex": design.mask_hex, "n": N, "ebn0_db": ebn0,
                         "decoder": dec, "n_fe": n_fe, "n_t": n_t})
        return rows

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("".join(json.dumps(r) + "\n" for r in self.records()))
        tmp.replace(path)

    def merge_file(self, path: str | Path) -> None:
        """Add counts from a cache file (counts of existing keys are summed)."""
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            r = json.loads(line)
            design = CodeDesign.from_mask_hex(int(r["n"]), r["mask_hex"])
            self.add(design.N, design.mask, r["ebn0_db"], r["decoder"], r["n_fe"], r["n_t"])

    @classmethod
    def load(cls, path: str | Path) -> "FerCache":
        cache = cls()
        if Path(path).exists():
            cache.merge_file(path)
        return cache


@dataclass
class RaceRound:
    shared_errors: int
    alive: list[CodeDesign]
    n_fe: list[int]
    cutoff: float | None


@dataclass
class RaceResult:
    ranked: list[tuple[CodeDesign, FerEstimate]]
    resolved: bool = True
    rounds: list[RaceRound] = field(default_factory=list)

    @property
    def designs(self) -> list[CodeDesign]:
        return [d for d, _ in self.ranked]


class FerEngine:
    """Simulation front end shared by all searches of one run."""

    def __init__(self, source: FrameSource, gamma: float = 0.8, method: str = "normal",
                 budget: RaceBudget = RaceBudget(), cache: FerCache | None = None, threads: int = 1,
                 max_total_frames: int | None = None):
        self.source = source
        self.gamma = gamma
        self.method = method
        self.budget = budget
        self.cache = cache if cache is not None else FerCache()
        self.threads = max(1, int(threads))
        self.max_total_frames = max_total_frames
        self.frames_decoded = 0
        self.frames_consumed = 0
        self.race_calls = 0
        self.fallbacks = 0
        self.best_fer_per_k: dict[int, float] = {}
        self._buffers: dict[CodeDesign, tuple[int, np.ndarray]] = {}
        self._lock = threading.Lock()
        estimate(0, 1, gamma, method)  # validates gamma and method

    def state_dict(self) -> dict:
        """Counters needed to continue a run from a checkpoint (the cache is saved separately)."""
        return {
            "frames_decoded": self.frames_decoded,
            "frames_consumed": self.frames_consumed,
            "race_calls": self.race_calls,
            "fallbacks": self.fallbacks,
            "best_fer_per_k": {str(k): v for k, v in sorted(self.best_fer_per_k.items())},
        }

    def load_state(self, state: dict) -> None:
        self.frames_decoded = int(state["frames_decoded"])
        self.frames_consumed = int(state["frames_consumed"])
        self.race_calls = int(state["race_calls"])
        self.fallbacks = int(state["fallbacks"])
        self.best_fer_per_k = {int(k): float(v) for k, v in state["best_fer_per_k"].items()}

    # ------------------------------------------------------------------ counts
    def counts(self, design: CodeDesign) -> tuple[int, int]:
        return self.cache.get(design, self.source)

    def estimate(self, design: CodeDesign, gamma: float | None = None) -> FerEstimate:
        n_fe, n_t = self.counts(design)
        return estimate(n_fe, n_t, self.gamma if gamma is None else gamma, self.method)

    def _flags(self, design: CodeDesign, batch_index: int) -> np.ndarray:
        held = self._buffers.get(design)
        if held is not None and held[0] == batch_index:
            return held[1]
        flags = np.asarray(self.source.error_flags(design, batch_index), dtype=bool)
        with self._lock:
            self.frames_decoded += flags.size
        self._buffers[design] = (batch_index, flags)
        return flags

    def _advance(self, design: CodeDesign, stop_errors: int, trial_cap: int) -> tuple[int, int]:
        """Consume frames until ``stop_errors`` new errors or ``trial_cap`` frames."""
        n_fe, n_t = self.counts(design)
        if design.k == 0:
            # no information bits: the frame-error sequence is identically zero
            self.cache.put(design, self.source, n_fe, n_t + trial_cap)
            return trial_cap, 0
        if self.max_total_frames is not None and self.frames_consumed >= self.max_total_frames:
            raise BudgetExhausted(f"frame budget of {self.max_total_frames} used up")
        B = self.source.batch_size
        used, found = 0, 0
        while used < trial_cap and found < stop_errors:
            b, off = divmod(n_t + used, B)
            window = self._flags(design, b)[off: off + trial_cap - used]
            hits = np.flatnonzero(window)
            need = stop_errors - found
            if hits.size >= need:
                used += int(hits[need - 1]) + 1
                found = stop_errors
            else:
                used += window.size
                found += hits.size
        self.cache.put(design, self.source, n_fe + found, n_t + used)
        with self._lock:
            self.frames_consumed += used
        return used, found

    def simulate_one_error(self, design: CodeDesign, trial_cap: int) -> tuple[int, bool]:
        """Simulate until the next frame error or ``trial_cap`` trials."""
        if trial_cap < 1:
            raise ValueError("trial_cap must be >= 1")
        used, found = self._advance(design, 1, trial_cap)
        return used, bool(found)

    def measure(self, design: CodeDesign, min_errors: int, max_trials: int | None = None) -> FerEstimate:
        """Extend a design's record to at least ``min_errors`` errors (or ``max_trials`` trials)."""
        max_trials = self.budget.max_trials_per_code if max_trials is None else max_trials
        n_fe, n_t = self.counts(design)
        if n_fe < min_errors and n_t < max_trials:
            self._advance(design, min_errors - n_fe, max_trials - n_t)
        return self.estimate(design)

    def observe(self, designs: Iterable[CodeDesign]) -> None:
        """Fold simulated designs into the running per-dimension best FER."""
        for d in designs:
            n_fe, n_t = self.counts(d)
            if n_t == 0 or d.k == 0:
                continue
            p = self.estimate(d).floored_p_hat()
            if p < self.best_fer_per_k.get(d.k, np.inf):
                self.best_fer_per_k[d.k] = p

    # ------------------------------------------------------------------ racing
    def _rank(self, designs: Iterable[CodeDesign], gamma: float | None = None) -> list[tuple[CodeDesign, FerEstimate]]:
        pairs = [(d, self.estimate(d, gamma)) for d in designs]
        pairs.sort(key=lambda p: (p[1].p_hat, p[1].ub, sort_key(p[0])))
        return pairs

    def _run_round(self, todo: list[tuple[CodeDesign, int]]) -> None:
        if self.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                list(pool.map(lambda job: self.simulate_one_error(*job), todo))
        else:
            for job in todo:
                self.simulate_one_error(*job)

    def select_best(self, candidates: Iterable[CodeDesign], L: int, gamma: float | None = None,
                    trace: bool = False) -> RaceResult:
        """Race candidates until at most ``L`` remain, pruning by confidence intervals."""
        gamma = self.gamma if gamma is None else gamma
        alive = list(dict.fromkeys(candidates))
        if not alive:
            raise ValueError("no candidate designs")
        if L < 1:
            raise ValueError("L must be >= 1")
        self.race_calls += 1
        budget = self.budget
        rounds: list[RaceRound] = []
        shared = min(self.counts(d)[0] for d in alive)
        resolved = True
        while len(alive) > L:
            shared += 1
            todo = []
            for d in alive:
                n_fe, n_t = self.counts(d)
                if n_fe < shared and n_t < budget.max_trials_per_code:
                    todo.append((d, budget.max_trials_per_code - n_t))
            self._run_round(todo)
            ests = {d: self.estimate(d, gamma) for d in alive}
            cutoff = None
            if any(e.n_t >= budget.max_trials_per_code for e in ests.values()):
                alive = [d for d, _ in self._rank(alive, gamma)[:L]]
                resolved = False
                self.fallbacks += 1
            elif shared >= budget.min_errors_before_prune:
                by_ub = sorted(alive, key=lambda d: (ests[d].ub, ests[d].p_hat, sort_key(d)))
                cutoff = ests[by_ub[L - 1]].ub
                keep = set(by_ub[:L])
                alive = [d for d in alive if d in keep or ests[d].lb < cutoff]
            if trace:
                rounds.append(RaceRound(shared, list(alive), [ests[d].n_fe for d in alive], cutoff))
        self.observe(dict.fromkeys(candidates))
        # pruned designs can be re-simulated later; their batch is simply regenerated
        for d in set(dict.fromkeys(candidates)) - set(alive):
            self._buffers.pop(d, None)
        return RaceResult(self._rank(alive, gamma), resolved, rounds)


def select_best_codes(candidates: Iterable[CodeDesign], L: int, gamma: float,
                      engine: FerEngine) -> list[tuple[CodeDesign, FerEstimate]]:
    """Best ``L`` designs with their estimates, best first."""
    return engine.select_best(candidates, L, gamma).ranked


def simulate_one_error(design: CodeDesign, engine: FerEngine, trial_cap: int) -> tuple[int, bool]:
    return engine.simulate_one_error(design, trial_cap)
