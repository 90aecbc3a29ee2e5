"""Graph searches: bit-swap optimization of one design and beam search for sequences."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .engine import FerEngine
from .intervals import FerEstimate
from .polar import (
    CodeDesign,
    GraphEdge,
    ReliabilitySequence,
    left_neighbors,
    right_neighbors,
    sequence_from_path,
    sort_key,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    list_size: int = 4
    gamma: float = 0.8
    ebn0_db: float = 0.0
    max_outer_iters: int = 50
    stall_rounds: int = 2

    def __post_init__(self):
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.max_outer_iters < 1 or self.stall_rounds < 1:
            raise ValueError("max_outer_iters and stall_rounds must be >= 1")


def _unique(designs: Iterable[CodeDesign]) -> list[CodeDesign]:
    return list(dict.fromkeys(designs))


# --------------------------------------------------------------------------- single design

@dataclass
class SingleSearchResult:
    ranked: list[tuple[CodeDesign, FerEstimate]]
    iterations: int
    converged: bool
    history: list[dict] = field(default_factory=list)

    @property
    def best(self) -> CodeDesign:
        return self.ranked[0][0]


def optimize_single(start: CodeDesign, cfg: SearchConfig, engine: FerEngine,
                    on_iteration: Callable[[dict], None] | None = None) -> SingleSearchResult:
    """Alternate between freezing one bit and unfreezing one bit, keeping the best ``L``."""
    if start.k in (0, start.N):
        raise ValueError("start design needs 0 < k < N to swap bits")
    L = cfg.list_size
    current = [start]
    previous = frozenset(current)
    stable, converged, history = 0, False, []
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        left = _unique(e.source for d in current for e in left_neighbors(d))
        current = engine.select_best(left, L, cfg.gamma).designs
        right = _unique(e.target for d in current for e in right_neighbors(d))
        current = engine.select_best(right, L, cfg.gamma).designs
        now = frozenset(current)
        stable = stable + 1 if now == previous else 0
        previous = now
        best = engine.estimate(current[0], cfg.gamma)
        row = {
            "iteration": it,
            "k": start.k,
            "best_mask_hex": current[0].mask_hex,
            "best_fer": best.p_hat,
            "best_n_fe": best.n_fe,
            "best_n_t": best.n_t,
            "changed": int(stable == 0),
            "total_frames_simulated": engine.frames_consumed,
        }
        history.append(row)
        if on_iteration:
            on_iteration(row)
        log.info("iteration %d: best %s FER %.3e, frames %d", it, current[0].mask_hex,
                 best.p_hat, engine.frames_consumed)
        if stable >= cfg.stall_rounds:
            converged = True
            break
    ranked = engine._rank(current, cfg.gamma)
    return SingleSearchResult(ranked, it, converged, history)


# --------------------------------------------------------------------------- sequences

@dataclass(frozen=True)
class SequencePath:
    """Chain of neighboring designs of consecutive dimensions."""

    designs: tuple[CodeDesign, ...]
    metric: float = 0.0

    def __post_init__(self):
        if not self.designs:
            raise ValueError("a path holds at least one design")
        for a, b in zip(self.designs, self.designs[1:]):
            if a.n != b.n or b.k != a.k + 1 or a.mask & b.mask != a.mask:
                raise ValueError("consecutive designs must be graph neighbors of increasing dimension")

    @property
    def first(self) -> CodeDesign:
        return self.designs[0]

    @property
    def last(self) -> CodeDesign:
        return self.designs[-1]

    @property
    def k_min(self) -> int:
        return self.first.k

    @property
    def k_max(self) -> int:
        return self.last.k

    @property
    def edge_labels(self) -> tuple[int, ...]:
        return tuple((b.mask ^ a.mask).bit_length() - 1 for a, b in zip(self.designs, self.designs[1:]))

    def edges(self) -> list[GraphEdge]:
        return [GraphEdge(a, b, j) for (a, b), j in zip(zip(self.designs, self.designs[1:]), self.edge_labels)]

    def sequence(self) -> ReliabilitySequence:
        return sequence_from_path(self.edges())

    @classmethod
    def from_labels(cls, first: CodeDesign, labels: Iterable[int], metric: float = 0.0) -> "SequencePath":
        designs = [first]
        for j in labels:
            designs.append(designs[-1].with_bit(j, True))
        return cls(tuple(designs), metric)


def _fer_value(value) -> float:
    if isinstance(value, FerEstimate):
        return value.floored_p_hat()
    return float(value)


def path_metric(path: SequencePath, best_fer_per_k: Mapping[int, float],
                fer: Mapping[CodeDesign, FerEstimate | float] | Callable[[CodeDesign], FerEstimate | float]) -> float:
    """Summed log-ratio of each design's FER to the best FER found at its dimension.

    The all-frozen design has no information bits and contributes nothing.
    """
    lookup = fer if callable(fer) else fer.__getitem__
    tau = 0.0
    for d in path.designs:
        if d.k == 0:
            continue
        try:
            value = lookup(d)
        except KeyError:
            raise KeyError(f"no FER estimate for {d!r}") from None
        if isinstance(value, FerEstimate) and not value.simulated:
            raise KeyError(f"no FER estimate for {d!r}")
        if d.k not in best_fer_per_k:
            raise KeyError(f"no best FER recorded for k={d.k}")
        tau += math.log(_fer_value(value)) - math.log(best_fer_per_k[d.k])
    return tau


def augment_paths(paths: Iterable[SequencePath], survivors: Iterable[CodeDesign | tuple[CodeDesign, FerEstimate]],
                  direction: str) -> list[SequencePath]:
    """Extend every path by every adjacent survivor; paths with none are dropped."""
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    codes = [s[0] if isinstance(s, tuple) else s for s in survivors]
    out: dict[tuple[CodeDesign, ...], SequencePath] = {}
    for p in paths:
        for c in codes:
            if direction == "up":
                ok = c.k == p.k_max + 1 and p.last.mask & c.mask == p.last.mask
                designs = p.designs + (c,) if ok else None
            else:
                ok = c.k == p.k_min - 1 and c.mask & p.first.mask == c.mask
                designs = (c,) + p.designs if ok else None
            if designs is not None and designs not in out:
                out[designs] = SequencePath(designs)
    return list(out.values())


@dataclass
class SequenceSearchState:
    paths: list[SequencePath]
    k_min: int
    k_max: int
    step: int = 0

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "N": self.paths[0].first.N,
            "paths": [{"start_mask_hex": p.first.mask_hex, "labels": list(p.edge_labels), "tau": p.metric}
                      for p in self.paths],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SequenceSearchState":
        N = int(data["N"])
        paths = [SequencePath.from_labels(CodeDesign.from_mask_hex(N, p["start_mask_hex"]), p["labels"], p["tau"])
                 for p in data["paths"]]
        return cls(paths, int(data["k_min"]), int(data["k_max"]), int(data["step"]))


@dataclass
class SequenceSearchResult:
    best: SequencePath
    paths: list[SequencePath]
    log: list[dict]

    @property
    def sequence(self) -> ReliabilitySequence:
        return self.best.sequence()


def _ensure_estimates(engine: FerEngine, designs: Iterable[CodeDesign]) -> None:
    # races that start with <= L candidates skip simulation; the path metric still needs numbers
    designs = list(designs)
    for d in designs:
        if d.k > 0 and engine.counts(d)[1] == 0:
            engine.measure(d, engine.budget.min_errors_before_prune)
    engine.observe(designs)


def _trials(engine: FerEngine, path: SequencePath) -> int:
    return sum(engine.counts(d)[1] for d in path.designs if d.k > 0)


def _prune(paths: list[SequencePath], L: int, engine: FerEngine, gamma: float) -> list[SequencePath]:
    scored = []
    for p in paths:
        tau = path_metric(p, engine.best_fer_per_k, lambda d: engine.estimate(d, gamma))
        scored.append(SequencePath(p.designs, tau))
    scored.sort(key=lambda p: (p.metric, _trials(engine, p), tuple(sort_key(d) for d in p.designs)))
    return scored[:L]


def optimize_sequence(start_codes: Iterable[CodeDesign], cfg: SearchConfig, engine: FerEngine,
                      resume: SequenceSearchState | None = None,
                      on_step: Callable[[SequenceSearchState, dict], None] | None = None) -> SequenceSearchResult:
    """Grow rate-compatible chains of neighboring designs outward to k = 0 and k = N."""
    L, gamma = cfg.list_size, cfg.gamma
    history: list[dict] = []
    if resume is None:
        starts = _unique(start_codes)
        if not starts:
            raise ValueError("no start codes")
        k_start = starts[0].k
        if any(d.k != k_start or d.n != starts[0].n for d in starts):
            raise ValueError("start codes must share blocklength and dimension")
        survivors = engine.select_best(starts, L, gamma).designs
        _ensure_estimates(engine, survivors)
        state = SequenceSearchState([SequencePath((d,)) for d in survivors], k_start, k_start)
        state.paths = _prune(state.paths, L, engine, gamma)
    else:
        state = resume
    N = state.paths[0].first.N

    while state.k_min > 0 or state.k_max < N:
        paths = state.paths
        if state.k_max < N:
            state.k_max += 1
            batch = _unique(e.target for p in paths for e in right_neighbors(p.last))
            survivors = engine.select_best(batch, L, gamma).designs
            _ensure_estimates(engine, survivors)
            paths = augment_paths(paths, survivors, "up")
        if state.k_min > 0:
            state.k_min -= 1
            batch = _unique(e.source for p in paths for e in left_neighbors(p.first))
            survivors = engine.select_best(batch, L, gamma).designs
            _ensure_estimates(engine, survivors)
            paths = augment_paths(paths, survivors, "down")
        state.paths = _prune(paths, L, engine, gamma)
        state.step += 1
        row = {
            "step": state.step,
            "k_min": state.k_min,
            "k_max": state.k_max,
            "n_paths": len(state.paths),
            "best_tau": state.paths[0].metric,
            "total_frames_simulated": engine.frames_consumed,
        }
        history.append(row)
        log.info("step %d: k in [%d, %d], %d paths, best tau %.4f", state.step, state.k_min,
                 state.k_max, len(state.paths), row["best_tau"])
        if on_step:
            on_step(state, row)
    best = min(state.paths, key=lambda p: p.metric)
    return SequenceSearchResult(best, state.paths, history)
