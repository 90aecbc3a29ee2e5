"""In-process implementations of every service operation.

The HTTP app and the local CLI backend both call these. Hooks (``cache``,
``source``, progress callbacks, checkpoint resume) are keyword-only so the
JSON surface stays the request model alone.
"""

from __future__ import annotations

import math
from typing import Callable

from ..engine import CodingSource, FerCache, FerEngine, FrameSource
from ..evaluation import Bracket, StopRule, required_snr, simulate_sweep
from ..polar import (
    CodeDesign,
    ReliabilitySequence,
    beta_expansion_sequence,
    bhattacharyya_sequence,
    design_from_sequence,
)
from ..search import SearchConfig, SequenceSearchState, optimize_sequence, optimize_single
from .models import (
    CompareRequest,
    CompareResponse,
    ConstructRequest,
    ConstructResponse,
    DesignModel,
    DesignSequenceRequest,
    DesignSequenceResponse,
    DesignSingleRequest,
    DesignSingleResponse,
    EstimateModel,
    PerKEstimate,
    RankedDesign,
    RequiredSnrRequest,
    RequiredSnrResponse,
    SimulateRequest,
    SimulateResponse,
    StartSpec,
)


def _check_N(N: int) -> None:
    if N < 2 or N & (N - 1):
        raise ValueError(f"blocklength must be a power of two >= 2, got {N}")


def _construct_sequence(N: int, method: str, beta: float, erasure: float) -> ReliabilitySequence:
    _check_N(N)
    if method == "beta":
        if beta <= 1.0:
            raise ValueError("beta must exceed 1")
        return beta_expansion_sequence(N, beta)
    if method == "bhattacharyya":
        if not 0.0 <= erasure <= 1.0:
            raise ValueError("design erasure probability must be in [0, 1]")
        return bhattacharyya_sequence(N, erasure)
    raise ValueError(f"unknown construction method {method!r}")


def _ranked(pairs) -> list[RankedDesign]:
    return [RankedDesign(design=DesignModel.of(d), mask_hex=d.mask_hex, estimate=EstimateModel.of(e))
            for d, e in pairs]


def _engine(req, cache: FerCache | None, source: FrameSource | None, ebn0_db: float) -> FerEngine:
    opts = req.options
    if source is None:
        source = CodingSource(req.decoder.to_config(), ebn0_db, opts.seed, opts.batch_size, opts.all_zero)
    return FerEngine(source, opts.gamma, opts.interval_method, req.budget.to_budget(), cache,
                     opts.threads, req.budget.max_total_frames)


def construct(req: ConstructRequest) -> ConstructResponse:
    seq = _construct_sequence(req.N, req.method, req.beta, req.design_erasure_prob)
    design = None
    if req.k is not None:
        if not 0 <= req.k <= req.N:
            raise ValueError(f"k must be in [0, {req.N}]")
        design = DesignModel.of(design_from_sequence(seq, req.k))
    return ConstructResponse(sequence=list(seq.order), design=design)


def simulate(req: SimulateRequest, *, cache: FerCache | None = None) -> SimulateResponse:
    opts = req.options
    rows = simulate_sweep(req.design.to_design(), req.snr_db, req.decoder.to_config(), seed=opts.seed,
                          stop=StopRule(req.min_errors, req.max_trials), gamma=opts.gamma,
                          method=opts.interval_method, batch_size=opts.batch_size, cache=cache)
    return SimulateResponse(rows=rows)


def compare(req: CompareRequest, *, cache: FerCache | None = None,
            source: FrameSource | None = None) -> CompareResponse:
    designs = [m.to_design() for m in req.designs]
    if not designs:
        raise ValueError("no designs to compare")
    if len({d.N for d in designs}) > 1:
        raise ValueError("designs must share one blocklength")
    engine = _engine(req, cache, source, req.ebn0_db)
    result = engine.select_best(designs, req.list_size)
    ranked = result.ranked
    if any(e.n_t == 0 for _, e in ranked):
        # too few candidates to race; still report numbers for them
        for d, _ in ranked:
            engine.measure(d, req.budget.min_errors_before_prune)
        ranked = engine._rank([d for d, _ in ranked])
    return CompareResponse(ranked=_ranked(ranked), resolved=result.resolved,
                           frames_simulated=engine.frames_consumed)


def _start_design(N: int, k: int, start: StartSpec) -> CodeDesign:
    if start.design is not None:
        design = start.design.to_design()
        if design.N != N or design.k != k:
            raise ValueError(f"start design is ({design.N},{design.k}), expected ({N},{k})")
        return design
    return design_from_sequence(_construct_sequence(N, start.method, start.beta, start.design_erasure_prob), k)


def _search_config(req) -> SearchConfig:
    s = req.search
    return SearchConfig(s.list_size, req.options.gamma, s.ebn0_db, s.max_outer_iters, s.stall_rounds)


def design_single(req: DesignSingleRequest, *, cache: FerCache | None = None, source: FrameSource | None = None,
                  on_iteration: Callable[[dict], None] | None = None) -> DesignSingleResponse:
    _check_N(req.N)
    if not 0 < req.k < req.N:
        raise ValueError(f"single-design search needs 0 < k < N, got k={req.k}")
    start = _start_design(req.N, req.k, req.start)
    engine = _engine(req, cache, source, req.search.ebn0_db)
    result = optimize_single(start, _search_config(req), engine, on_iteration)
    ranked = result.ranked
    if req.refine_errors:
        for d, _ in ranked:
            engine.measure(d, req.refine_errors)
        ranked = engine._rank([d for d, _ in ranked])
    return DesignSingleResponse(ranked=_ranked(ranked), iterations=result.iterations,
                                converged=result.converged, log=result.history,
                                frames_simulated=engine.frames_consumed,
                                frames_decoded=engine.frames_decoded, race_calls=engine.race_calls)


def design_sequence(req: DesignSequenceRequest, *, cache: FerCache | None = None,
                    source: FrameSource | None = None, resume: dict | None = None,
                    on_checkpoint: Callable[[dict], None] | None = None) -> DesignSequenceResponse:
    """Beam search for a spanning sequence.

    ``on_checkpoint`` receives a JSON-able dict after every step; passing that
    dict back as ``resume`` (with the same cache contents) continues the run
    exactly.
    """
    _check_N(req.N)
    if not 0 <= req.k_start <= req.N:
        raise ValueError(f"k_start must be in [0, {req.N}]")
    cfg = _search_config(req)
    engine = _engine(req, cache, source, req.search.ebn0_db)
    request_dump = req.model_dump(mode="json")
    # the frame budget may be raised when resuming a run that ran out of it
    request_key = req.model_dump(mode="json", exclude={"budget": {"max_total_frames"}})
    log: list[dict] = []
    start_log: list[dict] = []
    state = None

    if resume is not None:
        saved = dict(resume.get("request") or {})
        saved["budget"] = {k: v for k, v in saved.get("budget", {}).items() if k != "max_total_frames"}
        if saved != request_key:
            raise ValueError("checkpoint was written for a different request")
        engine.load_state(resume["engine"])
        state = SequenceSearchState.from_dict(resume["state"])
        log = list(resume["log"])
        start_log = list(resume["start_log"])

    starts: list[CodeDesign] = []
    if state is None:
        if req.k_start == 0:
            starts = [CodeDesign.all_frozen(req.N)]
        elif req.k_start == req.N:
            starts = [CodeDesign.all_information(req.N)]
        else:
            single = optimize_single(_start_design(req.N, req.k_start, req.start), cfg, engine)
            start_log = single.history
            starts = [d for d, _ in single.ranked]

    def on_step(st: SequenceSearchState, row: dict) -> None:
        log.append(row)
        if on_checkpoint:
            on_checkpoint({"request": request_dump, "state": st.to_dict(), "engine": engine.state_dict(),
                           "log": list(log), "start_log": list(start_log)})

    result = optimize_sequence(starts, cfg, engine, resume=state, on_step=on_step)
    best = result.best
    labels = (None,) + best.edge_labels
    per_k = [PerKEstimate(k=d.k, label=lab, mask_hex=d.mask_hex, estimate=EstimateModel.of(engine.estimate(d)))
             for d, lab in zip(best.designs, labels)]
    return DesignSequenceResponse(k_start=req.k_start, sequence=list(result.sequence.order), tau=best.metric, per_k=per_k,
                                  log=log, start_log=start_log, frames_simulated=engine.frames_consumed,
                                  frames_decoded=engine.frames_decoded)


def required_snr_run(req: RequiredSnrRequest, *, cache: FerCache | None = None) -> RequiredSnrResponse:
    seq = ReliabilitySequence(tuple(req.sequence))
    for k in req.ks:
        if not 0 <= k <= seq.N:
            raise ValueError(f"k={k} outside [0, {seq.N}]")
    if req.hi_db <= req.lo_db:
        raise ValueError("bracket upper end must exceed lower end")
    opts = req.options
    rows = required_snr(seq, req.ks, req.target_fer, req.decoder.to_config(), seed=opts.seed,
                        bracket=Bracket(req.lo_db, req.hi_db, req.resolution_db),
                        stop=StopRule(req.min_errors, req.max_trials), gamma=opts.gamma,
                        method=opts.interval_method, batch_size=opts.batch_size, cache=cache)
    for row in rows:
        if math.isnan(row["required_ebn0_db"]):
            row["required_ebn0_db"] = None
    return RequiredSnrResponse(rows=rows)


HANDLERS = {
    "construct": construct,
    "simulate": simulate,
    "compare": compare,
    "design-single": design_single,
    "design-sequence": design_sequence,
    "required-snr": required_snr_run,
}
