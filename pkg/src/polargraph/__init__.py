"""Polar code design by graph search with confidence-interval-gated Monte Carlo."""

__version__ = "0.1.0"

from .channel import ChannelSetup, RngStream, ebn0_to_sigma2, transmit
from .decoders import BpConfig, ScConfig, bp_decode, decode_batch, ml_decode_bruteforce, sc_decode
from .engine import (
    BudgetExhausted,
    CodingSource,
    FerCache,
    FerEngine,
    RaceBudget,
    select_best_codes,
    simulate_one_error,
)
from .evaluation import Bracket, StopRule, required_snr, simulate_sweep
from .intervals import FerEstimate, confidence_delta, estimate, exact_interval, inverse_q
from .polar import (
    CodeDesign,
    GraphEdge,
    ReliabilitySequence,
    beta_expansion_sequence,
    bhattacharyya_sequence,
    design_from_sequence,
    encode,
    left_neighbors,
    path_from_sequence,
    polar_transform,
    precedes,
    right_neighbors,
    sequence_from_path,
)
from .search import (
    SearchConfig,
    SequencePath,
    augment_paths,
    optimize_sequence,
    optimize_single,
    path_metric,
)

__all__ = [name for name in dir() if not name.startswith("_")]
