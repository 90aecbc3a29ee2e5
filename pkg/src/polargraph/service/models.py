"""Request and response schemas shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

from ..decoders import BpConfig, DecoderConfig, ScConfig
from ..engine import RaceBudget
from ..intervals import FerEstimate
from ..polar import CodeDesign, design_from_dict, design_to_dict


class DesignModel(BaseModel):
    """Design file schema; ``n`` is the blocklength."""

    n: int
    k: int
    info_indices: list[int]

    def to_design(self) -> CodeDesign:
        return design_from_dict(self.model_dump())

    @classmethod
    def of(cls, design: CodeDesign) -> "DesignModel":
        return cls(**design_to_dict(design))


class DecoderSpec(BaseModel):
    kind: Literal["bp", "sc"] = "bp"
    max_iters: int = Field(20, ge=1)
    llr_clip: float = Field(40.0, gt=0)
    early_stop: bool = True
    exact: bool = False

    def to_config(self) -> DecoderConfig:
        if self.kind == "sc":
            return ScConfig(exact=self.exact)
        return BpConfig(self.max_iters, self.llr_clip, self.early_stop, self.exact)


class SimOptions(BaseModel):
    seed: int = 0
    gamma: float = Field(0.95, gt=0, lt=1)
    interval_method: Literal["normal", "exact"] = "normal"
    batch_size: int = Field(512, ge=1)
    threads: int = Field(1, ge=1)
    all_zero: bool = False


class BudgetModel(BaseModel):
    max_trials_per_code: int = Field(10_000_000, ge=1)
    min_errors_before_prune: int = Field(8, ge=1)
    max_total_frames: Optional[int] = Field(None, ge=1)

    def to_budget(self) -> RaceBudget:
        return RaceBudget(self.max_trials_per_code, self.min_errors_before_prune)


class EstimateModel(BaseModel):
    n_fe: int
    n_t: int
    p_hat: float
    lb: float
    ub: float
    gamma: float
    method: str

    @classmethod
    def of(cls, est: FerEstimate) -> "EstimateModel":
        return cls(n_fe=est.n_fe, n_t=est.n_t, p_hat=est.p_hat, lb=est.lb, ub=est.ub,
                   gamma=est.gamma, method=est.method)


class RankedDesign(BaseModel):
    design: DesignModel
    mask_hex: str
    estimate: EstimateModel


# --------------------------------------------------------------------------- construct

class ConstructRequest(BaseModel):
    N: int
    method: Literal["bhattacharyya", "beta"] = "beta"
    beta: float = 2 ** 0.25
    design_erasure_prob: float = 0.5
    k: Optional[int] = None


class ConstructResponse(BaseModel):
    sequence: list[int]
    design: Optional[DesignModel] = None


# --------------------------------------------------------------------------- simulate

class SimulateRequest(BaseModel):
    design: DesignModel
    snr_db: list[float]
    decoder: DecoderSpec = DecoderSpec()
    options: SimOptions = SimOptions()
    min_errors: int = Field(100, ge=1)
    max_trials: int = Field(10_000_000, ge=1)

    @field_validator("snr_db")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("SNR grid is empty")
        return v


class SimulationRow(BaseModel):
    ebn0_db: float
    n_fe: int
    n_t: int
    fer: float
    lb: float
    ub: float
    gamma: float
    method: str


class SimulateResponse(BaseModel):
    rows: list[SimulationRow]


# --------------------------------------------------------------------------- compare

class CompareRequest(BaseModel):
    designs: list[DesignModel]
    list_size: int = Field(1, ge=1)
    ebn0_db: float
    decoder: DecoderSpec = DecoderSpec()
    options: SimOptions = SimOptions(gamma=0.8)
    budget: BudgetModel = BudgetModel()


class CompareResponse(BaseModel):
    ranked: list[RankedDesign]
    resolved: bool
    frames_simulated: int


# --------------------------------------------------------------------------- searches

class StartSpec(BaseModel):
    """Either an explicit start design or a construction to take it from."""

    design: Optional[DesignModel] = None
    method: Literal["bhattacharyya", "beta"] = "beta"
    beta: float = 2 ** 0.25
    design_erasure_prob: float = 0.5


class SearchSpec(BaseModel):
    list_size: int = Field(4, ge=1)
    ebn0_db: float
    max_outer_iters: int = Field(50, ge=1)
    stall_rounds: int = Field(2, ge=1)


class DesignSingleRequest(BaseModel):
    N: int
    k: int
    start: StartSpec = StartSpec()
    search: SearchSpec
    decoder: DecoderSpec = DecoderSpec()
    options: SimOptions = SimOptions(gamma=0.8)
    budget: BudgetModel = BudgetModel()
    refine_errors: int = Field(0, ge=0)


class DesignSingleResponse(BaseModel):
    ranked: list[RankedDesign]
    iterations: int
    converged: bool
    log: list[dict]
    frames_simulated: int
    frames_decoded: int
    race_calls: int


class DesignSequenceRequest(BaseModel):
    N: int
    k_start: int
    start: StartSpec = StartSpec()
    search: SearchSpec
    decoder: DecoderSpec = DecoderSpec()
    options: SimOptions = SimOptions(gamma=0.8)
    budget: BudgetModel = BudgetModel()


class PerKEstimate(BaseModel):
    k: int
    label: Optional[int]
    mask_hex: str
    estimate: EstimateModel


class DesignSequenceResponse(BaseModel):
    k_start: int
    sequence: list[int]
    tau: float
    per_k: list[PerKEstimate]
    log: list[dict]
    start_log: list[dict]
    frames_simulated: int
    frames_decoded: int


# --------------------------------------------------------------------------- required SNR

class RequiredSnrRequest(BaseModel):
    sequence: list[int]
    ks: list[int]
    target_fer: float = Field(1e-3, gt=0, lt=1)
    decoder: DecoderSpec = DecoderSpec()
    options: SimOptions = SimOptions()
    lo_db: float = 0.0
    hi_db: float = 10.0
    resolution_db: float = Field(0.05, gt=0)
    min_errors: int = Field(10, ge=1)
    max_trials: int = Field(10_000_000, ge=1)


class RequiredSnrRow(BaseModel):
    k: int
    required_ebn0_db: Optional[float]  # None when the bracket fails
    fer: float
    lb: float
    ub: float
    n_t: int
    points_simulated: int
    status: str


class RequiredSnrResponse(BaseModel):
    rows: list[RequiredSnrRow]


# --------------------------------------------------------------------------- jobs

COMMANDS = ("construct", "simulate", "compare", "design-single", "design-sequence", "required-snr")


class JobStatus(BaseModel):
    id: str
    command: str
    status: Literal["queued", "running", "done", "failed"]
    result: Optional[dict] = None
    error: Optional[str] = None
