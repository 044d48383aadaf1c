"""
Pydantic models for model parameters, peeling events and experiment records.
These models are the data contracts shared by the engines and the CLI.
"""
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


class ModelParams(BaseModel):
    """Alpha plus every constant derived from it"""
    alpha: float = Field(..., ge=0.0, lt=1.0)
    regime: Regime
    beta: float = Field(..., gt=0.0, le=1.0)
    q: float = Field(..., ge=0.0, le=2.0 / 27.0 + 1e-12)
    theta: float = Field(..., ge=0.0, le=1.0 / 6.0)
    p_c: Optional[float] = Field(None, ge=0.0, le=1.0)
    p_u: Optional[float] = Field(None, ge=0.0, le=1.0)

    class Config:
        frozen = True

    @property
    def decay(self) -> float:
        """Geometric rate of p_i: beta / (1 - 2 theta)^2"""
        return self.beta / (1.0 - 2.0 * self.theta) ** 2

    @property
    def is_supercritical(self) -> bool:
        return self.regime == Regime.SUPERCRITICAL


class DriftConstants(BaseModel):
    """Supercritical drift and threshold constants"""
    boundary_drift: float
    perc_drift: Optional[float] = None
    p_c: float
    p_u: float


class StepKind(str, Enum):
    ALPHA = "alpha"
    SWALLOW = "swallow"


class Side(str, Enum):
    LEFT = "L"
    RIGHT = "R"


class PeelEvent(BaseModel):
    """Outcome of one peeling step"""
    kind: StepKind
    side: Optional[Side] = None
    i: Optional[int] = Field(None, ge=1, description="Boundary vertices swallowed")
    hole_internal_count: Optional[int] = Field(None, ge=0)
    truncated: bool = False

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_shape(self):
        if self.kind == StepKind.ALPHA:
            if self.side is not None or self.i is not None or self.hole_internal_count is not None:
                raise ValueError("an alpha step carries no side, i or hole")
        elif self.side is None or self.i is None or self.hole_internal_count is None:
            raise ValueError("a swallow step needs side, i and hole_internal_count")
        return self

    @classmethod
    def alpha_step(cls) -> "PeelEvent":
        return cls(kind=StepKind.ALPHA)

    @classmethod
    def swallow(cls, side: Side, i: int, hole_internal_count: int = 0,
                truncated: bool = False) -> "PeelEvent":
        return cls(kind=StepKind.SWALLOW, side=side, i=i,
                   hole_internal_count=hole_internal_count, truncated=truncated)

    @property
    def delta_tilde(self) -> int:
        """+1 for an alpha step, -i for a swallow"""
        return 1 if self.kind == StepKind.ALPHA else -self.i


class ExploreMode(str, Enum):
    STATS_ONLY = "stats_only"
    WITH_GEOMETRY = "with_geometry"


class HullTrace(BaseModel):
    """
    Per-radius record of one hull exploration.
    Index r runs over 0..radius; tau[0] = 0 and the hull of radius 0 is the root vertex.
    """
    alpha: float
    seed: Optional[int] = None
    tau: List[int] = Field(default_factory=lambda: [0])
    boundary_len: List[int] = Field(default_factory=lambda: [1])
    volume: List[int] = Field(default_factory=lambda: [1])
    cut_edges: List[int] = Field(default_factory=lambda: [0], description="Cuts completed by tau_r")
    truncated: bool = False
    truncated_steps: int = Field(0, description="Peel draws whose swallow length hit i_max")
    x_series: Optional[List[int]] = None
    v_series: Optional[List[int]] = None
    s_series: Optional[List[int]] = None

    @property
    def radius(self) -> int:
        return len(self.tau) - 1

    @property
    def delta_tau(self) -> List[int]:
        return [b - a for a, b in zip(self.tau, self.tau[1:])]

    @property
    def iso_ratio(self) -> List[float]:
        return [x / v for x, v in zip(self.boundary_len, self.volume)]


class PercOutcome(str, Enum):
    BLACK_DIED = "black_died"
    WHITE_DIED = "white_died"
    BOTH_EXCEEDED_CAP = "both_exceeded_cap"
    CAP_STEPS = "cap_steps"


class PercFrontier(BaseModel):
    """Boundary-only state of an interface exploration"""
    black_len: int = Field(..., ge=0)
    white_len: int = Field(..., ge=0)
    p: float = Field(..., ge=0.0, le=1.0)
    step_count: int = Field(0, ge=0)
    outcome: Optional[PercOutcome] = None

    @property
    def infinite(self) -> bool:
        return self.outcome == PercOutcome.BOTH_EXCEEDED_CAP


class SurvivalEstimate(BaseModel):
    """Root-cluster walk survival at one p"""
    p: float
    trials: int
    survived: int
    cap: int

    @property
    def frequency(self) -> float:
        return self.survived / self.trials

    @property
    def stderr(self) -> float:
        f = self.frequency
        return max((f * (1.0 - f) / self.trials) ** 0.5, 1.0 / self.trials)


class ThresholdEstimate(BaseModel):
    """Bisection estimate of a percolation threshold"""
    estimate: float
    stderr: float
    bracket: Tuple[float, float]
    threshold_frequency: float
    history: List[SurvivalEstimate] = Field(default_factory=list)


class InterfaceDensity(BaseModel):
    rho_hat: float
    rho_stderr: float
    ek_over_k: float
    ek_stderr: float
    rho_from_ek: float
    rho_ek_stderr: float
    wk_inf_over_k: float
    bk_inf_over_k: float
    max_wb_gap: int = Field(..., ge=0)
    orientation_conflicts: int = Field(0, ge=0)


class PercolationComparison(BaseModel):
    """Full-map reach probabilities against boundary-walk survival"""
    ps: List[float]
    reach: List[float]
    walk_survival: List[float]
    reach_crossing: Optional[float] = None
    walk_crossing: Optional[float] = None
    truncated_replicas: int = 0


class BoundaryMode(str, Enum):
    ABSORB = "absorb"
    REFLECT = "reflect"


class WalkRecord(BaseModel):
    """One simple random walk on a revealed map"""
    seed: Optional[int] = None
    steps: int = Field(..., ge=0, description="Steps actually taken")
    times: List[int] = Field(default_factory=list)
    displacement: List[int] = Field(default_factory=list)
    returns_to_root: int = Field(0, ge=0)
    hit_frontier: bool = False

    @model_validator(mode="after")
    def _check_displacement(self):
        for t, d in zip(self.times, self.displacement):
            if d > t:
                raise ValueError("displacement exceeds elapsed time")
        return self


class FitMethod(str, Enum):
    LINEAR = "linear"
    LOG_LINEAR = "log-linear"
    LOG_LOG = "log-log"
    TAIL_RATIO = "tail-ratio"
    KS = "ks"


class FitResult(BaseModel):
    estimate: float
    stderr: float = Field(..., gt=0.0)
    window: Tuple[float, float]
    method: FitMethod
    intercept: float = 0.0
    n_points: int = Field(0, ge=0)


class ExperimentConfig(BaseModel):
    """Everything needed to reproduce a run"""
    subcommand: Literal["constants", "enumerate", "sample-map", "hull-stats",
                        "percolation", "walk", "tails"]
    alpha: Optional[float] = Field(None, ge=0.0, lt=1.0)
    p: Optional[float] = Field(None, ge=0.0, le=1.0)
    radius: Optional[int] = Field(None, ge=1)
    n: Optional[int] = Field(None, ge=0)
    n_max: Optional[int] = Field(None, ge=0)
    m: Optional[int] = Field(None, ge=2)
    k: Optional[int] = Field(None, ge=1)
    replicas: int = Field(1, ge=1)
    samples: int = Field(10_000, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    i_max: int = Field(1_000_000, ge=1)
    max_steps: int = Field(5_000_000, ge=1)
    max_vertices: int = Field(2_000_000, ge=1)
    cap: int = Field(10_000, ge=1)
    trials: int = Field(10_000, ge=1)
    output: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"
    task: Optional[str] = Field(None, description="Sub-task of a subcommand (e.g. percolation pc / survival)")
    boundary: Literal["absorb", "reflect"] = "absorb"
    workers: int = Field(1, ge=1)
    extra: Dict[str, float] = Field(default_factory=dict)

    def echo(self) -> Dict:
        """Config as written into output headers (worker count excluded)"""
        return self.model_dump(mode="json", exclude={"workers", "output"})
