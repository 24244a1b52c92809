"""Request/response models for the HTTP service (and the CLI's internal API).

Every CLI subcommand maps onto one request model here; the CLI renders its
CSV/JSON output from the response models, whether those came from an
in-process handler call or over HTTP.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class CustomGraph(BaseModel):
    size: int
    generators: list[list[int]]
    labels: list[str] | None = None
    auto_close_inverses: bool = False


class GraphInput(BaseModel):
    """Exactly one of ``spec`` (mini-spec string) or ``custom``."""

    spec: str | None = None
    custom: CustomGraph | None = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.spec is None) == (self.custom is None):
            raise ValueError("provide exactly one of 'spec' or 'custom'")
        return self


class FunctionInput(BaseModel):
    """Exactly one of ``spec`` (named family or path) or explicit ``values``."""

    spec: str | None = None
    values: list[int] | None = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.spec is None) == (self.values is None):
            raise ValueError("provide exactly one of 'spec' or 'values'")
        return self


# ---------------------------------------------------------------- requests


class GraphRequest(BaseModel):
    graph: GraphInput


class SpectrumRequest(BaseModel):
    graph: GraphInput
    include_eigenvectors: bool = False


class FunctionRequest(BaseModel):
    graph: GraphInput
    fn: FunctionInput


class CovRequest(BaseModel):
    graph: GraphInput
    fn: FunctionInput
    t: list[float] | None = None
    T: float | None = None
    epsilons: list[float] | None = None
    k_values: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _mode(self):
        if self.t is None and (self.T is None or self.epsilons is None):
            raise ValueError("provide either 't' or both 'T' and 'epsilons'")
        return self


class BoundRequest(BaseModel):
    graph: GraphInput
    fn: FunctionInput
    r: float | None = None
    Lambda: float | None = None  # None means: use the spectral gap
    T: float | None = None
    rho: float | None = None  # None means: family bound or estimator
    optimize: bool = False
    r_grid: list[float] | None = None
    lambda_grid: list[float] | None = None
    t_grid: list[float] | None = None
    seed: int = 0

    @model_validator(mode="after")
    def _mode(self):
        if not self.optimize and (self.r is None or self.T is None):
            raise ValueError("fixed-point evaluation needs 'r' and 'T' (or set optimize)")
        return self


class LogSobolevRequest(BaseModel):
    graph: GraphInput
    restarts: int = 32
    max_iters: int = 500
    tol: float = 1e-10
    seed: int = 0


class EigenspaceCheckRequest(BaseModel):
    graph: GraphInput
    fn: FunctionInput


class ExclusionRequest(BaseModel):
    n: int
    fn: FunctionInput
    t_grid: list[float] = Field(default_factory=lambda: [0.0, 0.5, 2.0])
    alpha: float = 0.25
    deltas: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3])


class SliceBoundRequest(BaseModel):
    n: int
    fn: FunctionInput
    m: int
    C: float
    epsilon: float
    delta: float
    alpha: float = 1.0
    seed: int = 0


class SimulateRequest(BaseModel):
    graph: GraphInput | None = None
    exclusion_n: int | None = None
    fn: FunctionInput
    samples: int = 100_000
    t: float = 1.0
    seed: int = 0
    antithetic: bool = False
    threads: int = 1
    use_exp_gaps: bool = False

    @model_validator(mode="after")
    def _one_of(self):
        if (self.graph is None) == (self.exclusion_n is None):
            raise ValueError("provide exactly one of 'graph' or 'exclusion_n'")
        return self


# --------------------------------------------------------------- responses


class GraphResponse(BaseModel):
    family: str
    size: int
    degree: int
    generator_labels: list[str]
    is_permutation_action: bool
    inverse_closed: bool
    identity_free: bool
    connected: bool
    ok: bool
    messages: list[str]


class SpectrumResponse(BaseModel):
    eigenvalues: list[float]
    multiplicity_group: list[int]
    gap: float
    relaxation_time: float | None
    grouping_tolerance: float
    eigenvectors: list[list[float]] | None = None


class InfluenceResponse(BaseModel):
    labels: list[str]
    per_generator: list[float]
    total: float
    sum_of_squares: float


class FourierResponse(BaseModel):
    coefficients: list[float]
    eigenvalues: list[float]
    mean: float
    variance_weight: float


class CovRow(BaseModel):
    epsilon: float | None
    t: float
    cov: float


class DiagnosticRow(BaseModel):
    k: float
    low_freq_weight: float


class CovResponse(BaseModel):
    rows: list[CovRow]
    diagnostics: list[DiagnosticRow] = Field(default_factory=list)


class BoundResponse(BaseModel):
    lhs: float
    rhs_low_freq_term: float
    rhs_tail_term: float
    rhs: float
    slack: float
    r: float
    Lambda: float
    T: float
    rho: float
    rho_source: str
    lambda1: float
    optimized: bool


class LogSobolevResponse(BaseModel):
    rho_hat: float
    rho_hat_cov: float
    lambda1: float
    restarts_used: int
    converged: bool


class EigenspaceRow(BaseModel):
    eigenvalue: float
    dimension: int
    lhs: float
    rhs: float
    abs_error: float
    rel_error: float
    passed: bool


class ProbeTerm(BaseModel):
    label: str
    value: float


class PerVectorProbe(BaseModel):
    """Single-eigenvector diagnostic (position-1 indicator vector on sym:n=4)."""

    description: str
    eigenvalue: float
    coefficient: float
    lhs: float
    terms: list[ProbeTerm]
    rhs_partial_first_position: float
    rhs_full: float


class EigenspaceCheckResponse(BaseModel):
    rows: list[EigenspaceRow]
    all_passed: bool
    probe: PerVectorProbe | None = None


class LevelRow(BaseModel):
    m: int
    p_m: float
    slice_mean: float
    slice_var: float


class SliceInfluenceRow(BaseModel):
    m: int
    i: int
    j: int
    influence: float


class SplitRow(BaseModel):
    t: float
    within: float
    between: float
    total: float


class GoodSliceModel(BaseModel):
    alpha: float
    member_levels: list[int]
    probability: float
    sum_sq_coordinate_influences: float
    threshold: float


class ExclusionResponse(BaseModel):
    n: int
    levels: list[LevelRow]
    influences: list[SliceInfluenceRow]
    split: list[SplitRow]
    sum_sq_coordinate_influences: float
    thresholds: list[tuple[float, float]]
    good_slices: GoodSliceModel


class SliceBoundResponse(BaseModel):
    applicable: bool
    m: int
    C: float
    epsilon: float
    delta: float
    precondition_lhs: float
    precondition_rhs: float
    lambda1: float | None = None
    rho_estimated: float | None = None
    rho_order_expression: float | None = None
    influence_sq_sum: float | None = None
    low_freq_weight: float | None = None
    rhs_at_delta: float | None = None
    rhs_min: float | None = None
    r_min: float | None = None
    thm1_holds: bool | None = None
    alpha: float | None = None
    cov_at_relaxation_scale: float | None = None
    chain_tail_crude: float | None = None
    chain_tail_refined: float | None = None
    chain_rhs: float | None = None
    chain_holds: bool | None = None


class SimulateResponse(BaseModel):
    mean: float
    stderr: float
    samples: int
    seed: int


class HealthResponse(BaseModel):
    status: str
    version: str
