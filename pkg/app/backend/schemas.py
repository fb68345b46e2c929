"""
Pydantic schemas for model parameters, experiment specs and results
"""
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Probability = Annotated[float, Field(ge=0.0, le=1.0)]
Vertex2 = Tuple[int, int]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# p_n families
class HarmonicPn(_Frozen):
    kind: Literal["harmonic"] = "harmonic"
    c: float = Field(gt=0)

    def value(self, n: int) -> float:
        return min(1.0, self.c / n)


class ConstantPn(_Frozen):
    kind: Literal["constant"] = "constant"
    q: Probability

    def value(self, n: int) -> float:
        return self.q


class CustomPn(_Frozen):
    kind: Literal["custom"] = "custom"
    values: Tuple[Probability, ...]

    def value(self, n: int) -> float:
        # values[0] is p_1
        if n <= len(self.values):
            return self.values[n - 1]
        return 0.0


PnFamily = Annotated[Union[HarmonicPn, ConstantPn, CustomPn], Field(discriminator="kind")]


class ModelParams(_Frozen):
    d: int = Field(default=3, ge=2, description="Lattice dimension")
    p: Probability = Field(default=0.5, description="Density of letter 1")
    eps: Probability = Field(default=0.5, description="Horizontal edge density")
    K: int = Field(default=0, ge=0, description="Truncation length")
    pn: PnFamily = HarmonicPn(c=1.0)


class Box(_Frozen):
    """Finite window of Z^d_+; coordinates run over [0, width_i] and [0, height]"""
    widths: Tuple[int, ...]
    height: Optional[int] = Field(default=None, gt=0, description="None means unbounded (lazy)")

    @field_validator("widths")
    @classmethod
    def _widths_positive(cls, v):
        if not v or any(w < 1 for w in v):
            raise ValueError("widths must be positive integers")
        return v

    @property
    def d(self) -> int:
        return len(self.widths) + 1

    @property
    def lazy(self) -> bool:
        return self.height is None

    def contains(self, v) -> bool:
        if len(v) != self.d:
            return False
        for x, w in zip(v[:-1], self.widths):
            if x < 0 or x > w:
                return False
        h = v[-1]
        return h >= 0 and (self.height is None or h <= self.height)

    def describe(self) -> str:
        return "x".join(str(w) for w in self.widths) + "x" + ("lazy" if self.height is None else str(self.height))


class CouplingParams(_Frozen):
    N: int = Field(ge=1, description="East trial range 1..N")
    M: int = Field(ge=1, description="North trial range N+1..N+M")
    max_diag: int = Field(ge=1, description="Explore vertices with coordinate sum < max_diag")
    prefer: Literal["east", "north"] = "east"


# Experiment kinds
def _check_bits(v: str) -> str:
    if any(ch not in "01" for ch in v):
        raise ValueError("words are ASCII bit strings over {0,1}")
    return v


class WordsSeen(_Frozen):
    kind: Literal["words_seen"] = "words_seen"
    L: int = Field(ge=0)


class SingleWord(_Frozen):
    kind: Literal["single_word"] = "single_word"
    word: str

    @field_validator("word")
    @classmethod
    def _word_bits(cls, v):
        return _check_bits(v)


class BlackStep(_Frozen):
    kind: Literal["black_step"] = "black_step"
    direction: Literal["east", "north"] = "east"
    letters: Tuple[Literal[0, 1], Literal[0, 1]] = (1, 1)


class BEvent(_Frozen):
    kind: Literal["b_event"] = "b_event"
    m: int = Field(ge=1)
    eta: str

    @model_validator(mode="after")
    def _eta_length(self):
        _check_bits(self.eta)
        if len(self.eta) != 2 * (4 * self.m - 1):
            raise ValueError(f"eta must lie in Xi_{4 * self.m} (length {2 * (4 * self.m - 1)})")
        return self


class BPropPair(_Frozen):
    kind: Literal["b_prop_pair"] = "b_prop_pair"
    m: int = Field(ge=1)
    eta: str

    @model_validator(mode="after")
    def _eta_length(self):
        _check_bits(self.eta)
        if len(self.eta) != 2 * (16 * self.m - 1):
            raise ValueError(f"eta must lie in Xi_{16 * self.m} (length {2 * (16 * self.m - 1)})")
        return self


class DEvent(_Frozen):
    kind: Literal["d_event"] = "d_event"
    m: int = Field(ge=1)


class OrientedEvent(_Frozen):
    kind: Literal["oriented_event"] = "oriented_event"
    m: int = Field(ge=1)
    which: Literal["E1", "E2", "E3", "E4", "ALL"] = "ALL"
    sources: Optional[Tuple[Vertex2, ...]] = None
    w_left: Optional[int] = Field(default=None, ge=0)


class MSCount(_Frozen):
    kind: Literal["ms_count"] = "ms_count"
    m: int = Field(ge=1)
    sources: Optional[Tuple[Vertex2, ...]] = None


class DominationWindow(_Frozen):
    kind: Literal["domination_window"] = "domination_window"
    rho: Probability
    w: int = Field(ge=1, le=6)
    t: int = Field(ge=1)


class ProofGeometry(_Frozen):
    kind: Literal["proof_geometry"] = "proof_geometry"
    m: int = Field(ge=1)
    sources: Optional[Tuple[Vertex2, ...]] = None
    w_left: Optional[int] = Field(default=None, ge=0)


class BondE1(_Frozen):
    kind: Literal["bond_e1"] = "bond_e1"
    m: int = Field(ge=1)


Experiment = Annotated[
    Union[WordsSeen, SingleWord, BlackStep, BEvent, BPropPair, DEvent,
          OrientedEvent, MSCount, DominationWindow, ProofGeometry, BondE1],
    Field(discriminator="kind"),
]

LATTICE_KINDS = {"words_seen", "single_word"}
COUPLING_KINDS = {"black_step", "b_event", "b_prop_pair", "d_event"}
ORIENTED_KINDS = {"oriented_event", "ms_count", "domination_window", "proof_geometry", "bond_e1"}


class ExperimentSpec(_Frozen):
    experiment: Experiment
    params: Optional[ModelParams] = None
    gamma: Optional[Probability] = None
    cp: Optional[CouplingParams] = None
    box: Optional[Box] = None
    quenched: Optional[int] = Field(default=None, ge=0, lt=2**64, description="Fixed bond seed")

    @model_validator(mode="after")
    def _complete_for_kind(self):
        kind = self.experiment.kind
        if kind in LATTICE_KINDS:
            if self.params is None or self.box is None:
                raise ValueError(f"{kind} needs params and box")
            if self.box.d != self.params.d:
                raise ValueError("box dimension does not match params.d")
        elif kind in COUPLING_KINDS:
            if self.params is None or self.cp is None:
                raise ValueError(f"{kind} needs params and cp")
            if self.params.d != 3:
                raise ValueError("the exploration coupling runs in d = 3")
        elif self.gamma is None:
            raise ValueError(f"{kind} needs gamma")
        return self


class EstimateRecord(BaseModel):
    experiment: str
    spec_digest: str
    spec: Dict[str, Any]
    trials: int = Field(ge=1)
    successes: int = Field(ge=0)
    refused: int = Field(default=0, ge=0)
    p_hat: float
    ci_lo: float
    ci_hi: float
    level: float = 0.95
    interval: str = "wilson"
    master_seed: int
    box: Optional[str] = None
    wall_time: float = 0.0
    config: Optional[Dict[str, Any]] = None

    @model_validator(mode="after")
    def _counts_consistent(self):
        if self.successes + self.refused > self.trials:
            raise ValueError("successes + refused exceeds trials")
        if not (self.ci_lo <= self.p_hat <= self.ci_hi):
            raise ValueError("interval does not contain p_hat")
        return self


class DecayPoint(BaseModel):
    m: int
    estimate: float
    ci_lo: float = 0.0
    ci_hi: float = 1.0
    trials: int = 0
    successes: int = 0


class DecayFit(BaseModel):
    points: List[Tuple[int, float]]
    a_hat: float
    r2: float
    dropped: List[int] = Field(default_factory=list, description="m values with zero estimates")


# Service request/response bodies
class EstimateRequest(BaseModel):
    spec: ExperimentSpec
    trials: int = Field(ge=1, le=10**7)
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: Optional[int] = Field(default=None, ge=1)


class SweepRequest(EstimateRequest):
    key: str
    values: List[float] = Field(min_length=1)


class SeenRequest(BaseModel):
    params: ModelParams
    box: Box
    L: int = Field(ge=0)
    bond_seed: int = Field(ge=0, lt=2**64)
    site_seed: int = Field(ge=0, lt=2**64)
    origin: Optional[Tuple[int, ...]] = None


class SeenResponse(BaseModel):
    L: int
    cardinality: int
    complete: bool
    bitmap_hex: str
