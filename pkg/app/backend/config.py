"""
Run configuration: `key = value` files plus `--key=value` overrides
"""
from typing import Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .schemas import Box, CouplingParams, ExperimentSpec, ModelParams, Probability


class RunConfig(BaseModel):
    """Flat view of everything one run needs; unknown keys are rejected"""
    model_config = ConfigDict(extra="forbid")

    experiment: Optional[str] = None
    # experiment arguments
    L: Optional[int] = Field(default=None, ge=0)
    word: Optional[str] = None
    direction: Literal["east", "north"] = "east"
    letters: str = "11"
    m: Optional[int] = Field(default=None, ge=1)
    eta: Optional[str] = None
    which: Literal["E1", "E2", "E3", "E4", "ALL"] = "ALL"
    sources: Optional[str] = None
    w_left: Optional[int] = Field(default=None, ge=0)
    rho: Optional[Probability] = None
    w: Optional[int] = Field(default=None, ge=1, le=6)
    t: Optional[int] = Field(default=None, ge=1)
    # model
    d: int = Field(default=3, ge=2)
    p: Probability = 0.5
    eps: Probability = 0.5
    K: int = Field(default=0, ge=0)
    pn: str = "harmonic:1"
    gamma: Optional[Probability] = None
    # coupling
    N: Optional[int] = Field(default=None, ge=1)
    M: Optional[int] = Field(default=None, ge=1)
    max_diag: Optional[int] = Field(default=None, ge=1)
    prefer: Literal["east", "north"] = "east"
    # box
    widths: Optional[str] = None
    height: Optional[int] = Field(default=None, gt=0)
    # run
    quenched: Optional[int] = Field(default=None, ge=0, lt=2**64)
    trials: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: Optional[int] = Field(default=None, ge=1)
    level: float = Field(default=0.95, gt=0, lt=1)
    output: Optional[str] = None
    format: Literal["csv", "jsonl", "svg"] = "jsonl"
    sweep_key: Optional[str] = None
    sweep_values: Optional[str] = None

    @field_validator("letters")
    @classmethod
    def _two_bits(cls, v):
        if len(v) != 2 or any(ch not in "01" for ch in v):
            raise ValueError("letters must be two bits, e.g. 10")
        return v

    @field_validator("height", mode="before")
    @classmethod
    def _lazy_height(cls, v):
        if isinstance(v, str) and v.strip().lower() in ("lazy", "none", ""):
            return None
        return v

    def model_params(self) -> ModelParams:
        return _validated("pn", ModelParams, {"d": self.d, "p": self.p, "eps": self.eps, "K": self.K,
                                              "pn": parse_pn(self.pn)})

    def box(self) -> Optional[Box]:
        if self.widths is None:
            return None
        try:
            widths = tuple(int(x) for x in self.widths.split(","))
        except ValueError:
            raise ConfigError(f"expected comma-separated integers, got {self.widths!r}", key="widths")
        return _validated("widths", Box, {"widths": widths, "height": self.height})

    def coupling(self) -> Optional[CouplingParams]:
        if self.N is None and self.M is None and self.max_diag is None:
            return None
        return _validated("N", CouplingParams, {"N": self.N, "M": self.M, "max_diag": self.max_diag,
                                                "prefer": self.prefer})

    def experiment_args(self) -> Dict[str, object]:
        kind = self.experiment
        if kind is None:
            raise ConfigError("no experiment named", key="experiment")
        args: Dict[str, object] = {"kind": kind}
        wanted = {
            "words_seen": ("L",),
            "single_word": ("word",),
            "black_step": ("direction", "letters"),
            "b_event": ("m", "eta"),
            "b_prop_pair": ("m", "eta"),
            "d_event": ("m",),
            "oriented_event": ("m", "which", "sources", "w_left"),
            "ms_count": ("m", "sources"),
            "domination_window": ("rho", "w", "t"),
            "proof_geometry": ("m", "sources", "w_left"),
            "bond_e1": ("m",),
        }.get(kind)
        if wanted is None:
            raise ConfigError(f"unknown experiment {kind!r}", key="experiment")
        for key in wanted:
            value = getattr(self, key)
            if key == "letters":
                value = tuple(int(ch) for ch in value)
            elif key == "sources" and value is not None:
                value = parse_sources(value)
            if value is not None:
                args[key] = value
        return args

    def to_spec(self) -> ExperimentSpec:
        data = {
            "experiment": self.experiment_args(),
            "params": self.model_params(),
            "gamma": self.gamma,
            "cp": self.coupling(),
            "box": self.box(),
            "quenched": self.quenched,
        }
        return _validated(None, ExperimentSpec, data)

    def sweep_points(self) -> Tuple[str, List[float]]:
        if not self.sweep_key or not self.sweep_values:
            raise ConfigError("a sweep needs sweep_key and sweep_values", key="sweep_key")
        try:
            values = [float(v) for v in self.sweep_values.split(",")]
        except ValueError:
            raise ConfigError(f"expected comma-separated numbers, got {self.sweep_values!r}", key="sweep_values")
        return self.sweep_key, values


def _validated(default_key: Optional[str], model, data):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = [str(x) for x in err["loc"] if not isinstance(x, int)]
        key = loc[-1] if loc else default_key
        raise ConfigError(err["msg"], key=key)


def parse_pn(text: str) -> Dict[str, object]:
    """harmonic:<c>, constant:<q> or custom:<p_1>,<p_2>,..."""
    family, _, arg = text.partition(":")
    family = family.strip().lower()
    try:
        if family == "harmonic":
            return {"kind": "harmonic", "c": float(arg or 1)}
        if family == "constant":
            return {"kind": "constant", "q": float(arg)}
        if family == "custom":
            return {"kind": "custom", "values": tuple(float(x) for x in arg.split(","))}
    except ValueError:
        pass
    raise ConfigError(f"cannot parse p_n family {text!r}", key="pn")


def parse_sources(text: str) -> Tuple[Tuple[int, int], ...]:
    """`1,2;2,1` -> ((1, 2), (2, 1))"""
    try:
        out = []
        for pair in text.split(";"):
            a, b = pair.split(",")
            out.append((int(a), int(b)))
        return tuple(out)
    except ValueError:
        raise ConfigError(f"expected x,y;x,y pairs, got {text!r}", key="sources")


def _parse_lines(text: str) -> Dict[str, Tuple[str, int]]:
    values: Dict[str, Tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError("expected `key = value`", line=lineno)
        values[key] = (value.strip(), lineno)
    return values


def _parse_flags(flags: Sequence[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for flag in flags:
        if not flag.startswith("--") or "=" not in flag:
            raise ConfigError(f"expected --key=value, got {flag!r}")
        key, value = flag[2:].split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_config(text: str = "", flags: Sequence[str] = ()) -> RunConfig:
    """File values first, then flags; errors name the key and the file line"""
    fields = RunConfig.model_fields
    entries = _parse_lines(text)
    for key, (_, lineno) in entries.items():
        if key not in fields:
            raise ConfigError("unknown key", key=key, line=lineno)
    merged: Dict[str, str] = {k: v for k, (v, _) in entries.items()}
    for key, value in _parse_flags(flags).items():
        if key not in fields:
            raise ConfigError("unknown key", key=key)
        merged[key] = value
        entries.pop(key, None)
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        err = e.errors()[0]
        key = str(err["loc"][0]) if err["loc"] else None
        line = entries.get(key, (None, None))[1] if key else None
        raise ConfigError(err["msg"], key=key, line=line)
