from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings

GeneratorType = Literal[
    "randomized_response",
    "leaky_randomized_response",
    "laplace_sum",
    "gaussian_sum",
    "ls_laplace",
]

QUERY_NAMES = ("sum", "median", "max")


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["laplace", "gaussian"]
    scale: float = Field(..., gt=0, allow_inf_nan=False)
    grid_step: Optional[float] = Field(None, gt=0, allow_inf_nan=False)
    tail_mass: float = Field(settings.TAIL_MASS, gt=0, lt=1)
    bounds: Optional[Tuple[float, float]] = None

    @field_validator("bounds")
    def validate_bounds(cls, v):
        if v is not None and not v[0] < v[1]:
            raise ValueError("bounds must satisfy lo < hi")
        return v

    @property
    def step(self) -> float:
        if self.grid_step is not None:
            return self.grid_step
        return self.scale * settings.GRID_STEP_FRACTION

    def resolved(self) -> "NoiseSpec":
        """Copy with the default grid step filled in."""
        return self.model_copy(update={"grid_step": self.step})


class GeneratorSpec(BaseModel):
    """Descriptor of a generator-backed mechanism, enough to rebuild its rows."""

    type: GeneratorType
    flip_prob: Optional[float] = None
    leak_prob: Optional[float] = None
    noise: Optional[NoiseSpec] = None
    query: Optional[str] = None
    table: Optional[Dict[str, float]] = None
    sensitivity: Optional[float] = None
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    log_base: Optional[float] = None

    @model_validator(mode="after")
    def check_required_fields(self):
        if self.type in ("randomized_response", "leaky_randomized_response"):
            if self.flip_prob is None:
                raise ValueError(f"{self.type} needs flip_prob")
            if self.type == "leaky_randomized_response" and self.leak_prob is None:
                raise ValueError("leaky_randomized_response needs leak_prob")
        else:
            if self.noise is None:
                raise ValueError(f"{self.type} needs a noise spec")
        if self.type == "ls_laplace":
            if self.query is None and self.table is None:
                raise ValueError("ls_laplace needs a query name or a table")
            if self.query is not None and self.query not in QUERY_NAMES:
                raise ValueError(f"query must be one of {', '.join(QUERY_NAMES)}")
        return self


class MechanismFile(BaseModel):
    domain: List[str] = Field(..., min_length=1)
    n: int = Field(..., ge=1)
    default: Optional[str] = None
    transcripts: List[str]
    matrix: Optional[Dict[str, List[str]]] = None
    generator: Optional[GeneratorSpec] = None

    @model_validator(mode="after")
    def check_representation(self):
        if (self.matrix is None) == (self.generator is None):
            raise ValueError("exactly one of 'matrix' or 'generator' is required")
        if self.default is not None and self.default not in self.domain:
            raise ValueError(f"default {self.default!r} is not in the domain")
        return self


class PriorEntry(BaseModel):
    database: str
    weight: str

    @field_validator("weight")
    def validate_weight(cls, v):
        try:
            value = float(v)
        except ValueError:
            raise ValueError(f"weight {v!r} is not a decimal number")
        if not value >= 0:
            raise ValueError("weight cannot be negative")
        return v
