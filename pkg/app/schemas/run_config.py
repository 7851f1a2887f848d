import os
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from app.core.config import settings


class RunConfig(BaseModel):
    """Options of one CLI invocation after parsing."""

    command: Literal["analyze", "semantic", "counterexample", "verify", "gen"]
    mechanism: Optional[str] = None
    prior: Optional[str] = None
    pairs: Optional[str] = None
    real_db: Optional[str] = None
    output: Optional[str] = None
    epsilons: List[float] = []
    epsilon: Optional[float] = Field(None, ge=0, allow_inf_nan=False)
    delta: Optional[float] = Field(None, ge=0, le=1)
    n: Optional[int] = Field(None, ge=1)
    seed: int = settings.DEFAULT_SEED
    trials: int = Field(settings.DEFAULT_TRIALS, ge=1)
    format: Literal["json", "csv"] = "json"

    @field_validator("mechanism", "prior", "pairs")
    def validate_input_file(cls, v):
        if v is not None and not os.path.isfile(v):
            raise ValueError(f"file {v} does not exist")
        return v

    @field_validator("epsilons")
    def validate_epsilons(cls, v):
        if any(not eps >= 0 for eps in v):
            raise ValueError("epsilons must be nonnegative")
        return v
