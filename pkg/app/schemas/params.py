import math

from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import UndefinedConversionError


class IndistParams(BaseModel):
    """An (epsilon, delta) pair plus the derived parameters of the semantic bounds."""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(..., ge=0, allow_inf_nan=False)
    delta: float = Field(0.0, ge=0, le=1)

    @property
    def excess_ratio(self) -> float:
        """e^epsilon - 1, the semantic loss bound of a pure DP mechanism."""
        return math.expm1(self.epsilon)

    @property
    def conditional_epsilon(self) -> float:
        return 3 * self.epsilon

    @property
    def conditional_delta(self) -> float:
        return 2 * math.sqrt(self.delta)

    @property
    def conditional_failure_bound(self) -> float:
        """sqrt(delta) + 2 delta / (epsilon e^epsilon); epsilon must be positive."""
        self.require_positive_epsilon("conditional failure bound")
        return math.sqrt(self.delta) + 2 * self.delta / (self.epsilon * math.exp(self.epsilon))

    @property
    def semantic_epsilon(self) -> float:
        return math.expm1(3 * self.epsilon) + 2 * math.sqrt(self.delta)

    def semantic_delta(self, n: int) -> float:
        return n * self.conditional_failure_bound

    def require_positive_epsilon(self, what: str):
        if self.epsilon <= 0:
            raise UndefinedConversionError(f"The {what} divides by epsilon; epsilon must be > 0")

    def __str__(self) -> str:
        return f"(epsilon={self.epsilon:.6g}, delta={self.delta:.6g})"
