from typing import Iterable, Sequence, Tuple

import numpy as np

from app.core.errors import InputError
from app.models.database import Database, DatabaseSpace
from app.models.distribution import Distribution


class BeliefPrior:
    """An adversary's prior: a finite distribution over databases.

    Support entries may carry zero weight; they take part in no posterior mass.
    """

    def __init__(self, space: DatabaseSpace, support: Sequence[Database], weights: Sequence[float]):
        support = tuple(space.validate(x) for x in support)
        if not support:
            raise InputError("A prior needs at least one database")
        if len(set(support)) != len(support):
            raise InputError("Prior support databases must be distinct")
        self.space = space
        self.support: Tuple[Database, ...] = support
        self.weights = Distribution(support, weights)

    @classmethod
    def uniform(cls, space: DatabaseSpace, support: Iterable[Database]) -> "BeliefPrior":
        support = tuple(support)
        return cls(space, support, np.full(len(support), 1.0 / max(len(support), 1)))

    @classmethod
    def point_mass(cls, space: DatabaseSpace, x: Database) -> "BeliefPrior":
        return cls(space, (x,), (1.0,))

    @classmethod
    def from_weights(cls, space: DatabaseSpace, support: Sequence[Database],
                     weights: Sequence[float]) -> "BeliefPrior":
        """Normalize nonnegative weights."""
        weights = np.asarray(list(weights), dtype=float)
        if np.any(weights < 0) or not weights.sum() > 0:
            raise InputError("Prior weights must be nonnegative with a positive total")
        return cls(space, support, weights / weights.sum())

    @property
    def probs(self) -> np.ndarray:
        return self.weights.probs

    def mass(self, databases: Iterable[Database]) -> float:
        return self.weights.mass(databases)

    def __len__(self) -> int:
        return len(self.support)

    def __repr__(self) -> str:
        body = ", ".join(f"{self.space.encode(x)}: {w:.4g}" for x, w in zip(self.support, self.probs))
        return f"BeliefPrior({{{body}}})"
