import math
from typing import Hashable, Iterable, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import InputError

Label = Hashable


class Distribution:
    """Finite probability vector over uniquely labeled outcomes.

    Values are immutable once built: ``probs`` is a read-only numpy array.
    """

    __slots__ = ("outcomes", "probs", "_index")

    def __init__(self, outcomes: Iterable[Label], probs: Iterable[float], tol: float = None):
        outcomes = tuple(outcomes)
        probs = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=float)
        tol = settings.NORMALIZATION_TOL if tol is None else tol

        if probs.ndim != 1 or len(outcomes) != probs.shape[0]:
            raise InputError(
                f"Distribution needs one probability per outcome, got {len(outcomes)} outcomes "
                f"and {probs.size} probabilities"
            )
        index = {}
        for position, label in enumerate(outcomes):
            if label in index:
                raise InputError(f"Duplicate outcome label: {label!r}")
            index[label] = position
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise InputError("Probabilities must be finite and nonnegative")
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > tol:
            raise InputError(f"Probabilities sum to {total!r}, expected 1 within {tol}")

        probs = probs.copy()
        probs.flags.writeable = False
        self.outcomes: Tuple[Label, ...] = outcomes
        self.probs: np.ndarray = probs
        self._index = index

    @classmethod
    def point_mass(cls, label: Label, outcomes: Sequence[Label] = None) -> "Distribution":
        outcomes = tuple(outcomes) if outcomes is not None else (label,)
        probs = np.zeros(len(outcomes))
        try:
            probs[outcomes.index(label)] = 1.0
        except ValueError:
            raise InputError(f"Point mass label {label!r} is not an outcome")
        return cls(outcomes, probs)

    @classmethod
    def from_weights(cls, outcomes: Iterable[Label], weights: Iterable[float]) -> "Distribution":
        """Normalize nonnegative weights into a distribution."""
        weights = np.asarray(list(weights), dtype=float)
        total = weights.sum()
        if not np.isfinite(total) or total <= 0 or np.any(weights < 0):
            raise InputError("Weights must be nonnegative with a positive finite total")
        return cls(outcomes, weights / total)

    def prob(self, label: Label) -> float:
        position = self._index.get(label)
        return 0.0 if position is None else float(self.probs[position])

    def mass(self, labels: Iterable[Label]) -> float:
        return math.fsum(self.prob(label) for label in set(labels))

    def as_dict(self) -> dict:
        return dict(zip(self.outcomes, self.probs.tolist()))

    def __len__(self) -> int:
        return len(self.outcomes)

    def __contains__(self, label: Label) -> bool:
        return label in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.outcomes == other.outcomes and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.outcomes, self.probs.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{label!r}: {p:.6g}" for label, p in zip(self.outcomes, self.probs))
        return f"Distribution({{{body}}})"


def align(p: Distribution, q: Distribution) -> Tuple[Tuple[Label, ...], np.ndarray, np.ndarray]:
    """Put two distributions on the union of their outcome labels.

    Labels missing from one side get probability 0. Order is p's outcomes
    followed by q's new labels.
    """
    if p.outcomes == q.outcomes:
        return p.outcomes, p.probs, q.probs
    labels = list(p.outcomes)
    labels.extend(label for label in q.outcomes if label not in p)
    p_vec = np.array([p.prob(label) for label in labels])
    q_vec = np.array([q.prob(label) for label in labels])
    return tuple(labels), p_vec, q_vec
