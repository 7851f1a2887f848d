"""Statistical difference and the (epsilon, delta)-indistinguishability calculus."""
import math
from typing import Hashable, Mapping, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import InputError, UndefinedConversionError
from app.core.logging import logger
from app.models.distribution import Distribution, align
from app.schemas.params import IndistParams
from app.schemas.report import PointwiseReport


def _check_epsilon(epsilon: float):
    if not epsilon >= 0:
        raise InputError(f"epsilon must be nonnegative, got {epsilon!r}")


def hockey_stick(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    """One-sided excess sum_a max(0, p_a - e^epsilon q_a) on aligned vectors."""
    if math.isinf(epsilon):
        return math.fsum(p[q == 0].tolist())
    excess = p - math.exp(epsilon) * q
    return math.fsum(excess[excess > 0].tolist())


def statistical_difference(p: Distribution, q: Distribution) -> float:
    """Total variation distance, (1/2) sum_a |p_a - q_a|."""
    _, p_vec, q_vec = align(p, q)
    return min(1.0, 0.5 * math.fsum(np.abs(p_vec - q_vec).tolist()))


def tight_delta_at(p: Distribution, q: Distribution, epsilon: float) -> float:
    """Smallest delta making (p, q) (epsilon, delta)-indistinguishable.

    The maximizing event is {a : p_a > e^epsilon q_a} or its mirror image.
    """
    _check_epsilon(epsilon)
    _, p_vec, q_vec = align(p, q)
    if epsilon == 0:
        return min(1.0, 0.5 * math.fsum(np.abs(p_vec - q_vec).tolist()))
    return min(1.0, max(hockey_stick(p_vec, q_vec, epsilon), hockey_stick(q_vec, p_vec, epsilon)))


def hockey_stick_curve(p: Distribution, q: Distribution, epsilons: Sequence[float]) -> list:
    return [tight_delta_at(p, q, eps) for eps in epsilons]


def is_indistinguishable(p: Distribution, q: Distribution, params: IndistParams,
                         tol: float = None) -> bool:
    tol = settings.IDENTITY_TOL if tol is None else tol
    return tight_delta_at(p, q, params.epsilon) <= params.delta + tol


def bad_outcome_mask(p_vec: np.ndarray, q_vec: np.ndarray, epsilon: float) -> np.ndarray:
    """Outcomes whose ratio leaves [e^-epsilon, e^epsilon] beyond the ratio slack."""
    factor = math.exp(epsilon) * (1 + settings.RATIO_SLACK)
    too_low = p_vec * factor < q_vec
    too_high = p_vec > factor * q_vec
    both_zero = (p_vec == 0) & (q_vec == 0)
    return (too_low | too_high) & ~both_zero


def pointwise_check(p: Distribution, q: Distribution, params: IndistParams) -> PointwiseReport:
    labels, p_vec, q_vec = align(p, q)
    mask = bad_outcome_mask(p_vec, q_vec, params.epsilon)
    return PointwiseReport(
        bad_mass_x=min(1.0, math.fsum(p_vec[mask].tolist())),
        bad_mass_y=min(1.0, math.fsum(q_vec[mask].tolist())),
        bad_outcomes=[str(label) for label, bad in zip(labels, mask) if bad],
        epsilon=params.epsilon,
        delta=params.delta,
    )


def pointwise_to_indist(params: IndistParams) -> IndistParams:
    """Point-wise (epsilon, delta) already gives set-form (epsilon, delta)."""
    return IndistParams(epsilon=params.epsilon, delta=params.delta)


def indist_to_pointwise(params: IndistParams) -> IndistParams:
    """Set-form (epsilon, delta) to point-wise (2 epsilon, 2 delta / (e^epsilon epsilon)).

    The converted delta is clamped to 1, beyond which it is vacuous.
    """
    if params.epsilon == 0:
        raise UndefinedConversionError("Point-wise conversion divides by epsilon; epsilon must be > 0")
    delta = 2 * params.delta / (math.exp(params.epsilon) * params.epsilon)
    return IndistParams(epsilon=2 * params.epsilon, delta=min(1.0, delta))


def postprocess(p: Distribution, channel: Mapping[Hashable, Distribution]) -> Distribution:
    """Push p through a stochastic map; the result lives on the union of row outcomes."""
    rows = []
    for label, mass in zip(p.outcomes, p.probs):
        row = channel.get(label)
        if row is None:
            if mass > 0:
                raise InputError(f"Channel has no row for outcome {label!r}")
            continue
        rows.append((mass, row))
    targets = []
    seen = set()
    for _, row in rows:
        for t in row.outcomes:
            if t not in seen:
                seen.add(t)
                targets.append(t)
    total = np.zeros(len(targets))
    for mass, row in rows:
        total += mass * np.array([row.prob(t) for t in targets])
    return Distribution(targets, total)



def pair_with_input(prior: Distribution, rows_a: Mapping[Hashable, Distribution],
                    rows_b: Mapping[Hashable, Distribution]) -> tuple:
    """Joint laws of (index, transcript) for two row families sharing one prior.

    Labels of the joints are ``(index, transcript)`` tuples over the union of
    transcripts, so both joints live on one outcome set.
    """
    if set(rows_a) != set(prior.outcomes) or set(rows_b) != set(prior.outcomes):
        raise InputError("Row families must be indexed by exactly the prior's outcomes")
    labels, vec_a, vec_b = [], [], []
    for index, weight in zip(prior.outcomes, prior.probs):
        transcripts, a, b = align(rows_a[index], rows_b[index])
        labels.extend((index, t) for t in transcripts)
        vec_a.append(weight * a)
        vec_b.append(weight * b)
    joint_a = Distribution(labels, np.concatenate(vec_a))
    joint_b = Distribution(labels, np.concatenate(vec_b))
    logger.debug("Built joint pair over %d (index, transcript) labels", len(labels))
    return joint_a, joint_b


def sd_bound_from_indist(params: IndistParams) -> float:
    return params.excess_ratio + params.delta
