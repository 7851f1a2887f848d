"""Exact differential-privacy parameters of a finite mechanism."""
import math
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import InputError
from app.core.logging import logger
from app.models.database import Database, DatabaseSpace, hamming_distance
from app.models.mechanism import Mechanism
from app.models.prior import BeliefPrior
from app.schemas.params import IndistParams
from app.schemas.report import DeltaPoint, DpReport, ExtractionReport, PairExtraction
from app.services import bayes_semantics, prob_core

Pair = Tuple[Database, Database]


def neighbor_pairs(space: DatabaseSpace) -> Iterator[Pair]:
    """Unordered neighbor pairs, each once, in enumeration order of the first database."""
    order = {symbol: k for k, symbol in enumerate(space.domain)}
    for x in space.databases():
        for position, entry in enumerate(x):
            for symbol in space.domain[order[entry] + 1:]:
                yield x, x[:position] + (symbol,) + x[position + 1:]


def resolve_pairs(m: Mechanism, pairs: Optional[Iterable[Pair]] = None) -> List[Pair]:
    """Explicit pairs when given, otherwise every neighbor pair of an enumerable space."""
    if pairs is None:
        return list(neighbor_pairs(m.space))
    resolved = []
    for x, y in pairs:
        x, y = m.space.validate(x), m.space.validate(y)
        if hamming_distance(x, y) != 1:
            raise InputError(f"{m.space.encode(x)!r} and {m.space.encode(y)!r} are not neighbors")
        resolved.append((x, y))
    if not resolved:
        raise InputError("No neighbor pairs to analyze")
    return resolved


def log_ratio_bound(log_p: np.ndarray, log_q: np.ndarray) -> float:
    """max |ln p_t - ln q_t| over transcripts, +inf when exactly one side is zero."""
    p_zero, q_zero = np.isneginf(log_p), np.isneginf(log_q)
    if np.any(p_zero != q_zero):
        return math.inf
    live = ~p_zero
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(log_p[live] - log_q[live])))


def pair_epsilon(m: Mechanism, x: Database, y: Database) -> float:
    return log_ratio_bound(m.log_row_array(x), m.log_row_array(y))


def pair_tight_delta(m: Mechanism, x: Database, y: Database, epsilon: float) -> float:
    return _symmetric_hockey_stick(m.row_array(x), m.row_array(y), epsilon)


def _symmetric_hockey_stick(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    if epsilon == 0:
        return min(1.0, 0.5 * math.fsum(np.abs(p - q).tolist()))
    return min(1.0, max(prob_core.hockey_stick(p, q, epsilon), prob_core.hockey_stick(q, p, epsilon)))


def epsilon_max(m: Mechanism, pairs: Optional[Iterable[Pair]] = None) -> float:
    value, _ = _epsilon_max_with_pair(m, resolve_pairs(m, pairs))
    return value


def _epsilon_max_with_pair(m: Mechanism, pairs: Sequence[Pair]) -> Tuple[float, Optional[Pair]]:
    best, worst = 0.0, None
    for x, y in pairs:
        value = pair_epsilon(m, x, y)
        if worst is None or value > best:
            best, worst = value, (x, y)
        if math.isinf(best):
            break
    return best, worst


def tight_delta_curve(m: Mechanism, epsilons: Sequence[float], pairs: Optional[Iterable[Pair]] = None,
                      params: Optional[IndistParams] = None) -> DpReport:
    """Tight delta(epsilon) maximized over neighbor pairs, with the attaining pair."""
    for eps in epsilons:
        if not eps >= 0:
            raise InputError(f"epsilon must be nonnegative, got {eps!r}")
    pairs = resolve_pairs(m, pairs)
    encode = m.space.encode
    eps_max, eps_pair = _epsilon_max_with_pair(m, pairs)

    grid = list(epsilons) + ([params.epsilon] if params is not None else [])
    best = [-1.0] * len(grid)
    best_pair: List[Optional[Pair]] = [None] * len(grid)
    for x, y in pairs:
        for k, eps in enumerate(grid):
            value = pair_tight_delta(m, x, y, eps)
            if value > best[k]:
                best[k], best_pair[k] = value, (x, y)

    points = [
        DeltaPoint(epsilon=eps, delta=max(best[k], 0.0),
                   worst_x=encode(best_pair[k][0]) if best_pair[k] else None,
                   worst_y=encode(best_pair[k][1]) if best_pair[k] else None)
        for k, eps in enumerate(epsilons)
    ]
    pointwise = None
    if params is not None and best_pair[-1] is not None:
        x, y = best_pair[-1]
        pointwise = prob_core.pointwise_check(m.row(x), m.row(y), params)

    logger.info("Analyzed %d neighbor pairs of %s: epsilon_max=%s", len(pairs), m.name, eps_max)
    return DpReport(
        epsilon_max=eps_max,
        worst_pair=(encode(eps_pair[0]), encode(eps_pair[1])) if eps_pair else None,
        delta_at=points,
        pointwise=pointwise,
        pairs_examined=len(pairs),
    )


def epsilon_for_delta(m: Mechanism, delta: float, pairs: Optional[Iterable[Pair]] = None) -> float:
    """Smallest epsilon whose tight delta is at most ``delta``, by bisection.

    Returns +inf when no finite epsilon reaches ``delta`` (disjoint supports).
    """
    if not 0 <= delta <= 1:
        raise InputError(f"delta must lie in [0, 1], got {delta!r}")
    pairs = resolve_pairs(m, pairs)

    def curve(eps):
        return max((pair_tight_delta(m, x, y, eps) for x, y in pairs), default=0.0)

    if curve(0.0) <= delta:
        return 0.0
    hi = _epsilon_max_with_pair(m, pairs)[0]
    if math.isinf(hi):
        hi = 1.0
        while curve(hi) > delta:
            hi *= 2
            if hi > 1e3:
                return math.inf
    lo = 0.0
    while hi - lo > settings.BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if curve(mid) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def good_set(m: Mechanism, params: IndistParams) -> Set[Database]:
    """Databases all of whose neighbor row pairs are (epsilon, delta)-indistinguishable."""
    space = m.space
    space.require_enumerable()
    limit = params.delta + settings.IDENTITY_TOL
    factor = math.exp(params.epsilon)
    good = set()
    for x in space.databases():
        p = m.row_array(x)
        ys = space.neighbors(x)
        if not ys:
            good.add(x)
            continue
        q = np.stack([m.row_array(y) for y in ys])
        forward = np.clip(p[None, :] - factor * q, 0, None).sum(axis=1)
        backward = np.clip(q - factor * p[None, :], 0, None).sum(axis=1)
        if np.all(np.maximum(forward, backward) <= limit):
            good.add(x)
    logger.info("Good set at %s holds %d of %d databases", params, len(good), space.count)
    return good


def semantic_to_dp_extraction(m: Mechanism, epsilon_bar: float, delta: float,
                              pairs: Optional[Iterable[Pair]] = None) -> ExtractionReport:
    """Recover (2 epsilon, 2 delta) with epsilon = ln(1 + epsilon_bar) from two-point semantic privacy.

    Each neighbor pair is judged under the uniform prior over the pair; when
    its losses stay within epsilon_bar / 2 except on transcript mass delta,
    the pair must pass both the set and point-wise forms at (2 epsilon, 2 delta).
    """
    if not epsilon_bar >= 0:
        raise InputError(f"epsilon_bar must be nonnegative, got {epsilon_bar!r}")
    if not 0 <= delta <= 0.5:
        raise InputError(f"delta must lie in [0, 1/2], got {delta!r}")
    if epsilon_bar > math.expm1(2):
        logger.warning("epsilon_bar=%.6g is beyond e^2 - 1; extracted epsilon leaves the tested range", epsilon_bar)

    epsilon = math.log1p(epsilon_bar)
    params = IndistParams(epsilon=2 * epsilon, delta=2 * delta)
    exact = math.log((1 + epsilon_bar) / (1 - epsilon_bar)) if epsilon_bar < 1 else math.inf
    exact_params = IndistParams(epsilon=exact, delta=2 * delta) if math.isfinite(exact) else None

    results = []
    for x, y in resolve_pairs(m, pairs):
        report = bayes_semantics.semantic_report(m, BeliefPrior.uniform(m.space, (x, y)))
        exceeding = report.mass_exceeding(epsilon_bar / 2)
        premise = exceeding <= delta + settings.IDENTITY_TOL
        row_x, row_y = m.row(x), m.row(y)
        results.append(PairExtraction(
            x=m.space.encode(x),
            y=m.space.encode(y),
            semantic_epsilon=report.epsilon_star,
            exceeding_mass=exceeding,
            premise_holds=premise,
            set_passes=prob_core.is_indistinguishable(row_x, row_y, params),
            pointwise_passes=prob_core.pointwise_check(row_x, row_y, params).passed,
            exact_bound_passes=exact_params is None or prob_core.is_indistinguishable(row_x, row_y, exact_params),
        ))

    report = ExtractionReport(epsilon_bar=epsilon_bar, delta=delta, params=params,
                              exact_ratio_bound=exact, pairs=results)
    logger.info("Extraction at epsilon_bar=%.6g delta=%.6g over %d pairs: %s",
                epsilon_bar, delta, len(results), "pass" if report.passed else "FAIL")
    return report
