"""Posterior beliefs under Games 0..n, semantic privacy losses and their verifiers."""
import math
from typing import Dict, Hashable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import special

from app.core.config import settings
from app.core.errors import InputError, UndefinedPosteriorError
from app.core.logging import logger
from app.models.database import Database, DatabaseSpace
from app.models.distribution import Distribution, align
from app.models.mechanism import Mechanism
from app.models.prior import BeliefPrior
from app.schemas.params import IndistParams
from app.schemas.report import CounterexampleReport, MarginReport, SemanticReport, TouchedPair
from app.services import mechanism_model, prob_core


def _log_prior(prior: BeliefPrior) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(prior.probs)


def _game_log_likelihoods(m: Mechanism, prior: BeliefPrior, i: int) -> np.ndarray:
    """Rows of the support databases under Game i, one per support entry (i = 0 is the real game)."""
    if i == 0:
        rows = [m.log_row_array(x) for x in prior.support]
    else:
        rows = [m.log_row_array(m.space.suppress(x, i)) for x in prior.support]
    return np.stack(rows)


def _posteriors(log_likelihoods: np.ndarray, log_prior: np.ndarray):
    """Column-wise Bayes rule in the log domain.

    Returns (posteriors k x T, log marginal per transcript, defined mask).
    """
    joint = log_likelihoods + log_prior[:, None]
    defined = np.isfinite(joint.max(axis=0))
    posteriors = np.zeros_like(joint)
    posteriors[:, defined] = special.softmax(joint[:, defined], axis=0)
    log_marginal = np.full(joint.shape[1], -np.inf)
    log_marginal[defined] = special.logsumexp(joint[:, defined], axis=0)
    return posteriors, log_marginal, defined


def _game_is_trivial(space: DatabaseSpace, prior: BeliefPrior, i: int) -> bool:
    return all(x[i - 1] == space.default_symbol for x in prior.support)


def _check_prior(m: Mechanism, prior: BeliefPrior):
    if prior.space != m.space:
        raise InputError(f"Prior lives in {prior.space!r}, mechanism in {m.space!r}")


def _posterior_at(m: Mechanism, prior: BeliefPrior, i: int, t: Hashable) -> Distribution:
    _check_prior(m, prior)
    k = m.transcript_index(t)
    column = _game_log_likelihoods(m, prior, i)[:, k:k + 1]
    posteriors, _, defined = _posteriors(column, _log_prior(prior))
    if not defined[0]:
        game = "Game 0" if i == 0 else f"Game {i}"
        raise UndefinedPosteriorError(f"Transcript {t!r} has zero marginal probability under the prior in {game}")
    return Distribution(prior.support, posteriors[:, 0])


def posterior(m: Mechanism, prior: BeliefPrior, t: Hashable) -> Distribution:
    """b[x|t] = Pr[A(x)=t] b[x] / sum_y Pr[A(y)=t] b[y]."""
    return _posterior_at(m, prior, 0, t)


def posterior_game(m: Mechanism, prior: BeliefPrior, i: int, t: Hashable) -> Distribution:
    m.space.check_index(i)
    return _posterior_at(m, prior, i, t)


def semantic_loss(m: Mechanism, prior: BeliefPrior, t: Hashable) -> float:
    """max over games i of SD(b_0[.|t], b_i[.|t]), over the games where b_i is defined."""
    base = posterior(m, prior, t)
    loss, skipped = 0.0, []
    for i in range(1, m.space.n + 1):
        if _game_is_trivial(m.space, prior, i):
            continue
        try:
            game = posterior_game(m, prior, i, t)
        except UndefinedPosteriorError:
            skipped.append(i)
            continue
        loss = max(loss, prob_core.statistical_difference(base, game))
    if skipped:
        logger.warning("Transcript %r: posterior undefined in games %s; loss taken over the rest", t, skipped)
    return loss


def semantic_report(m: Mechanism, prior: BeliefPrior, real_db: Optional[Sequence] = None) -> SemanticReport:
    """Losses for every transcript plus the weights used by mass_exceeding.

    Without ``real_db`` transcripts are weighted by the prior mixture of
    rows; with it, by the row of the real database.
    """
    _check_prior(m, prior)
    space = m.space
    log_prior = _log_prior(prior)
    base, log_marginal, defined0 = _posteriors(_game_log_likelihoods(m, prior, 0), log_prior)
    count = len(m.transcripts)

    zero = [0.0] * count
    game_losses: List[List[Optional[float]]] = []
    losses = np.zeros(count)
    worst = np.zeros(count, dtype=int)
    undefined: Dict[str, List[int]] = {}
    for i in range(1, space.n + 1):
        if _game_is_trivial(space, prior, i):
            game_losses.append(zero)
            continue
        game, _, defined = _posteriors(_game_log_likelihoods(m, prior, i), log_prior)
        sd = np.minimum(0.5 * np.abs(base - game).sum(axis=0), 1.0)
        usable = defined & defined0
        column: List[Optional[float]] = [float(v) if ok else None for v, ok in zip(sd, usable)]
        game_losses.append(column)
        improved = usable & (sd > losses)
        losses[improved] = sd[improved]
        worst[improved] = i
        for k in np.flatnonzero(defined0 & ~defined):
            undefined.setdefault(str(m.transcripts[k]), []).append(i)

    if undefined:
        logger.warning("%d transcripts have an undefined posterior in some game; loss taken over defined games",
                       len(undefined))

    per_transcript = [float(v) if ok else None for v, ok in zip(losses, defined0)]
    real_probs = None
    if real_db is not None:
        real_probs = m.row_array(space.validate(real_db)).tolist()

    report = SemanticReport(
        weighting="real_db" if real_db is not None else "prior",
        real_db=space.encode(real_db) if real_db is not None else None,
        transcripts=[str(t) for t in m.transcripts],
        per_transcript_loss=per_transcript,
        worst_game=[int(g) if ok and g > 0 else None for g, ok in zip(worst, defined0)],
        game_losses=game_losses,
        transcript_prob_game0=np.exp(log_marginal).tolist(),
        transcript_prob_real_db=real_probs,
        undefined_games=undefined,
        epsilon_star=float(losses[defined0].max()) if np.any(defined0) else 0.0,
    )
    logger.debug("Semantic report for %s: epsilon_star=%.6g", m.name, report.epsilon_star)
    return report


def reality_oblivious_report(m: Mechanism, prior: BeliefPrior, real_db: Sequence) -> SemanticReport:
    """Same losses as semantic_report, weighted by the real database's transcript law."""
    return semantic_report(m, prior, real_db=real_db)


def annotate_bounds(report: SemanticReport, params: IndistParams, n: int) -> SemanticReport:
    """Fill bound_margins with the slack against each bound the params predict."""
    report.bound_margins["excess_ratio"] = params.excess_ratio - report.epsilon_star
    if params.epsilon > 0:
        report.bound_margins["semantic_mass"] = (
            params.semantic_delta(n) - report.mass_exceeding(params.semantic_epsilon)
        )
    return report


def check_semantic_bound(m: Mechanism, prior: BeliefPrior, params: IndistParams,
                         real_db: Optional[Sequence] = None, name: str = "semantic_bound") -> MarginReport:
    """mass_exceeding(e^{3 eps} - 1 + 2 sqrt(delta)) <= n (sqrt(delta) + 2 delta / (eps e^eps))."""
    report = annotate_bounds(semantic_report(m, prior, real_db=real_db), params, m.space.n)
    epsilon = params.semantic_epsilon
    bound = params.semantic_delta(m.space.n)
    observed = report.mass_exceeding(epsilon)
    return MarginReport(
        name=name,
        passed=observed <= bound + settings.IDENTITY_TOL,
        observed=observed,
        bound=bound,
        detail=f"epsilon'={epsilon:.6g}",
    )


def informed_prior(space: DatabaseSpace, real_db: Sequence, i: int,
                   weights: Optional[Sequence[float]] = None) -> BeliefPrior:
    """Prior that knows every coordinate of real_db except coordinate i."""
    real_db = space.validate(real_db)
    space.check_index(i)
    support = [real_db[:i - 1] + (symbol,) + real_db[i:] for symbol in space.domain]
    if weights is None:
        return BeliefPrior.uniform(space, support)
    return BeliefPrior.from_weights(space, support, weights)


def verify_informed_beliefs(m: Mechanism, params: IndistParams, real_db: Sequence,
                            rng: Optional[np.random.Generator] = None) -> List[MarginReport]:
    """Reality-oblivious bound for each of the n informed priors around real_db."""
    results = []
    for i in range(1, m.space.n + 1):
        weights = rng.dirichlet(np.ones(len(m.space.domain))) if rng is not None else None
        prior = informed_prior(m.space, real_db, i, weights)
        results.append(check_semantic_bound(m, prior, params, real_db=real_db, name=f"informed_{i}"))
    return results


def _joint_matrices(joint_x: Distribution, joint_y: Distribution):
    labels, px, py = align(joint_x, joint_y)
    for label in labels:
        if not (isinstance(label, tuple) and len(label) == 2):
            raise InputError(f"Joint outcome {label!r} is not an (input, transcript) pair")
    inputs = list(dict.fromkeys(label[0] for label in labels))
    transcripts = list(dict.fromkeys(label[1] for label in labels))
    row = {a: k for k, a in enumerate(inputs)}
    col = {t: k for k, t in enumerate(transcripts)}
    mx = np.zeros((len(inputs), len(transcripts)))
    my = np.zeros_like(mx)
    for (a, t), vx, vy in zip(labels, px, py):
        mx[row[a], col[t]] += vx
        my[row[a], col[t]] += vy
    return transcripts, mx, my


def _conditional_failures(joint_x: Distribution, joint_y: Distribution, params: IndistParams, passes) -> MarginReport:
    transcripts, mx, my = _joint_matrices(joint_x, joint_y)
    failure_x, failure_y, failed = [], [], 0
    for k in range(len(transcripts)):
        tx, ty = mx[:, k].sum(), my[:, k].sum()
        if tx == 0 and ty == 0:
            continue
        ok = tx > 0 and ty > 0 and passes(mx[:, k] / tx, my[:, k] / ty)
        if not ok:
            failed += 1
            failure_x.append(tx)
            failure_y.append(ty)
    observed = max(math.fsum(failure_x), math.fsum(failure_y))
    bound = params.conditional_failure_bound
    return MarginReport(
        name="",
        passed=observed <= bound + settings.IDENTITY_TOL,
        observed=observed,
        bound=bound,
        detail=f"failed_transcripts={failed}",
    )


def _premise(joint_x: Distribution, joint_y: Distribution, params: IndistParams, name: str) -> Optional[MarginReport]:
    params.require_positive_epsilon("conditional failure bound")
    tight = prob_core.tight_delta_at(joint_x, joint_y, params.epsilon)
    if tight > params.delta + settings.IDENTITY_TOL:
        return MarginReport(name=name, applicable=False, passed=True, observed=tight, bound=params.delta,
                            detail="joints are not (epsilon, delta)-indistinguishable")
    return None


def verify_conditional_indistinguishability(joint_x: Distribution, joint_y: Distribution,
                                            params: IndistParams) -> MarginReport:
    """Conditionals on each transcript must be (3 eps, 2 sqrt(delta))-indistinguishable off mass delta''.

    Joint outcomes are (input, transcript) pairs. Failure mass is measured
    under both transcript marginals; a transcript possible on one side only
    counts as a failure.
    """
    name = "conditional_indistinguishability"
    skipped = _premise(joint_x, joint_y, params, name)
    if skipped is not None:
        return skipped
    limit = params.conditional_delta + settings.IDENTITY_TOL
    epsilon = params.conditional_epsilon

    def passes(cx, cy):
        return max(prob_core.hockey_stick(cx, cy, epsilon), prob_core.hockey_stick(cy, cx, epsilon)) <= limit

    return _conditional_failures(joint_x, joint_y, params, passes).model_copy(update={"name": name})


def verify_conditional_statistical_difference(joint_x: Distribution, joint_y: Distribution,
                                              params: IndistParams) -> MarginReport:
    """Conditional SD at most e^{3 eps} - 1 + 2 sqrt(delta) off mass delta''."""
    name = "conditional_statistical_difference"
    skipped = _premise(joint_x, joint_y, params, name)
    if skipped is not None:
        return skipped
    limit = params.semantic_epsilon + settings.IDENTITY_TOL

    def passes(cx, cy):
        return 0.5 * np.abs(cx - cy).sum() <= limit

    return _conditional_failures(joint_x, joint_y, params, passes).model_copy(update={"name": name})


def game_joint_pair(m: Mechanism, prior: BeliefPrior, i: int) -> Tuple[Distribution, Distribution]:
    """Joints of (X, A(X)) and (X, A_i(X)) with X drawn from the prior."""
    game = mechanism_model.game_mechanism(m, i)
    rows_a = {x: m.row(x) for x in prior.support}
    rows_b = {x: game.row(x) for x in prior.support}
    return prob_core.pair_with_input(prior.weights, rows_a, rows_b)


def verify_good_set_semantics(m: Mechanism, params: IndistParams, prior: BeliefPrior,
                              good: Optional[Set[Database]] = None) -> MarginReport:
    """Semantic bound for priors concentrated on the good set.

    Not applicable when the prior puts less than 1 - delta on the good set.
    """
    from app.services.dp_analysis import good_set

    name = "good_set_semantic"
    _check_prior(m, prior)
    if good is None:
        good = good_set(m, params)
    inside = prior.mass(x for x in prior.support if x in good)
    if inside < 1 - params.delta - settings.IDENTITY_TOL:
        logger.info("Prior puts %.6g on the good set, below 1 - delta; bound not applicable", inside)
        return MarginReport(name=name, applicable=False, passed=True, observed=inside, bound=1 - params.delta,
                            detail="prior mass on good set below 1 - delta")
    result = check_semantic_bound(m, prior, params, name=name)
    return result.model_copy(update={"detail": f"{result.detail} good_set_mass={inside:.6g}"})


def reality_oblivious_counterexample(n: int, epsilon: float, delta: float, log_base: float = math.e,
                                     grid_step: Optional[float] = None, tail_mass: Optional[float] = None,
                                     threshold: float = 0.45) -> CounterexampleReport:
    """Gaussian noisy sum where a reality-oblivious adversary learns far more than epsilon.

    The prior is uniform over 0^n and (1, 0, ..., 0) while the real database
    is 1^n. Game 1 suppresses the only coordinate where the prior's
    databases differ, so its posterior never moves from uniform.
    """
    if not isinstance(n, int) or n < 2:
        raise InputError(f"n must be an integer of at least 2, got {n!r}")
    space = DatabaseSpace((0, 1), n)
    m = mechanism_model.make_gaussian_sum(space, epsilon, delta, log_base=log_base,
                                          grid_step=grid_step, tail_mass=tail_mass)
    grid = m.grid
    sigma = grid.spec.scale

    zeros = space.all_default()
    first = (1,) + zeros[1:]
    ones = (1,) * n
    touched = []
    for x, y in ((zeros, first), (space.suppress(ones, 1), ones)):
        tight = prob_core.tight_delta_at(m.row(x), m.row(y), epsilon)
        touched.append(TouchedPair(x=space.encode(x), y=space.encode(y), tight_delta=tight,
                                   passes=tight <= delta + 1e-6))

    prior = BeliefPrior.uniform(space, (zeros, first))
    log_prior = _log_prior(prior)
    base, _, _ = _posteriors(_game_log_likelihoods(m, prior, 0), log_prior)
    game1, _, _ = _posteriors(_game_log_likelihoods(m, prior, 1), log_prior)
    sd = 0.5 * np.abs(base - game1).sum(axis=0)

    weights = m.row_array(ones)
    log_zero, log_first = m.log_row_array(zeros), m.log_row_array(first)
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.exp(log_first - log_zero)
        centers = grid.centers
        ratio_model = np.exp((2 * centers - 1) / (2 * sigma ** 2))
        ratio_printed = np.exp((2 * centers - 1) / (2 * sigma))

    mass = math.fsum(weights[sd >= threshold].tolist())
    report = CounterexampleReport(
        n=n,
        epsilon=epsilon,
        delta=delta,
        log_base=log_base,
        sigma=sigma,
        grid_step=grid.step,
        real_db=space.encode(ones),
        prior_support=[space.encode(zeros), space.encode(first)],
        touched_pairs=touched,
        transcripts=list(grid.labels),
        centers=centers.tolist(),
        transcript_prob_real_db=weights.tolist(),
        ratio=ratio.tolist(),
        ratio_model=ratio_model.tolist(),
        ratio_printed=ratio_printed.tolist(),
        posterior_x0=base[0].tolist(),
        sd_game1=sd.tolist(),
        threshold=threshold,
        mass_sd_at_least=mass,
        game1_max_deviation=float(np.max(np.abs(game1 - 0.5))),
        max_sd=float(np.max(np.where(weights > 0, sd, 0.0))),
    )
    logger.info("Counterexample n=%d sigma=%.6g: SD >= %.3g on real-database mass %.6g", n, sigma, threshold, mass)
    if not report.touched_pairs_pass:
        logger.warning("Touched neighbor pairs exceed delta + 1e-6: %s",
                       ", ".join(f"{p.x}|{p.y} tight={p.tight_delta:.3e}" for p in touched))
    return report
