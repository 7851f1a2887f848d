"""Seeded property suites checking the privacy laws on random and adversarial instances.

Every law draws trial t from ``trial_rng(seed, law_name, t)``, so a fixed
seed reproduces the suite exactly. A law passes when its worst margin
(bound minus observed) stays at or above ``-MARGIN_TOL``.
"""
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import InputError
from app.core.logging import logger
from app.models.database import DatabaseSpace
from app.models.distribution import Distribution
from app.models.prior import BeliefPrior
from app.schemas.params import IndistParams
from app.schemas.report import LawResult, SuiteReport
from app.services import bayes_semantics, dp_analysis, mechanism_model, prob_core
from app.utils.helpers import trial_rng

MARGIN_TOL = 1e-10
SUITES = ("claims", "theorems", "all")
FLIP_PROBS = (0.1, 0.25, 0.4)


class LawTracker:
    """Accumulates the worst margin of one law across its trials."""

    def __init__(self, name: str):
        self.name = name
        self.worst = math.inf
        self.trials = 0
        self.skipped = 0
        self.notes: Dict[str, int] = {}

    def record(self, bound: float, observed: float):
        self.trials += 1
        self.worst = min(self.worst, bound - observed)

    def note(self, key: str, count: int = 1):
        self.notes[key] = self.notes.get(key, 0) + count

    def result(self) -> LawResult:
        detail = " ".join(f"{key}={value}" for key, value in sorted(self.notes.items()))
        if self.skipped:
            detail = f"{detail} skipped={self.skipped}".strip()
        worst = self.worst if self.trials else 0.0
        return LawResult(name=self.name, passed=worst >= -MARGIN_TOL, worst_margin=worst,
                         trials=self.trials, detail=detail)


def random_distribution(rng: np.random.Generator, size: int, prefix: str = "o") -> Distribution:
    return Distribution([f"{prefix}{k}" for k in range(size)], rng.dirichlet(np.ones(size)))


def random_pair(rng: np.random.Generator, max_size: int = 8) -> Tuple[Distribution, Distribution]:
    size = int(rng.integers(2, max_size + 1))
    return random_distribution(rng, size), random_distribution(rng, size)


def perturbed(rng: np.random.Generator, p: Distribution, scale: float) -> Distribution:
    """p reweighted by log-normal noise and renormalized; supports are kept."""
    return Distribution.from_weights(p.outcomes, p.probs * np.exp(rng.normal(0, scale, len(p))))


def _tight_params(p: Distribution, q: Distribution, epsilon: float) -> IndistParams:
    return IndistParams(epsilon=epsilon, delta=prob_core.tight_delta_at(p, q, epsilon))


# ---------------------------------------------------------------- claims suite

def pointwise_fixtures() -> List[Tuple[Distribution, Distribution, IndistParams]]:
    half = Distribution(["a", "b"], [0.75, 0.25])
    flipped = Distribution(["a", "b"], [0.25, 0.75])
    return [
        (half, half, IndistParams(epsilon=0.0, delta=0.0)),
        (half, flipped, IndistParams(epsilon=math.log(2), delta=1.0)),
        (Distribution(["a", "b", "c"], [0.5, 0.3, 0.2]), Distribution(["a", "b", "c"], [0.5, 0.2, 0.3]),
         IndistParams(epsilon=math.log(1.5), delta=0.0)),
    ]


def law_pointwise_implies_set(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("pointwise_implies_set")
    cases = list(pointwise_fixtures())
    for trial in range(trials):
        rng = trial_rng(seed, tracker.name, trial)
        p, q = random_pair(rng)
        epsilon = float(rng.uniform(0, 1))
        report = prob_core.pointwise_check(p, q, IndistParams(epsilon=epsilon, delta=0.0))
        cases.append((p, q, IndistParams(epsilon=epsilon, delta=max(report.bad_mass_x, report.bad_mass_y))))
    for p, q, params in cases:
        if not prob_core.pointwise_check(p, q, params).passed:
            tracker.skipped += 1
            continue
        converted = prob_core.pointwise_to_indist(params)
        tracker.record(converted.delta, prob_core.tight_delta_at(p, q, converted.epsilon))
    return tracker.result()


def set_implies_pointwise_fixtures() -> List[Tuple[Distribution, Distribution, float]]:
    return [
        (Distribution(["a", "b"], [0.75, 0.25]), Distribution(["a", "b"], [0.25, 0.75]), math.log(3)),
        (Distribution(["a", "b"], [0.5, 0.5]), Distribution(["a", "b"], [0.5, 0.5]), 0.1),
        (Distribution(["a", "b", "c"], [0.5, 0.3, 0.2]), Distribution(["a", "b", "c"], [0.45, 0.3, 0.25]), 0.2),
    ]


def law_set_implies_pointwise(seed: int, trials: int) -> LawResult:
    """Bad mass under the second distribution stays within the converted delta.

    The bad mass under the first distribution is reported as a count of
    trials where it alone exceeds the converted delta.
    """
    tracker = LawTracker("set_implies_pointwise")
    cases = list(set_implies_pointwise_fixtures())
    for trial in range(trials):
        rng = trial_rng(seed, tracker.name, trial)
        p, q = random_pair(rng)
        cases.append((p, q, float(rng.uniform(0.05, 0.3))))
    for p, q, epsilon in cases:
        converted = prob_core.indist_to_pointwise(_tight_params(p, q, epsilon))
        report = prob_core.pointwise_check(p, q, converted)
        tracker.record(converted.delta, report.bad_mass_y)
        if report.bad_mass_x > converted.delta + MARGIN_TOL:
            tracker.note("x_side_excess")
    return tracker.result()


def _random_family(rng: np.random.Generator, indices: int, outcomes: int, scale: float):
    prior = random_distribution(rng, indices, prefix="i")
    rows_a = {index: random_distribution(rng, outcomes) for index in prior.outcomes}
    rows_b = {index: perturbed(rng, row, scale) for index, row in rows_a.items()}
    return prior, rows_a, rows_b


def law_joint_with_input(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("joint_with_input")
    for trial in range(trials):
        rng = trial_rng(seed, tracker.name, trial)
        prior, rows_a, rows_b = _random_family(rng, int(rng.integers(2, 6)), 6, 0.3)
        epsilon = float(rng.uniform(0.05, 1))
        delta = max(prob_core.tight_delta_at(rows_a[i], rows_b[i], epsilon) for i in prior.outcomes)
        joint_a, joint_b = prob_core.pair_with_input(prior, rows_a, rows_b)
        tracker.record(delta, prob_core.tight_delta_at(joint_a, joint_b, epsilon))
    return tracker.result()


def law_joint_with_input_exceptions(seed: int, trials: int) -> LawResult:
    """Rows indistinguishable except on a small index mass give (epsilon, 2 delta) joints."""
    tracker = LawTracker("joint_with_input_exceptions")
    for trial in range(trials):
        rng = trial_rng(seed, tracker.name, trial)
        indices = int(rng.integers(3, 7))
        weights = rng.dirichlet(np.ones(indices))
        weights[0] = float(rng.uniform(0.001, 0.1))
        weights[1:] *= (1 - weights[0]) / weights[1:].sum()
        prior = Distribution([f"i{k}" for k in range(indices)], weights)
        rows_a = {index: random_distribution(rng, 6) for index in prior.outcomes}
        rows_b = {index: perturbed(rng, row, 0.2) for index, row in rows_a.items()}
        exceptional = prior.outcomes[0]
        rows_a[exceptional] = Distribution(["o0", "o1", "o2", "o3", "o4", "o5"], [1, 0, 0, 0, 0, 0])
        rows_b[exceptional] = Distribution(["o0", "o1", "o2", "o3", "o4", "o5"], [0, 0, 0, 0, 0, 1])
        epsilon = float(rng.uniform(0, 1))
        delta = max(
            max(prob_core.tight_delta_at(rows_a[i], rows_b[i], epsilon) for i in prior.outcomes[1:]),
            float(weights[0]),
        )
        joint_a, joint_b = prob_core.pair_with_input(prior, rows_a, rows_b)
        tracker.record(2 * delta, prob_core.tight_delta_at(joint_a, joint_b, epsilon))
    return tracker.result()


def law_post_processing(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("post_processing")
    for trial in range(trials):
        rng = trial_rng(seed, tracker.name, trial)
        p, q = random_distribution(rng, 6), random_distribution(rng, 6)
        channel = {label: random_distribution(rng, 4, prefix="g") for label in p.outcomes}
        gp, gq = prob_core.postprocess(p, channel), prob_core.postprocess(q, channel)
        for epsilon in (0.0, 0.1, 1.0, float(rng.uniform(0, 2))):
            tracker.record(prob_core.tight_delta_at(p, q, epsilon), prob_core.tight_delta_at(gp, gq, epsilon))
    return tracker.result()


def law_statistical_difference_bound(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("statistical_difference_bound")
    epsilons = np.round(np.arange(0, 201) * 0.01, 2)
    for trial in range(trials):
        rng = trial_rng(seed, tracker.name, trial)
        p, q = random_pair(rng)
        sd = prob_core.statistical_difference(p, q)
        for epsilon in epsilons:
            params = _tight_params(p, q, float(epsilon))
            tracker.record(prob_core.sd_bound_from_indist(params), sd)
    return tracker.result()


# -------------------------------------------------------------- theorems suite

def _random_prior(rng: np.random.Generator, space: DatabaseSpace, databases: list) -> BeliefPrior:
    size = int(rng.integers(2, len(databases) + 1))
    chosen = rng.choice(len(databases), size=size, replace=False)
    return BeliefPrior(space, [databases[k] for k in sorted(chosen)], rng.dirichlet(np.ones(size)))


def _rr_epsilon(flip_prob: float) -> float:
    return math.log((1 - flip_prob) / flip_prob)


def law_pure_dp_implies_semantic(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("pure_dp_implies_semantic")
    priors = min(trials, settings.RANDOM_PRIORS)
    for flip_prob in FLIP_PROBS:
        for n in (1, 2, 3):
            space = DatabaseSpace((0, 1), n)
            m = mechanism_model.make_randomized_response(space, flip_prob)
            databases = list(space.databases())
            bound = math.expm1(_rr_epsilon(flip_prob))
            for trial in range(priors):
                rng = trial_rng(seed, f"{tracker.name}:{flip_prob}:{n}", trial)
                report = bayes_semantics.semantic_report(m, _random_prior(rng, space, databases))
                tracker.record(bound, report.epsilon_star)
    return tracker.result()


def law_semantic_implies_pure_dp(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("semantic_implies_pure_dp")
    for flip_prob in FLIP_PROBS:
        for n in (1, 2, 3):
            m = mechanism_model.make_randomized_response(DatabaseSpace((0, 1), n), flip_prob)
            epsilon_bar = math.expm1(_rr_epsilon(flip_prob))
            if epsilon_bar <= math.expm1(2):
                for pair in dp_analysis.semantic_to_dp_extraction(m, epsilon_bar, 0.0).pairs:
                    if not pair.premise_holds:
                        tracker.skipped += 1
                        continue
                    ok = pair.set_passes and pair.pointwise_passes
                    tracker.record(0.0 if ok else -1.0, 0.0)
            _record_tight_extraction(tracker, m)
    return tracker.result()


def _record_tight_extraction(tracker: LawTracker, m):
    """Extraction at epsilon_bar = 2 epsilon_star per pair, where the exact ratio bound must hold."""
    for x, y in dp_analysis.neighbor_pairs(m.space):
        star = bayes_semantics.semantic_report(m, BeliefPrior.uniform(m.space, (x, y))).epsilon_star
        pair = dp_analysis.semantic_to_dp_extraction(m, 2 * star, 0.0, pairs=[(x, y)]).pairs[0]
        ok = pair.premise_holds and pair.exact_bound_passes
        tracker.record(0.0 if ok else -1.0, 0.0)
        if not (pair.set_passes and pair.pointwise_passes):
            tracker.note("two_epsilon_form_fails")


LAPLACE_TARGETS = ((0.5, 1e-4, 4), (1.0, 1e-6, 6))


def law_approx_dp_implies_semantic(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("approx_dp_implies_semantic")
    priors = min(trials, 50)
    for epsilon, delta, n in LAPLACE_TARGETS:
        space = DatabaseSpace((0, 1), n)
        m = mechanism_model.make_laplace_sum(space, 1.0 / epsilon)
        tight = dp_analysis.tight_delta_curve(m, [epsilon]).delta_at[0].delta
        if tight > delta:
            raise InputError(f"Discretized Laplace sum has tight delta {tight:.3e} above target {delta:.3e}")
        params = IndistParams(epsilon=epsilon, delta=tight)
        databases = list(space.databases())
        for trial in range(priors):
            rng = trial_rng(seed, f"{tracker.name}:{epsilon}", trial)
            result = bayes_semantics.check_semantic_bound(m, _random_prior(rng, space, databases), params)
            tracker.record(result.bound, result.observed)
    return tracker.result()


def law_semantic_implies_approx_dp(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("semantic_implies_approx_dp")
    for leak_prob in (0.01, 0.05):
        m = mechanism_model.make_leaky_randomized_response(DatabaseSpace((0, 1), 2), 0.25, leak_prob)
        report = dp_analysis.semantic_to_dp_extraction(m, math.expm1(_rr_epsilon(0.25)), leak_prob)
        for pair in report.pairs:
            if not pair.premise_holds:
                tracker.skipped += 1
                continue
            ok = pair.set_passes and pair.pointwise_passes
            tracker.record(0.0 if ok else -1.0, 0.0)
    return tracker.result()


def median_mechanism():
    space = DatabaseSpace(tuple(range(5)), 5)
    f = mechanism_model.named_query(space, "median")
    return space, f, mechanism_model.make_local_sensitivity_laplace(f, space, 1.0, 1.0, query="median")


GOOD_SET_PARAMS = IndistParams(epsilon=1.0, delta=1e-3)


def law_good_set_semantic(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("good_set_semantic")
    space, f, m = median_mechanism()
    good = dp_analysis.good_set(m, GOOD_SET_PARAMS)
    low = {x for x in space.databases() if mechanism_model.local_sensitivity(f, space, x) <= 1}
    tracker.record(0.0, 0.0 if good == low else 1.0)
    good_list, bad_list = sorted(good), sorted(set(space.databases()) - good)
    for trial in range(min(trials, 10)):
        rng = trial_rng(seed, tracker.name, trial)
        inside = [good_list[k] for k in rng.choice(len(good_list), size=6, replace=False)]
        prior = BeliefPrior(space, inside, rng.dirichlet(np.ones(len(inside))))
        result = bayes_semantics.verify_good_set_semantics(m, GOOD_SET_PARAMS, prior, good=good)
        if not result.applicable:
            tracker.record(0.0, 1.0)
            continue
        tracker.record(result.bound, result.observed)

        half = BeliefPrior.uniform(space, [inside[0], bad_list[int(rng.integers(len(bad_list)))]])
        if bayes_semantics.verify_good_set_semantics(m, GOOD_SET_PARAMS, half, good=good).applicable:
            tracker.record(0.0, 1.0)
        else:
            tracker.note("not_applicable")
    return tracker.result()


def law_informed_belief_semantic(seed: int, trials: int) -> LawResult:
    tracker = LawTracker("informed_belief_semantic")
    for n in (1, 2, 3):
        space = DatabaseSpace((0, 1), n)
        databases = list(space.databases())
        for flip_prob in FLIP_PROBS:
            m = mechanism_model.make_randomized_response(space, flip_prob)
            params = IndistParams(epsilon=_rr_epsilon(flip_prob), delta=1e-6)
            for trial in range(min(trials, 5)):
                rng = trial_rng(seed, f"{tracker.name}:{flip_prob}:{n}", trial)
                real_db = databases[int(rng.integers(len(databases)))]
                for result in bayes_semantics.verify_informed_beliefs(m, params, real_db, rng=rng):
                    tracker.record(result.bound, result.observed)
    return tracker.result()


def random_joint_pair(rng: np.random.Generator, size: int = 6):
    labels = [(f"x{a}", f"t{t}") for a in range(size) for t in range(size)]
    joint_x = Distribution(labels, rng.dirichlet(np.ones(size * size)))
    return joint_x, perturbed(rng, joint_x, 0.3)


def _conditional_law(name: str, verify: Callable, seed: int, trials: int) -> LawResult:
    tracker = LawTracker(name)
    for trial in range(min(trials, 100)):
        rng = trial_rng(seed, "random_joint_pairs", trial)
        joint_x, joint_y = random_joint_pair(rng)
        params = _tight_params(joint_x, joint_y, float(rng.uniform(0.1, 1)))
        result = verify(joint_x, joint_y, params)
        tracker.record(result.bound, result.observed)
    return tracker.result()


def law_conditional_indistinguishability(seed: int, trials: int) -> LawResult:
    return _conditional_law("conditional_indistinguishability",
                            bayes_semantics.verify_conditional_indistinguishability, seed, trials)


def law_conditional_statistical_difference(seed: int, trials: int) -> LawResult:
    return _conditional_law("conditional_statistical_difference",
                            bayes_semantics.verify_conditional_statistical_difference, seed, trials)


CLAIM_LAWS: Tuple[Tuple[Callable, Callable[[int], int]], ...] = (
    (law_pointwise_implies_set, lambda trials: trials),
    (law_set_implies_pointwise, lambda trials: trials),
    (law_joint_with_input, lambda trials: min(trials, 200)),
    (law_joint_with_input_exceptions, lambda trials: min(trials, 200)),
    (law_post_processing, lambda trials: trials),
    (law_statistical_difference_bound, lambda trials: trials),
)

THEOREM_LAWS: Tuple[Callable, ...] = (
    law_pure_dp_implies_semantic,
    law_semantic_implies_pure_dp,
    law_approx_dp_implies_semantic,
    law_semantic_implies_approx_dp,
    law_good_set_semantic,
    law_informed_belief_semantic,
    law_conditional_indistinguishability,
    law_conditional_statistical_difference,
)


def run_suite(suite: str, trials: int = None, seed: int = None) -> SuiteReport:
    if suite not in SUITES:
        raise InputError(f"Unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    trials = settings.DEFAULT_TRIALS if trials is None else trials
    seed = settings.DEFAULT_SEED if seed is None else seed
    if trials < 1:
        raise InputError("trials must be at least 1")

    results = []
    if suite in ("claims", "all"):
        for law, trial_count in CLAIM_LAWS:
            results.append(law(seed, trial_count(trials)))
            logger.info(results[-1].line())
    if suite in ("theorems", "all"):
        for law in THEOREM_LAWS:
            results.append(law(seed, trials))
            logger.info(results[-1].line())
    return SuiteReport(suite=suite, seed=seed, trials=trials, results=results)
