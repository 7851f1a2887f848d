import math

import numpy as np
import pytest

from app.core.errors import InputError, UndefinedConversionError, UndefinedPosteriorError
from app.models.database import DatabaseSpace
from app.models.distribution import Distribution
from app.models.mechanism import Mechanism
from app.models.prior import BeliefPrior
from app.schemas.params import IndistParams
from app.services import bayes_semantics, dp_analysis, mechanism_model, prob_core


def random_mechanism(rng, space, size=5):
    transcripts = [f"t{k}" for k in range(size)]
    table = {x: rng.dirichlet(np.ones(size)) for x in space.databases()}
    return Mechanism.from_table(space, transcripts, table)


def oracle_posterior(m, prior, t, i=0):
    weights = []
    for x, b in zip(prior.support, prior.probs):
        source = x if i == 0 else m.space.suppress(x, i)
        weights.append(m.prob(source, t) * b)
    total = sum(weights)
    return [w / total for w in weights]


class TestPosterior:
    def test_constant_mechanism_keeps_prior(self, binary_space):
        m = mechanism_model.constant_mechanism(binary_space, [0.4, 0.6], ["a", "b"])
        prior = BeliefPrior.from_weights(binary_space, list(binary_space.databases()), [1, 2, 3, 4])
        for t in m.transcripts:
            np.testing.assert_allclose(bayes_semantics.posterior(m, prior, t).probs, prior.probs, rtol=1e-12)

    def test_two_point_prior(self, rr_single):
        prior = BeliefPrior.uniform(rr_single.space, [(0,), (1,)])
        post = bayes_semantics.posterior(rr_single, prior, "0")
        assert post.probs.tolist() == pytest.approx([0.75, 0.25])

    def test_matches_joint_table_oracle(self, rng):
        space = DatabaseSpace((0, 1), 2)
        for _ in range(10):
            m = random_mechanism(rng, space)
            prior = BeliefPrior(space, list(space.databases()), rng.dirichlet(np.ones(4)))
            for t in m.transcripts:
                assert bayes_semantics.posterior(m, prior, t).probs.tolist() == pytest.approx(
                    oracle_posterior(m, prior, t), abs=1e-12)

    def test_zero_marginal(self):
        space = DatabaseSpace((0, 1), 1)
        m = Mechanism.from_table(space, ["a", "b"], {(0,): [1.0, 0.0], (1,): [0.5, 0.5]})
        with pytest.raises(UndefinedPosteriorError):
            bayes_semantics.posterior(m, BeliefPrior.point_mass(space, (0,)), "b")

    def test_zero_weight_support_is_inert(self, rng):
        space = DatabaseSpace((0, 1), 2)
        m = random_mechanism(rng, space)
        small = BeliefPrior(space, [(0, 0), (1, 1)], [0.3, 0.7])
        padded = BeliefPrior(space, [(0, 0), (1, 1), (0, 1)], [0.3, 0.7, 0.0])
        for t in m.transcripts:
            a = bayes_semantics.posterior(m, small, t).probs
            b = bayes_semantics.posterior(m, padded, t).probs
            assert b[:2].tolist() == pytest.approx(a.tolist(), abs=1e-15)
            assert b[2] == 0.0

    def test_prior_from_other_space(self, rr_single, binary_space):
        prior = BeliefPrior.point_mass(binary_space, (0, 0))
        with pytest.raises(InputError):
            bayes_semantics.posterior(rr_single, prior, "0")


class TestPosteriorGame:
    def test_support_differing_at_i_gives_prior(self, rr_quarter):
        prior = BeliefPrior(rr_quarter.space, [(0, 1), (1, 1)], [0.2, 0.8])
        for t in rr_quarter.transcripts:
            post = bayes_semantics.posterior_game(rr_quarter, prior, 1, t)
            assert post.probs.tolist() == pytest.approx([0.2, 0.8], abs=1e-15)

    def test_default_coordinate_matches_game_zero(self, rr_quarter):
        prior = BeliefPrior.uniform(rr_quarter.space, [(0, 0), (0, 1)])
        for t in rr_quarter.transcripts:
            assert bayes_semantics.posterior_game(rr_quarter, prior, 1, t) == bayes_semantics.posterior(
                rr_quarter, prior, t)

    def test_matches_suppressed_oracle(self, rng):
        space = DatabaseSpace((0, 1, 2), 2)
        m = random_mechanism(rng, space, size=4)
        prior = BeliefPrior(space, list(space.databases()), rng.dirichlet(np.ones(9)))
        for i in (1, 2):
            for t in m.transcripts:
                assert bayes_semantics.posterior_game(m, prior, i, t).probs.tolist() == pytest.approx(
                    oracle_posterior(m, prior, t, i), abs=1e-12)


class TestSemanticLoss:
    def test_constant_mechanism(self, binary_space):
        m = mechanism_model.constant_mechanism(binary_space, [0.4, 0.6], ["a", "b"])
        prior = BeliefPrior.uniform(binary_space, list(binary_space.databases()))
        assert bayes_semantics.semantic_loss(m, prior, "a") == pytest.approx(0.0, abs=1e-15)
        report = bayes_semantics.semantic_report(m, prior)
        assert report.epsilon_star == pytest.approx(0.0, abs=1e-15)
        assert report.mass_exceeding(1e-12) == 0.0

    def test_randomized_response_single(self, rr_single):
        prior = BeliefPrior.uniform(rr_single.space, [(0,), (1,)])
        assert bayes_semantics.semantic_loss(rr_single, prior, "0") == pytest.approx(0.25)

    def test_pure_dp_bound(self, rng, rr_quarter):
        bound = math.expm1(math.log(3))
        for _ in range(20):
            prior = BeliefPrior(rr_quarter.space, list(rr_quarter.space.databases()), rng.dirichlet(np.ones(4)))
            for t in rr_quarter.transcripts:
                assert bayes_semantics.semantic_loss(rr_quarter, prior, t) <= bound + 1e-12

    def test_epsilon_star_matches_exhaustive_oracle(self, rr_quarter):
        prior = BeliefPrior.uniform(rr_quarter.space, list(rr_quarter.space.databases()))
        expected = 0.0
        for t in rr_quarter.transcripts:
            base = oracle_posterior(rr_quarter, prior, t)
            for i in (1, 2):
                game = oracle_posterior(rr_quarter, prior, t, i)
                expected = max(expected, 0.5 * sum(abs(a - b) for a, b in zip(base, game)))
        report = bayes_semantics.semantic_report(rr_quarter, prior)
        assert report.epsilon_star == pytest.approx(expected, abs=1e-12)
        assert report.per_transcript_loss[0] == pytest.approx(
            bayes_semantics.semantic_loss(rr_quarter, prior, rr_quarter.transcripts[0]), abs=1e-15)

    def test_undefined_game_is_skipped_in_mass_exceeding(self):
        space = DatabaseSpace((0, 1), 1)
        m = Mechanism.from_table(space, ["a", "b"], {(0,): [1.0, 0.0], (1,): [0.5, 0.5]})
        prior = BeliefPrior.point_mass(space, (1,))
        assert bayes_semantics.semantic_loss(m, prior, "b") == 0.0
        report = bayes_semantics.semantic_report(m, prior)
        assert report.undefined_games == {"b": [1]}
        assert report.per_transcript_loss == [0.0, 0.0]
        assert not report.exceeding(0.9).any()
        assert report.mass_exceeding(0.0) == 0.0
        assert report.mass_exceeding(0.9) == 0.0


class TestSemanticReport:
    def test_mass_exceeding_non_increasing(self, rr_quarter):
        prior = BeliefPrior.uniform(rr_quarter.space, list(rr_quarter.space.databases()))
        report = bayes_semantics.semantic_report(rr_quarter, prior)
        masses = [report.mass_exceeding(eps) for eps in np.linspace(0, 1, 41)]
        assert all(a >= b for a, b in zip(masses, masses[1:]))
        assert 0.0 <= report.epsilon_star <= 1.0

    def test_real_db_weighting_matches_point_mass(self, rr_quarter):
        real = (1, 0)
        oblivious = bayes_semantics.reality_oblivious_report(
            rr_quarter, BeliefPrior.point_mass(rr_quarter.space, real), real)
        informed = bayes_semantics.semantic_report(rr_quarter, BeliefPrior.point_mass(rr_quarter.space, real))
        assert oblivious.transcript_prob_real_db == pytest.approx(informed.transcript_prob_game0, abs=1e-15)
        assert oblivious.weighting == "real_db"
        assert oblivious.real_db == "1,0"

    def test_approximate_dp_bound(self, rng, binary_space):
        m = mechanism_model.make_leaky_randomized_response(binary_space, 0.3, 1e-4)
        params = IndistParams(epsilon=math.log(0.7 / 0.3), delta=1e-4)
        for _ in range(10):
            prior = BeliefPrior(binary_space, list(binary_space.databases()), rng.dirichlet(np.ones(4)))
            result = bayes_semantics.check_semantic_bound(m, prior, params)
            assert result.passed
            assert result.margin >= -1e-10

    def test_annotate_bounds(self, rr_quarter):
        prior = BeliefPrior.uniform(rr_quarter.space, list(rr_quarter.space.databases()))
        report = bayes_semantics.annotate_bounds(
            bayes_semantics.semantic_report(rr_quarter, prior), IndistParams(epsilon=math.log(3)), 2)
        assert report.bound_margins["excess_ratio"] >= 0
        assert report.bound_margins["semantic_mass"] >= 0


class TestInformedBeliefs:
    def test_informed_prior_support(self):
        space = DatabaseSpace((0, 1, 2), 3)
        prior = bayes_semantics.informed_prior(space, (2, 1, 0), 2)
        assert prior.support == ((2, 0, 0), (2, 1, 0), (2, 2, 0))

    def test_bound_holds(self, rng, binary_space):
        m = mechanism_model.make_leaky_randomized_response(binary_space, 0.25, 1e-3)
        params = IndistParams(epsilon=math.log(3), delta=1e-3)
        results = bayes_semantics.verify_informed_beliefs(m, params, (1, 1), rng=rng)
        assert [r.name for r in results] == ["informed_1", "informed_2"]
        assert all(r.passed for r in results)


class TestConditionalIndistinguishability:
    def joints(self, rng, rows_a, rows_b, prior_weights):
        prior = Distribution([f"i{k}" for k in range(len(prior_weights))], prior_weights)
        labels = [f"t{k}" for k in range(rows_a.shape[1])]
        a = {index: Distribution(labels, row) for index, row in zip(prior.outcomes, rows_a)}
        b = {index: Distribution(labels, row) for index, row in zip(prior.outcomes, rows_b)}
        return prob_core.pair_with_input(prior, a, b)

    def test_pure_case_has_no_failures(self, rng):
        rows_a = rng.dirichlet(np.ones(6), size=6)
        rows_b = rows_a * np.exp(rng.uniform(-0.1, 0.1, rows_a.shape))
        rows_b /= rows_b.sum(axis=1, keepdims=True)
        joint_a, joint_b = self.joints(rng, rows_a, rows_b, rng.dirichlet(np.ones(6)))
        params = IndistParams(epsilon=0.2, delta=0.0)
        result = bayes_semantics.verify_conditional_indistinguishability(joint_a, joint_b, params)
        assert result.applicable
        assert result.observed == 0.0
        assert result.passed

    def test_random_approximate_joints(self, rng):
        params = IndistParams(epsilon=0.3, delta=1e-4)
        checked = 0
        for _ in range(40):
            rows_a = rng.dirichlet(np.ones(6), size=6)
            rows_b = rows_a * np.exp(rng.normal(0, 0.1, rows_a.shape))
            rows_b /= rows_b.sum(axis=1, keepdims=True)
            joint_a, joint_b = self.joints(rng, rows_a, rows_b, rng.dirichlet(np.ones(6)))
            result = bayes_semantics.verify_conditional_indistinguishability(joint_a, joint_b, params)
            if result.applicable:
                checked += 1
                assert result.passed
                assert result.bound == pytest.approx(0.0104939, abs=1e-6)
            sd = bayes_semantics.verify_conditional_statistical_difference(joint_a, joint_b, params)
            assert sd.passed
        assert checked > 0

    def test_premise_not_met(self, rng):
        joint_a = Distribution([("i0", "a"), ("i0", "b")], [1.0, 0.0])
        joint_b = Distribution([("i0", "a"), ("i0", "b")], [0.0, 1.0])
        result = bayes_semantics.verify_conditional_indistinguishability(joint_a, joint_b,
                                                                         IndistParams(epsilon=0.5, delta=0.01))
        assert not result.applicable

    def test_zero_epsilon_rejected(self):
        joint = Distribution([("i0", "a")], [1.0])
        with pytest.raises(UndefinedConversionError):
            bayes_semantics.verify_conditional_indistinguishability(joint, joint, IndistParams(epsilon=0, delta=0))

    def test_game_joint_pair(self, rr_quarter):
        prior = BeliefPrior.uniform(rr_quarter.space, list(rr_quarter.space.databases()))
        joint_x, joint_y = bayes_semantics.game_joint_pair(rr_quarter, prior, 1)
        params = IndistParams(epsilon=math.log(3), delta=0.0)
        assert prob_core.is_indistinguishable(joint_x, joint_y, params)
        result = bayes_semantics.verify_conditional_statistical_difference(joint_x, joint_y, params)
        assert result.passed and result.observed == 0.0


class TestGoodSetSemantics:
    def test_global_dp_reduces_to_plain_bound(self, rr_quarter):
        params = IndistParams(epsilon=math.log(3), delta=0.0)
        prior = BeliefPrior.uniform(rr_quarter.space, list(rr_quarter.space.databases()))
        result = bayes_semantics.verify_good_set_semantics(rr_quarter, params, prior)
        assert result.applicable and result.passed

    def test_not_applicable(self, rr_quarter):
        params = IndistParams(epsilon=math.log(3), delta=0.01)
        prior = BeliefPrior.uniform(rr_quarter.space, [(0, 0), (1, 1)])
        result = bayes_semantics.verify_good_set_semantics(rr_quarter, params, prior, good={(0, 0)})
        assert not result.applicable
        assert result.observed == pytest.approx(0.5)

    def test_median_on_low_sensitivity_prior(self, rng):
        space = DatabaseSpace((0, 1, 2, 3, 4), 5)
        median = mechanism_model.named_query(space, "median")
        m = mechanism_model.make_local_sensitivity_laplace(median, space, 1.0, 1.0, query="median")
        params = IndistParams(epsilon=1.0, delta=1e-3)
        good = dp_analysis.good_set(m, params)
        support = sorted(good)[:6]
        prior = BeliefPrior(space, support, rng.dirichlet(np.ones(len(support))))
        result = bayes_semantics.verify_good_set_semantics(m, params, prior, good=good)
        assert result.applicable and result.passed


class TestRealityObliviousCounterexample:
    def test_small_n_wide_noise(self):
        report = bayes_semantics.reality_oblivious_counterexample(2, 0.05, 0.1)
        assert report.max_sd < 0.1
        assert report.game1_max_deviation == 0.0

    def test_large_n_natural_log(self):
        report = bayes_semantics.reality_oblivious_counterexample(500, 0.5, 2 ** -20)
        assert report.sigma == pytest.approx(7.4466, abs=1e-3)
        assert report.mass_sd_at_least >= 0.99
        assert report.game1_max_deviation == 0.0
        assert report.max_sd <= 0.5
        for pair in report.touched_pairs:
            assert 2 ** -20 < pair.tight_delta < 1e-5

    def test_large_n_log_base_two(self):
        report = bayes_semantics.reality_oblivious_counterexample(500, 0.5, 2 ** -20, log_base=2)
        assert report.sigma == pytest.approx(math.sqrt(80))
        assert report.touched_pairs_pass
        assert report.mass_sd_at_least >= 0.99

    def test_likelihood_ratio_tracks_model(self):
        report = bayes_semantics.reality_oblivious_counterexample(100, 0.5, 2 ** -20)
        sigma2 = report.sigma ** 2
        assert (2 * 100 - 1) / (2 * sigma2) == pytest.approx(1.794, abs=1e-3)
        k = min(range(len(report.centers)), key=lambda j: abs(report.centers[j] - 100))
        assert report.ratio[k] == pytest.approx(report.ratio_model[k], rel=0.02)

    def test_rejects_small_n(self):
        with pytest.raises(InputError):
            bayes_semantics.reality_oblivious_counterexample(1, 0.5, 0.01)
