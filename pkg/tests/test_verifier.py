import math

import pytest

from app.core.errors import InputError
from app.services import verifier


@pytest.mark.parametrize("law", [law for law, _ in verifier.CLAIM_LAWS])
def test_claim_laws_hold(law):
    result = law(7, 25)
    assert result.passed, result.line()
    assert result.trials > 0


@pytest.mark.parametrize("law", [
    verifier.law_pure_dp_implies_semantic,
    verifier.law_semantic_implies_pure_dp,
    verifier.law_semantic_implies_approx_dp,
    verifier.law_informed_belief_semantic,
    verifier.law_conditional_indistinguishability,
    verifier.law_conditional_statistical_difference,
])
def test_theorem_laws_hold(law):
    result = law(7, 3)
    assert result.passed, result.line()
    assert result.trials > 0


def test_approx_dp_law_holds():
    result = verifier.law_approx_dp_implies_semantic(7, 2)
    assert result.passed, result.line()
    assert result.trials == 4


def test_good_set_law_holds():
    result = verifier.law_good_set_semantic(7, 2)
    assert result.passed, result.line()
    assert "not_applicable=2" in result.detail


def test_pointwise_fixtures_are_checked():
    result = verifier.law_pointwise_implies_set(0, 1)
    assert result.trials >= len(verifier.pointwise_fixtures())


def test_suite_is_deterministic():
    first = verifier.run_suite("claims", trials=5, seed=11)
    second = verifier.run_suite("claims", trials=5, seed=11)
    assert first == second
    assert [r.name for r in first.results] == [
        "pointwise_implies_set",
        "set_implies_pointwise",
        "joint_with_input",
        "joint_with_input_exceptions",
        "post_processing",
        "statistical_difference_bound",
    ]


def test_seed_changes_draws():
    first = verifier.law_post_processing(1, 5)
    second = verifier.law_post_processing(2, 5)
    assert first.worst_margin != second.worst_margin


def test_unknown_suite():
    with pytest.raises(InputError):
        verifier.run_suite("lemmas")


def test_trials_must_be_positive():
    with pytest.raises(InputError):
        verifier.run_suite("claims", trials=0)


def test_law_line_format():
    tracker = verifier.LawTracker("example")
    tracker.record(1.0, 0.25)
    tracker.note("x_side_excess", 2)
    line = tracker.result().line()
    assert line == "PASS example worst_margin=7.500000e-01 trials=1 x_side_excess=2"


def test_tracker_failure():
    tracker = verifier.LawTracker("example")
    tracker.record(0.0, 1e-9)
    assert not tracker.result().passed
    tracker = verifier.LawTracker("example")
    tracker.record(0.0, 1e-11)
    assert tracker.result().passed


def test_tracker_without_trials():
    result = verifier.LawTracker("empty").result()
    assert result.passed and result.worst_margin == 0.0 and not math.isinf(result.worst_margin)


def test_pure_extraction_law_records_two_epsilon_gap():
    result = verifier.law_semantic_implies_pure_dp(7, 3)
    assert result.passed, result.line()
    assert "two_epsilon_form_fails=" in result.detail


def test_informed_belief_law_covers_every_length():
    result = verifier.law_informed_belief_semantic(7, 1)
    assert result.passed, result.line()
    assert result.trials == len(verifier.FLIP_PROBS) * (1 + 2 + 3)
