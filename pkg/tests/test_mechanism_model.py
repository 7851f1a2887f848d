import math

import numpy as np
import pytest

from app.core.errors import CapabilityError, InputError
from app.models.database import DatabaseSpace
from app.schemas.mechanism_file import NoiseSpec
from app.services import dp_analysis, mechanism_model


class TestDatabaseSpace:
    def test_neighbors_count(self):
        space = DatabaseSpace((0, 1, 2), 3)
        ys = mechanism_model.neighbors(space, (0, 1, 2))
        assert len(ys) == 3 * 2
        assert len(set(ys)) == len(ys)
        assert all(sum(a != b for a, b in zip(y, (0, 1, 2))) == 1 for y in ys)

    def test_single_symbol_domain_has_no_neighbors(self):
        space = DatabaseSpace(("a",), 2)
        assert mechanism_model.neighbors(space, ("a", "a")) == []

    def test_suppress(self):
        space = DatabaseSpace((0, 1), 3)
        assert mechanism_model.suppress(space, (1, 1, 1), 2) == (1, 0, 1)

    def test_suppress_is_idempotent(self):
        space = DatabaseSpace((0, 1), 3)
        x = mechanism_model.suppress(space, (1, 1, 1), 1)
        assert mechanism_model.suppress(space, x, 1) == x

    def test_suppress_out_of_range(self):
        space = DatabaseSpace((0, 1), 3)
        with pytest.raises(InputError):
            mechanism_model.suppress(space, (1, 1, 1), 0)
        with pytest.raises(InputError):
            mechanism_model.suppress(space, (1, 1, 1), 4)

    def test_entry_outside_domain(self):
        with pytest.raises(InputError):
            DatabaseSpace((0, 1), 2).validate((0, 2))

    def test_default_symbol(self):
        space = DatabaseSpace(("a", "b"), 2, default_symbol="b")
        assert space.all_default() == ("b", "b")
        with pytest.raises(InputError):
            DatabaseSpace(("a", "b"), 2, default_symbol="c")

    def test_enumeration_cap(self):
        space = DatabaseSpace((0, 1), 21)
        assert not space.enumerable
        with pytest.raises(CapabilityError):
            list(space.databases())

    def test_decode_round_trip(self):
        space = DatabaseSpace((0, 1), 3)
        assert space.decode(space.encode((1, 0, 1))) == (1, 0, 1)
        with pytest.raises(InputError):
            space.decode("1,0,7")


class TestGameMechanism:
    def test_rows_match_suppressed_database(self, rr_quarter):
        game = mechanism_model.game_mechanism(rr_quarter, 1)
        for x in rr_quarter.space.databases():
            expected = rr_quarter.row_array(rr_quarter.space.suppress(x, 1))
            assert np.array_equal(game.row_array(x), expected)

    def test_constant_mechanism_games_are_identical(self, binary_space):
        m = mechanism_model.constant_mechanism(binary_space, [0.3, 0.7], ["a", "b"])
        game = mechanism_model.game_mechanism(m, 2)
        for x in binary_space.databases():
            assert np.array_equal(game.row_array(x), m.row_array(x))


class TestRandomizedResponse:
    def test_rows_are_distributions(self, rr_quarter):
        for x in rr_quarter.space.databases():
            assert math.fsum(rr_quarter.row_array(x).tolist()) == pytest.approx(1.0, abs=1e-12)

    def test_single_coordinate(self, rr_single):
        assert rr_single.prob((0,), "0") == pytest.approx(0.75)
        assert rr_single.prob((0,), "1") == pytest.approx(0.25)
        assert dp_analysis.epsilon_max(rr_single) == pytest.approx(math.log(3))

    def test_near_half_flip_is_nearly_private(self):
        m = mechanism_model.make_randomized_response(DatabaseSpace((0, 1), 1), 0.499)
        assert dp_analysis.epsilon_max(m) < 0.01

    @pytest.mark.parametrize("flip_prob", [0.0, 0.5, 0.7])
    def test_rejects_flip_prob(self, flip_prob):
        with pytest.raises(InputError):
            mechanism_model.make_randomized_response(DatabaseSpace((0, 1), 1), flip_prob)

    def test_rejects_non_binary_domain(self):
        with pytest.raises(InputError):
            mechanism_model.make_randomized_response(DatabaseSpace((0, 1, 2), 1), 0.25)

    def test_leaky_variant(self, binary_space):
        m = mechanism_model.make_leaky_randomized_response(binary_space, 0.25, 0.01)
        assert len(m.transcripts) == 8
        assert math.isinf(dp_analysis.epsilon_max(m))
        report = dp_analysis.tight_delta_curve(m, [math.log(3)])
        assert report.delta_at[0].delta == pytest.approx(0.01)


class TestNoisySums:
    def test_laplace_rows_normalized(self):
        m = mechanism_model.make_laplace_sum(DatabaseSpace((0, 1), 4), scale=2.0)
        for x in m.space.databases():
            assert math.fsum(m.row_array(x).tolist()) == pytest.approx(1.0, abs=1e-9)

    def test_laplace_shift_bound(self):
        m = mechanism_model.make_laplace_sum(DatabaseSpace((0, 1), 4), scale=2.0)
        assert dp_analysis.epsilon_max(m) <= 0.5 + 1e-9

    def test_gaussian_sigma(self):
        assert mechanism_model.gaussian_sigma(0.5, 2 ** -20) == pytest.approx(7.4466, abs=1e-3)
        assert mechanism_model.gaussian_sigma(0.5, 2 ** -20, log_base=2) == pytest.approx(math.sqrt(80))

    @pytest.mark.parametrize("epsilon, delta", [(0.0, 0.1), (0.5, 0.0), (0.5, 1.0)])
    def test_gaussian_sigma_rejects(self, epsilon, delta):
        with pytest.raises(InputError):
            mechanism_model.gaussian_sigma(epsilon, delta)

    def test_gaussian_large_n_is_lazy(self):
        space = DatabaseSpace((0, 1), 500)
        m = mechanism_model.make_gaussian_sum(space, 0.5, 2 ** -20)
        assert m.representation == "generator"
        assert m.descriptor.type == "gaussian_sum"
        row = m.row_array((1,) * 500)
        assert math.fsum(row.tolist()) == pytest.approx(1.0, abs=1e-9)
        assert m.grid.labels[int(np.argmax(row))] == m.transcripts[m.grid.cell_of(500.0)]

    def test_coarse_grid_rejected(self):
        with pytest.raises(InputError):
            mechanism_model.make_laplace_sum(DatabaseSpace((0, 1), 2), scale=1.0, grid_step=2.0)

    def test_bounds_must_cover(self):
        noise = NoiseSpec(kind="laplace", scale=1.0, bounds=(-1.0, 3.0))
        with pytest.raises(InputError):
            mechanism_model.make_noisy_sum(DatabaseSpace((0, 1), 2), noise)


class TestLocalSensitivity:
    def test_median_example(self):
        space = DatabaseSpace((0, 1, 2, 3, 4), 5)
        median = mechanism_model.named_query(space, "median")
        assert mechanism_model.local_sensitivity(median, space, (0, 0, 2, 4, 4)) == 2.0

    def test_constant_query(self):
        space = DatabaseSpace((0, 1), 3)
        table = {x: 1.0 for x in space.databases()}
        assert mechanism_model.local_sensitivity(table, space, (0, 1, 0)) == 0.0

    def test_ls_laplace_of_sum_equals_laplace_sum(self):
        space = DatabaseSpace((0, 1), 3)
        total = mechanism_model.named_query(space, "sum")
        ls = mechanism_model.make_local_sensitivity_laplace(total, space, 1.0, 0.5, query="sum")
        direct = mechanism_model.make_laplace_sum(space, scale=2.0)
        assert ls.transcripts == direct.transcripts
        for x in space.databases():
            np.testing.assert_allclose(ls.row_array(x), direct.row_array(x), rtol=1e-12, atol=1e-300)

    def test_ls_laplace_rejects_nonpositive(self):
        space = DatabaseSpace((0, 1), 2)
        with pytest.raises(InputError):
            mechanism_model.make_local_sensitivity_laplace({x: 0.0 for x in space.databases()}, space, 0.0, 1.0)


class TestRepresentations:
    def test_dense_and_generator_agree(self):
        m = mechanism_model.make_laplace_sum(DatabaseSpace((0, 1), 3), scale=1.0)
        dense = m.densify()
        assert dense.representation == "dense"
        for x in m.space.databases():
            assert np.array_equal(dense.row_array(x), m.row_array(x))

    def test_build_from_descriptor(self):
        space = DatabaseSpace((0, 1), 3)
        m = mechanism_model.make_laplace_sum(space, scale=1.0)
        rebuilt = mechanism_model.build_from_spec(space, m.descriptor)
        for x in space.databases():
            assert np.array_equal(rebuilt.row_array(x), m.row_array(x))

    def test_table_needs_every_row(self, binary_space):
        from app.models.mechanism import Mechanism

        with pytest.raises(InputError):
            Mechanism.from_table(binary_space, ["a"], {(0, 0): [1.0]})

    def test_row_must_normalize(self):
        from app.models.mechanism import Mechanism

        space = DatabaseSpace((0, 1), 1)
        with pytest.raises(InputError):
            Mechanism.from_table(space, ["a", "b"], {(0,): [0.5, 0.5], (1,): [0.5, 0.6]})
