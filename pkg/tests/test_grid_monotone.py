import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from kmono.errors import DomainError, NotMonotoneError, PreconditionError
from kmono.grid_monotone import (
    Axis,
    DiscreteMeasure,
    Grid,
    GridFunction,
    MultiIndex,
    StepVector,
    check_fully_k,
    check_fully_k_naive,
    check_n_monotone,
    compose_pointwise,
    df_to_measure,
    forward_difference,
    lemma3_approx,
    measure_to_df,
    nabla_difference,
    negate_reflect,
    point_mass_df,
    random_grid,
    random_measure,
    reflect_argument,
    restrict,
)
from strategies import grid_functions, grids, unit_grid

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def st_product() -> GridFunction:
    return GridFunction.tabulate(unit_grid(3, 3), lambda s, t: s * t)


def or_surface() -> GridFunction:
    return GridFunction.tabulate(unit_grid(3, 3), lambda s, t: s + t - s * t)


class TestTypes:
    def test_axis_must_increase(self):
        with pytest.raises(ValidationError):
            Axis(points=(Fraction(1), Fraction(0)))

    def test_axis_serializes_as_list(self):
        assert Axis(points=(Fraction(0), HALF)).model_dump(mode="json") == ["0", "1/2"]
        assert Axis.model_validate(["0", "1/2"]).points == (0, HALF)

    def test_grid_dimension_cap(self):
        with pytest.raises(ValidationError):
            Grid.of(*([0, 1],) * 9)

    def test_grid_function_length(self):
        with pytest.raises(ValidationError):
            GridFunction(axes=unit_grid(2).axes, values=(Fraction(0),))

    def test_evaluation_off_grid(self):
        with pytest.raises(DomainError):
            st_product()(Fraction(1, 3), 0)

    def test_multi_index_cap(self):
        with pytest.raises(ValidationError):
            MultiIndex(n=(7,))

    def test_measure_masses_nonnegative(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure(points=((Fraction(0),),), masses=(Fraction(-1),))

    def test_exact_functions_reject_floats(self):
        with pytest.raises(ValidationError, match="exact mode"):
            GridFunction.model_validate({"axes": [["0", "1"]], "values": [0.1, 0.3]})
        F = GridFunction.model_validate({"axes": [["0", "1"]], "mode": "float", "values": [0.1, 0.3]})
        assert not F.is_exact

    def test_tabulate_records_the_mode(self):
        assert GridFunction.tabulate(unit_grid(2), lambda s: float(s)).mode == "float"
        assert st_product().mode == "exact"

    def test_axes_and_steps_are_rational(self):
        with pytest.raises(ValidationError):
            Axis.model_validate([0.0, 0.5])
        with pytest.raises(ValidationError):
            StepVector(h=(0.5,))

    def test_exact_measures_reject_float_masses(self):
        with pytest.raises(ValidationError, match="exact mode"):
            DiscreteMeasure.model_validate({"points": [["0"]], "masses": [0.5]})


class TestForwardDifference:
    def test_zero_order_is_evaluation(self):
        assert forward_difference(st_product(), (0, 0), (0, 0), (HALF, 1)) == HALF

    def test_threshold_indicator(self):
        A = GridFunction.tabulate(unit_grid(3, 3), lambda s, t: Fraction(int(s * t >= HALF)))
        assert forward_difference(A, (1, 1), (HALF, HALF), (HALF, HALF)) == -1

    def test_second_difference_of_square(self):
        F = GridFunction.tabulate(Grid.of(range(5)), lambda t: t * t)
        assert forward_difference(F, (2,), (1,), (0,)) == 2

    def test_off_grid_names_q(self):
        F = GridFunction.tabulate(Grid.of(range(5)), lambda t: t)
        with pytest.raises(DomainError, match=r"q=\[2\]"):
            forward_difference(F, (2,), (3,), (0,))

    def test_nabla_sign(self):
        F = GridFunction.tabulate(Grid.of(range(5)), lambda t: t**3)
        assert nabla_difference(F, (3,), (1,), (0,)) == -forward_difference(F, (3,), (1,), (0,))

    @given(grid_functions(max_dim=2), st.data())
    def test_mixed_difference_composes_single_steps(self, F, data):
        if F.dim != 2 or any(n < 2 for n in F.grid.shape):
            return
        s1, s2 = (data.draw(st.sampled_from(axis.points[:-1])) for axis in F.axes)
        t1 = data.draw(st.sampled_from([p for p in F.axes[0].points if p > s1]))
        t2 = data.draw(st.sampled_from([p for p in F.axes[1].points if p > s2]))
        h = (t1 - s1, t2 - s2)
        upper = forward_difference(F, (1, 0), h, (s1, t2))
        lower = forward_difference(F, (1, 0), h, (s1, s2))
        assert forward_difference(F, (1, 1), h, (s1, s2)) == upper - lower


class TestCheckNMonotone:
    def test_square_is_2_increasing(self):
        F = GridFunction.tabulate(Grid.of(range(5)), lambda t: t * t)
        assert check_n_monotone(F, (2,))

    def test_cube_witness(self):
        F = GridFunction.tabulate(Grid.of(range(-2, 3)), lambda t: t**3)
        result = check_n_monotone(F, (3,))
        assert not result
        assert result.witness.p == [2]
        assert result.witness.s == [-2]
        assert result.witness.h == [1]
        assert result.witness.value == -6

    @pytest.mark.parametrize("mode", ["increasing", "decreasing", "alternating"])
    def test_constant(self, mode):
        F = GridFunction.tabulate(unit_grid(3, 3), lambda s, t: Fraction(2))
        assert check_n_monotone(F, (2, 2), mode)

    def test_zero_multi_index(self):
        with pytest.raises(PreconditionError):
            check_n_monotone(st_product(), (0, 0))


class TestCheckFullyK:
    def test_or_surface_is_not_fully_2_increasing(self):
        result = check_fully_k(or_surface(), 2)
        assert not result
        assert result.witness.p == [1, 1]
        assert result.witness.s == [0, 0]
        assert result.witness.h == [1, 1]
        assert result.witness.value == -1

    def test_or_surface_is_increasing(self):
        assert check_fully_k(or_surface(), 1)

    @pytest.mark.parametrize("threshold", [(0, 0), (HALF, 1), (1, HALF), (1, 1)])
    def test_point_mass_dfs_are_fully_increasing(self, threshold):
        F = point_mass_df(threshold, unit_grid(3, 3))
        assert check_fully_k_naive(F, 2)
        assert check_fully_k(F, 2)

    @given(grid_functions(), st.data())
    def test_adjacent_steps_match_exhaustive_oracle(self, F, data):
        k = data.draw(st.integers(1, F.dim))
        mode = data.draw(st.sampled_from(["increasing", "decreasing", "alternating"]))
        epsilon = data.draw(st.sampled_from([0, HALF, 1]))
        assert check_fully_k(F, k, mode, epsilon) == check_fully_k_naive(F, k, mode, epsilon)

    def test_tolerance_bounds_every_step(self):
        F = GridFunction.on(Grid.of(range(3)), [Fraction(0), Fraction(-4, 5), Fraction(-8, 5)])
        result = check_fully_k(F, 1, epsilon=1)
        assert not result
        assert (result.witness.p, result.witness.s, result.witness.h) == ([1], [0], [2])
        assert result.witness.value == Fraction(-8, 5)
        assert check_fully_k(F, 1, epsilon=2)

    @given(grid_functions(max_dim=2), st.data())
    def test_alternating_is_increasing_after_negate_reflect(self, F, data):
        k = data.draw(st.integers(1, F.dim))
        assert check_fully_k(F, k, "alternating").holds == check_fully_k(negate_reflect(F, 1), k).holds

    def test_k_out_of_range(self):
        with pytest.raises(PreconditionError):
            check_fully_k(or_surface(), 3)


class TestReflection:
    def test_constant(self):
        F = GridFunction.tabulate(unit_grid(2), lambda s: Fraction(3))
        assert negate_reflect(F, 5).values == (2, 2)

    def test_reflected_grid(self):
        G = negate_reflect(st_product(), 1)
        assert G.grid == Grid.of([-1, -HALF, 0], [-1, -HALF, 0])
        assert G(-1, -HALF) == 1 - HALF

    @given(grid_functions(), st.fractions(max_denominator=3))
    def test_double_reflection(self, F, c):
        assert negate_reflect(negate_reflect(F, c), c) == F

    def test_reflect_argument(self):
        G = reflect_argument(st_product())
        assert G(-1, -HALF) == HALF

    @given(grid_functions(), st.data())
    def test_decreasing_is_increasing_after_reflecting_the_argument(self, F, data):
        k = data.draw(st.integers(1, F.dim))
        assert check_fully_k(F, k, "decreasing").holds == check_fully_k(reflect_argument(F), k).holds


class TestPointMass:
    def test_minimum_gives_constant_one(self):
        assert set(point_mass_df((0, 0), unit_grid(3, 3)).values) == {1}

    def test_maximum_gives_single_corner(self):
        assert point_mass_df((1, 1), unit_grid(3, 3)).values == (0,) * 8 + (1,)

    def test_support(self):
        F = point_mass_df((HALF, 1), unit_grid(3, 3))
        ones = [point for point, value in zip(F.grid.points(), F.values) if value == 1]
        assert ones == [(HALF, 1), (1, 1)]

    def test_off_grid(self):
        with pytest.raises(DomainError):
            point_mass_df((QUARTER, 0), unit_grid(3, 3))


class TestMeasures:
    def test_st_has_four_quarter_masses(self):
        mu = df_to_measure(st_product())
        assert mu.canonical() == {(HALF, HALF): QUARTER, (HALF, 1): QUARTER, (1, HALF): QUARTER, (1, 1): QUARTER}

    def test_point_mass(self):
        mu = df_to_measure(point_mass_df((HALF, 0), unit_grid(3, 3)))
        assert mu.canonical() == {(HALF, 0): 1}

    def test_or_surface_is_not_a_df(self):
        with pytest.raises(NotMonotoneError) as info:
            df_to_measure(or_surface())
        assert info.value.witness.value == -1

    def test_negative_minimum_is_not_a_df(self):
        F = GridFunction.tabulate(unit_grid(2), lambda s: s - 1)
        with pytest.raises(NotMonotoneError, match="minimum"):
            df_to_measure(F)

    def test_measure_to_df(self):
        grid = unit_grid(3, 3)
        mu = DiscreteMeasure(points=((HALF, HALF), (HALF, 1), (1, HALF), (1, 1)), masses=(QUARTER,) * 4)
        assert measure_to_df(mu, grid) == st_product()
        assert measure_to_df(DiscreteMeasure(points=((HALF, 1),), masses=(1,)), grid) == point_mass_df((HALF, 1), grid)
        assert set(measure_to_df(DiscreteMeasure(), grid).values) == {0}

    @given(grids(), st.randoms(use_true_random=False))
    def test_round_trip(self, grid, rng):
        mu = random_measure(grid, rng)
        F = measure_to_df(mu, grid)
        assert check_fully_k(F, grid.dim)
        assert df_to_measure(F).canonical() == mu.canonical()

    def test_normalized_measures_have_unit_mass(self):
        rng = random.Random(3)
        for _ in range(20):
            grid = random_grid(2, 3, rng)
            assert random_measure(grid, rng, normalized=True).total == 1


class TestRestrictAndApprox:
    def test_restrict(self):
        F = restrict(st_product(), [[0, HALF], [HALF, 1]])
        assert F.values == (0, 0, QUARTER, HALF)

    def test_full_grid_with_unit_maximum(self):
        F = st_product()
        assert lemma3_approx(F, [list(axis.points) for axis in F.axes]) == F

    def test_lower_corner(self):
        g = lemma3_approx(st_product(), [[0, HALF], [0, HALF]])
        assert g(HALF, HALF) == 1
        assert g(1, 1) == 1
        assert g(HALF, 0) == 0

    def test_values_must_be_probabilities(self):
        F = GridFunction.tabulate(unit_grid(2), lambda s: 2 * s)
        with pytest.raises(PreconditionError):
            lemma3_approx(F, [[0, 1]])

    def test_vanishing_maximum(self):
        with pytest.raises(PreconditionError, match="vanishes"):
            lemma3_approx(st_product(), [[0], [0, 1]])


class TestComposePointwise:
    def test_indicator_of_threshold(self):
        phi = point_mass_df((HALF, HALF, HALF), Grid.of(*([0, QUARTER, HALF, 1],) * 3))
        g = st_product()
        composed = compose_pointwise(phi, [g, g, g])
        expected = GridFunction.tabulate(g.grid, lambda s, t: Fraction(int(s * t >= HALF)))
        assert composed == expected

    def test_values_off_the_outer_grid(self):
        phi = point_mass_df((HALF,), unit_grid(3))
        with pytest.raises(DomainError):
            compose_pointwise(phi, [GridFunction.tabulate(unit_grid(2), lambda s: s / 3)])
