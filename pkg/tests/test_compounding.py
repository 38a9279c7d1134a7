import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from kmono.compounding import (
    CompoundInput,
    alternating_dual_inputs,
    closure_test,
    compound,
    compound_scaled,
    indicator_decomposition,
    mix_dfs,
    point_mass_inputs,
    reconstruct,
    remark4_counterexample,
    scale_inputs,
    tensor_compose,
)
from kmono.errors import DomainError, NotMonotoneError, PreconditionError
from kmono.grid_monotone import (
    Grid,
    GridFunction,
    check_fully_k,
    measure_to_df,
    negate_reflect,
    point_mass_df,
    random_grid,
    random_measure,
)
from kmono.multilinear import extend
from kmono.subset_core import PBFunction, gen_fully_k, or_function, saturating_sum, size_or_one
from strategies import pb_functions, unit_grid

HALF = Fraction(1, 2)
TRIANGLE = [(0, 0), (1, 0), (0, 1)]


def table(*values: int | str) -> PBFunction:
    return PBFunction.from_values([Fraction(v) for v in values])


def inputs_on(grid: Grid, *fns) -> list[GridFunction]:
    return [GridFunction.tabulate(grid, fn) for fn in fns]


@st.composite
def unit_functions(draw, grid: Grid, count: int) -> list[GridFunction]:
    values = st.lists(
        st.fractions(min_value=0, max_value=1, max_denominator=4), min_size=grid.size, max_size=grid.size
    )
    return [GridFunction.on(grid, draw(values)) for _ in range(count)]


class TestCompound:
    def test_dictator_returns_the_inner_function(self):
        g = GridFunction.tabulate(unit_grid(3, 3), lambda s, t: s * t)
        assert compound(CompoundInput.of(table(0, 1), [g])) == g

    def test_size_or_one_formula(self):
        grid = unit_grid(3, 3)
        gs = inputs_on(grid, lambda s, t: s * t, lambda s, t: s, lambda s, t: t)
        h = compound(CompoundInput.of(size_or_one(), gs))
        for point in grid.points():
            x = [g(*point) for g in gs]
            assert h(*point) == sum(x) + math.prod(1 - xi for xi in x)

    def test_saturating_sum_formula(self):
        grid = unit_grid(3, 3)
        gs = inputs_on(grid, lambda s, t: s * t, lambda s, t: s, lambda s, t: t)
        h = compound(CompoundInput.of(saturating_sum(), gs))
        for point in grid.points():
            x = [g(*point) for g in gs]
            assert h(*point) == 2 * sum(x) - math.prod(x)

    def test_constant_f(self):
        gs = inputs_on(unit_grid(2), lambda s: s, lambda s: 1 - s)
        assert set(compound(CompoundInput.of(table(4, 4, 4, 4), gs)).values) == {4}

    def test_inner_count_must_match(self):
        with pytest.raises(ValidationError):
            CompoundInput.of(size_or_one(), inputs_on(unit_grid(2), lambda s: s))

    def test_grids_must_agree(self):
        gs = [GridFunction.tabulate(unit_grid(2), lambda s: s), GridFunction.tabulate(unit_grid(3), lambda s: s)]
        with pytest.raises(PreconditionError, match="g_2"):
            compound(CompoundInput.of(or_function(), gs))

    def test_values_must_lie_in_unit_interval(self):
        gs = inputs_on(unit_grid(2), lambda s: s, lambda s: 2 * s)
        with pytest.raises(PreconditionError, match=r"outside \[0, 1\]"):
            compound(CompoundInput.of(or_function(), gs))

    @given(pb_functions(max_d=3), st.data())
    def test_scaled_evaluation_agrees(self, f, data):
        grid = unit_grid(2, 2)
        gs = data.draw(unit_functions(grid, f.d))
        assert compound_scaled(extend(f), gs) == compound(CompoundInput.of(f, gs))


class TestCertificates:
    def test_k_equals_d_gives_the_coefficients(self):
        f = table(0, 1, 1, 3)
        certificate = indicator_decomposition(f, 2, [(HALF, 0), (0, 1)], unit_grid(3, 3))
        assert [term.weight for term in certificate.terms] == [0, 1, 1, 1]
        assert certificate.terms[0].threshold == "always"
        assert certificate.terms[-1].threshold == (HALF, 1)
        assert certificate.terms[-1].group == "interval"

    def test_size_or_one_on_the_triangle(self):
        grid = unit_grid(2, 2)
        certificate = indicator_decomposition(size_or_one(), 2, TRIANGLE, grid)
        assert certificate.weight_sum == 3
        assert certificate.negative_terms() == []
        assert reconstruct(certificate, grid) == compound(point_mass_inputs(size_or_one(), TRIANGLE, grid))

    def test_interval_terms_follow_the_partition(self):
        certificate = indicator_decomposition(size_or_one(), 2, TRIANGLE, unit_grid(2, 2))
        intervals = sorted((term.sigma, term.tau) for term in certificate.terms if term.group == "interval")
        assert intervals == [([1, 2], [1, 2]), ([1, 3], [1, 3]), ([2, 3], [1, 2, 3])]

    @settings(max_examples=40)
    @given(st.integers(0, 10_000), st.integers(2, 4), st.data())
    def test_random_certificates_reconstruct_the_compound(self, seed, d, data):
        k = data.draw(st.integers(1, 2))
        f = gen_fully_k(d, k, "increasing", seed)
        grid = unit_grid(*([3] * k))
        points = [data.draw(st.sampled_from(list(grid.points()))) for _ in range(d)]
        certificate = indicator_decomposition(f, k, points, grid)
        assert certificate.negative_terms() == []
        assert reconstruct(certificate, grid) == compound(point_mass_inputs(f, points, grid))

    def test_refuses_functions_that_are_not_fully_k_increasing(self):
        points = [(0, 0, 0), (1, 0, 0), (0, 1, 1)]
        with pytest.raises(NotMonotoneError) as info:
            indicator_decomposition(size_or_one(), 3, points, unit_grid(2, 2, 2))
        assert info.value.witness.beta == [1, 2, 3]
        assert info.value.witness.value == -1

    def test_grid_dimension_must_equal_k(self):
        with pytest.raises(PreconditionError):
            indicator_decomposition(size_or_one(), 2, TRIANGLE, unit_grid(2, 2, 2))

    def test_points_must_be_on_the_grid(self):
        with pytest.raises(DomainError):
            indicator_decomposition(size_or_one(), 2, [(0, 0), (1, 0), (HALF, 1)], unit_grid(2, 2))


class TestClosure:
    @pytest.mark.parametrize("mode", ["increasing", "alternating"])
    @pytest.mark.parametrize("d, k", [(3, 2), (2, 2), (3, 1)])
    def test_passes(self, mode, d, k):
        report = closure_test(mode, d=d, k=k, trials=10, seed=7)
        assert report.verdict == "pass"
        assert report.result["passed"] == 10

    def test_rejects_k_above_d(self):
        with pytest.raises(ValidationError):
            closure_test(d=2, k=3)

    def test_mixtures_of_dfs_are_dfs(self):
        grid = unit_grid(3, 3)
        gs = [point_mass_df((HALF, HALF), grid), point_mass_df((1, 0), grid)]
        mixed = mix_dfs([Fraction(1, 3), Fraction(2, 3)], gs)
        assert check_fully_k(mixed, 2)
        assert mixed(1, 1) == 1

    @settings(max_examples=30)
    @given(pb_functions(max_d=3), st.integers(2, 3), st.randoms(use_true_random=False))
    def test_compound_is_affine_in_a_mixed_df(self, f, terms, rng):
        grid = unit_grid(2, 3)
        components = [measure_to_df(random_measure(grid, rng), grid) for _ in range(terms)]
        rest = [measure_to_df(random_measure(grid, rng), grid) for _ in range(f.d - 1)]
        raw = [rng.randint(1, 4) for _ in range(terms)]
        weights = [Fraction(w, sum(raw)) for w in raw]
        mixed = compound(CompoundInput.of(f, [mix_dfs(weights, components), *rest]))
        parts = [compound(CompoundInput.of(f, [g, *rest])).values for g in components]
        expected = [sum((w * part[i] for w, part in zip(weights, parts)), Fraction(0)) for i in range(grid.size)]
        assert list(mixed.values) == expected

    def test_mixture_weights_must_sum_to_one(self):
        g = point_mass_df((0,), unit_grid(2))
        with pytest.raises(PreconditionError):
            mix_dfs([HALF, HALF, HALF], [g, g, g])

    def test_scale_inputs(self):
        grid = unit_grid(3)
        gs = inputs_on(grid, lambda s: s / 2, lambda s: Fraction(0))
        scaled, sups = scale_inputs(gs)
        assert sups == [HALF, 0]
        assert scaled[0].values == (0, HALF, 1)
        assert scaled[1] == gs[1]

    @given(pb_functions(max_d=3), st.data())
    def test_alternating_dual_reflects_the_compound(self, f, data):
        gs = data.draw(unit_functions(unit_grid(2, 3), f.d))
        inputs = CompoundInput.of(f, gs)
        dual, c = alternating_dual_inputs(inputs)
        assert c == f.values[-1]
        assert compound(dual) == negate_reflect(compound(inputs), c)


class TestCounterexamples:
    def test_tensor_composition_of_or(self):
        identity = GridFunction.tabulate(unit_grid(3), lambda s: s)
        F = tensor_compose(extend(or_function()), [identity, identity])
        result = check_fully_k(F, 2)
        assert not result
        assert result.witness.s == [0, 0]
        assert result.witness.h == [1, 1]
        assert result.witness.value == -1

    @settings(max_examples=30)
    @given(st.integers(0, 10_000), st.data(), st.randoms(use_true_random=False))
    def test_tensor_composition_with_nonnegative_coefficients(self, seed, data, rng):
        d = data.draw(st.integers(2, 3))
        dims = data.draw(st.lists(st.integers(1, 2), min_size=d, max_size=d).filter(lambda dims: sum(dims) <= 4))
        p = extend(gen_fully_k(d, d, "increasing", seed, path="combination"))
        assert all(c >= 0 for c in p.coeffs)
        grids = [random_grid(dim, 3, rng) for dim in dims]
        F = tensor_compose(p, [measure_to_df(random_measure(grid, rng), grid) for grid in grids])
        assert F.dim == sum(dims)
        assert check_fully_k(F, F.dim)

    def test_tensor_composition_of_a_constant(self):
        g = GridFunction.tabulate(unit_grid(2, 2), lambda s, t: s * t)
        F = tensor_compose(extend(table(2, 2, 2, 2)), [g, g])
        assert F.dim == 4
        assert set(F.values) == {2}

    def test_tensor_dimension_cap(self):
        g = GridFunction.tabulate(unit_grid(2, 2, 2), lambda *x: Fraction(0))
        with pytest.raises(PreconditionError):
            tensor_compose(extend(or_function()), [g, g])

    def test_non_multilinear_outer_function(self):
        report = remark4_counterexample()
        assert report.verdict == "pass"
        assert [check.verdict for check in report.checks] == ["pass"] * 5
        assert report.result["witness"]["value"] == "-1"
