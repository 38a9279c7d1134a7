from __future__ import annotations

import logging
import random
import time
from fractions import Fraction
from typing import Callable, Literal, Self, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .configs import CAPS, ClosureConfig
from .errors import ClosureViolationError, NotMonotoneError, PreconditionError
from .grid_monotone import (
    Grid,
    GridFunction,
    check_fully_k,
    compose_pointwise,
    df_to_measure,
    forward_difference,
    measure_to_df,
    negate_reflect,
    point_mass_df,
    random_grid,
    random_measure,
)
from .interval_partition import VectorFamily, partition_upper
from .messages import Report, Witness, entry
from .multilinear import MLPoly, argument_scale, eval_bernoulli, evaluate
from .subset_core import PBFunction, complement_dual, delta_point, elements_of, gen_fully_k, is_fully_k, mobius
from .types import Number, Rational, Scalar

logger = logging.getLogger(__name__)


class CompoundInput(BaseModel):
    model_config = ConfigDict(frozen=True)

    f: PBFunction
    gs: tuple[GridFunction, ...]

    @model_validator(mode="after")
    def _one_function_per_variable(self) -> Self:
        if self.f.d < 1:
            raise ValueError("f needs at least one variable")
        if len(self.gs) != self.f.d:
            raise ValueError(f"f has {self.f.d} variables but {len(self.gs)} inner functions were given")
        return self

    @classmethod
    def of(cls, f: PBFunction, gs: Sequence[GridFunction]) -> Self:
        return cls(f=f, gs=tuple(gs))

    @property
    def grid(self) -> Grid:
        return self.gs[0].grid


def _check_inputs(inputs: CompoundInput) -> None:
    grid = inputs.grid
    for i, g in enumerate(inputs.gs, start=1):
        if g.axes != grid.axes:
            raise PreconditionError(f"g_{i} lives on {g.grid}, expected the grid of g_1 ({grid})")
        if any(not 0 <= value <= 1 for value in g.values):
            raise PreconditionError(f"g_{i} takes values outside [0, 1]")


# h(x) = Σ_α f(α) Π_{i∈α} g_i(x) Π_{j∉α} (1 - g_j(x))
def compound(inputs: CompoundInput) -> GridFunction:
    _check_inputs(inputs)
    f, gs = inputs.f, inputs.gs
    return GridFunction.on(
        inputs.grid,
        (eval_bernoulli(f, [g.values[flat] for g in gs]) for flat in range(inputs.grid.size)),
    )


type Threshold = tuple[Rational, ...] | Literal["always"]


class CertificateTerm(BaseModel):
    model_config = ConfigDict(frozen=True)

    weight: Scalar
    threshold: Threshold
    group: Literal["low", "interval"]
    # α for low-order terms, σ for interval terms (1-based).
    sigma: list[int] = Field(default_factory=list)
    tau: list[int] | None = None


class DecompositionCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    terms: list[CertificateTerm] = Field(default_factory=list)

    @property
    def weight_sum(self) -> Number:
        return sum((term.weight for term in self.terms), Fraction(0))

    def negative_terms(self) -> list[CertificateTerm]:
        return [term for term in self.terms if term.threshold != "always" and term.weight < 0]


def indicator_decomposition(
    f: PBFunction,
    k: int,
    points: Sequence[Sequence[Number]],
    grid: Grid,
) -> DecompositionCertificate:
    if len(points) != f.d:
        raise PreconditionError(f"need one mass location per variable ({f.d}), got {len(points)}")
    if grid.dim != k:
        raise PreconditionError(f"mass locations are {k}-vectors but the grid has dimension {grid.dim}")
    for point in points:
        grid.require_index(point)
    check = is_fully_k(f, k, "increasing")
    if not check:
        raise NotMonotoneError(f"{f} is not fully {k}-increasing; no certificate exists", check.witness)

    family = VectorFamily(k=k, vectors=tuple(tuple(point) for point in points))
    coeffs = mobius(f.values)
    terms = []
    for alpha in range(1 << f.d):
        if alpha.bit_count() >= k:
            continue
        threshold: Threshold = "always" if alpha == 0 else family.maximum(alpha)
        terms.append(CertificateTerm(weight=coeffs[alpha], threshold=threshold, group="low", sigma=elements_of(alpha)))
    for interval in partition_upper(family, k).intervals:
        sigma, tau = interval.sigma, interval.tau
        terms.append(
            CertificateTerm(
                weight=delta_point(f, sigma, tau & ~sigma),
                threshold=family.maximum(sigma),
                group="interval",
                sigma=elements_of(sigma),
                tau=elements_of(tau),
            )
        )
    logger.debug("certificate for %s at k=%d has %d terms", f, k, len(terms))
    return DecompositionCertificate(k=k, terms=terms)


def reconstruct(certificate: DecompositionCertificate, grid: Grid) -> GridFunction:
    for term in certificate.terms:
        if term.threshold != "always":
            grid.require_index(term.threshold)

    def step(*x: Number) -> Number:
        total: Number = Fraction(0)
        for term in certificate.terms:
            if term.threshold == "always" or all(xi >= ti for xi, ti in zip(x, term.threshold)):
                total += term.weight
        return total

    return GridFunction.tabulate(grid, step)


def point_mass_inputs(f: PBFunction, points: Sequence[Sequence[Number]], grid: Grid) -> CompoundInput:
    return CompoundInput.of(f, [point_mass_df(point, grid) for point in points])


def mix_dfs(weights: Sequence[Number], gs: Sequence[GridFunction]) -> GridFunction:
    if len(weights) != len(gs) or not gs:
        raise PreconditionError(f"{len(weights)} weights for {len(gs)} functions")
    if any(weight < 0 for weight in weights) or sum(weights) != 1:
        raise PreconditionError("mixture weights must be nonnegative and sum to 1")
    grid = gs[0].grid
    if any(g.axes != grid.axes for g in gs):
        raise PreconditionError("mixture components must share one grid")
    values = [sum((w * g.values[flat] for w, g in zip(weights, gs)), Fraction(0)) for flat in range(grid.size)]
    return GridFunction.on(grid, values)


def scale_inputs(gs: Sequence[GridFunction]) -> tuple[list[GridFunction], list[Number]]:
    # c_i = sup g_i; an identically zero g_i stays as is with c_i = 0.
    scaled, sups = [], []
    for g in gs:
        top = max(g.values)
        if top == 0:
            scaled.append(g)
        else:
            scaled.append(GridFunction.on(g.grid, (value / top for value in g.values)))
        sups.append(top)
    return scaled, sups


def compound_scaled(p: MLPoly, gs: Sequence[GridFunction]) -> GridFunction:
    scaled, sups = scale_inputs(gs)
    q = argument_scale(p, sups)
    grid = gs[0].grid
    return GridFunction.on(grid, (evaluate(q, [g.values[flat] for g in scaled]) for flat in range(grid.size)))


def alternating_dual_inputs(inputs: CompoundInput) -> tuple[CompoundInput, Number]:
    # The dual compound is negate_reflect(compound(inputs), c) with c = f([d]).
    c = inputs.f.values[inputs.f.full]
    dual = CompoundInput.of(complement_dual(inputs.f, c), [negate_reflect(g, 1) for g in inputs.gs])
    return dual, c


def _trial_inputs(config: ClosureConfig, trial_seed: int) -> CompoundInput:
    rng = random.Random(trial_seed)
    f = gen_fully_k(config.d, config.k, config.mode, trial_seed)
    base = random_grid(config.k, config.axis_length, rng)
    if config.mode == "increasing":
        gs = [measure_to_df(random_measure(base, rng), base) for _ in range(config.d)]
    else:
        # Alternating inputs are reflection duals of d.f.s drawn on -A.
        gs = [negate_reflect(measure_to_df(random_measure(base, rng), base), 1) for _ in range(config.d)]
    return CompoundInput.of(f, gs)


def closure_test(
    mode: Literal["increasing", "alternating"] = "increasing",
    d: int = 3,
    k: int = 2,
    axis_length: int = 3,
    trials: int = 500,
    seed: int = 1,
    logger: logging.Logger = logger,
) -> Report:
    config = ClosureConfig(mode=mode, d=d, k=k, axis_length=axis_length, trials=trials, seed=seed)
    started = time.perf_counter()
    logger.info("closure test: %d trials, mode=%s, d=%d, k=%d, seed=%d", trials, mode, d, k, seed)
    for trial in range(config.trials):
        trial_seed = config.seed + trial
        inputs = _trial_inputs(config, trial_seed)
        h = compound(inputs)
        check = check_fully_k(h, config.k, config.mode)
        if not check:
            logger.error("closure violated at trial %d (seed=%d): %s", trial, trial_seed, check.witness)
            raise ClosureViolationError(
                f"compound of fully {config.k}-{config.mode} inputs is not fully {config.k}-{config.mode}",
                seed=trial_seed,
                witness=check.witness,
            )
        logger.debug("trial %d (seed=%d) on %s passed", trial, trial_seed, inputs.grid)
    return Report(
        verdict="pass",
        timing_ms=(time.perf_counter() - started) * 1000,
        seed=config.seed,
        result={"mode": config.mode, "d": config.d, "k": config.k, "trials": config.trials, "passed": config.trials},
    )


def tensor_compose(p: MLPoly, gs: Sequence[GridFunction]) -> GridFunction:
    if len(gs) != p.d:
        raise PreconditionError(f"{p} takes {p.d} arguments, got {len(gs)} functions")
    axes = tuple(axis for g in gs for axis in g.axes)
    if len(axes) > CAPS.max_tensor_dim:
        raise PreconditionError(f"product grid dimension {len(axes)} exceeds {CAPS.max_tensor_dim}")
    product = Grid(axes=axes)
    offsets = [0]
    for g in gs:
        offsets.append(offsets[-1] + g.dim)

    def composed(*x: Number) -> Number:
        inner = [g(*x[start:stop]) for g, start, stop in zip(gs, offsets, offsets[1:])]
        return evaluate(p, inner)

    return GridFunction.tabulate(product, composed)


def _threshold_indicator(grid: Grid, fn: Callable[..., bool]) -> GridFunction:
    return GridFunction.tabulate(grid, lambda *x: Fraction(int(fn(*x))))


def remark4_counterexample() -> Report:
    # phi is the d.f. of the point mass at (1/2, 1/2, 1/2) and g(s, t) = st on
    # {0, 1/2, 1}^2; phi(g, g, g) is the indicator of {st >= 1/2}.
    started = time.perf_counter()
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    phi_grid = Grid.of(*([0, quarter, half, 1],) * 3)
    phi = point_mass_df((half, half, half), phi_grid)
    g_grid = Grid.of([0, half, 1], [0, half, 1])
    g = GridFunction.tabulate(g_grid, lambda s, t: s * t)

    composed = compose_pointwise(phi, [g, g, g])
    expected = _threshold_indicator(g_grid, lambda s, t: s * t >= half)
    difference = forward_difference(composed, (1, 1), (half, half), (half, half))
    witness = Witness(mode="increasing", value=difference, p=[1, 1], s=[half, half], h=[half, half])

    phi_check = check_fully_k(phi, 3)
    g_check = check_fully_k(g, 2)
    try:
        df_to_measure(g)
        df_witness = None
    except NotMonotoneError as e:
        df_witness = e.witness
    mismatch = None
    for point, value, target in zip(g_grid.points(), composed.values, expected.values):
        if value != target:
            mismatch = Witness(
                mode="increasing",
                value=value - target,
                p=[0, 0],
                s=list(point),
                h=[0, 0],
                detail="composition minus the indicator",
            )
            break
    checks = [
        entry("phi fully 3-increasing", bool(phi_check), witness=phi_check.witness),
        entry("g fully 2-increasing", bool(g_check), witness=g_check.witness),
        entry("g is a distribution function", df_witness is None, witness=df_witness),
        entry("composition is the indicator of {st >= 1/2}", mismatch is None, witness=mismatch),
        entry(
            "mixed difference at (1/2, 1/2) is -1",
            difference == -1,
            detail=str(difference),
            witness=None if difference == -1 else witness,
        ),
    ]
    return Report.from_checks(
        checks,
        started=started,
        result={"composed": composed.model_dump(mode="json"), "witness": witness.model_dump(mode="json", exclude_none=True)},
    )
