from __future__ import annotations

import functools
import itertools
import logging
import math
import random
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Self, Sequence

from pydantic import BaseModel, ConfigDict, model_serializer, model_validator

from .configs import CAPS, Mode
from .errors import DomainError, NotMonotoneError, PreconditionError
from .messages import CheckResult, Witness
from .subset_core import mode_sign
from .types import Number, NumericMode, Rational, Scalar, format_scalar, mode_of, require_exact

logger = logging.getLogger(__name__)

# Values are row-major with the last axis fastest. Steps only ever join existing
# grid coordinates.

type Point = tuple[Number, ...]
type Index = tuple[int, ...]


class Axis(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: tuple[Rational, ...]

    @model_validator(mode="before")
    @classmethod
    def _accept_list(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            return {"points": data}
        return data

    @model_validator(mode="after")
    def _strictly_increasing(self) -> Self:
        if not self.points:
            raise ValueError("an axis needs at least one point")
        if any(a >= b for a, b in itertools.pairwise(self.points)):
            raise ValueError(f"axis points must be strictly increasing, got {[str(p) for p in self.points]}")
        return self

    @model_serializer
    def _as_list(self) -> list[str]:
        return [format_scalar(p) for p in self.points]

    def __len__(self) -> int:
        return len(self.points)

    @functools.cached_property
    def position(self) -> dict[Number, int]:
        return {point: i for i, point in enumerate(self.points)}

    def reflected(self) -> Axis:
        return Axis(points=tuple(-p for p in reversed(self.points)))


class Grid(BaseModel):
    model_config = ConfigDict(frozen=True)

    axes: tuple[Axis, ...]

    @model_validator(mode="after")
    def _validate_dim(self) -> Self:
        if not 1 <= len(self.axes) <= CAPS.max_grid_dim:
            raise ValueError(f"grid dimension must lie in [1, {CAPS.max_grid_dim}], got {len(self.axes)}")
        return self

    @classmethod
    def of(cls, *axes: Sequence[Number | str | int]) -> Self:
        return cls(axes=tuple(Axis(points=tuple(axis)) for axis in axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @functools.cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(axis) for axis in self.axes)

    @functools.cached_property
    def strides(self) -> tuple[int, ...]:
        strides = [1] * self.dim
        for i in reversed(range(self.dim - 1)):
            strides[i] = strides[i + 1] * self.shape[i + 1]
        return tuple(strides)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def indices(self) -> Iterator[Index]:
        return itertools.product(*(range(n) for n in self.shape))

    def points(self) -> Iterator[Point]:
        return itertools.product(*(axis.points for axis in self.axes))

    def flat(self, index: Index) -> int:
        return sum(i * stride for i, stride in zip(index, self.strides))

    def point(self, index: Index) -> Point:
        return tuple(axis.points[i] for axis, i in zip(self.axes, index))

    def index_of(self, point: Sequence[Number]) -> Index | None:
        if len(point) != self.dim:
            return None
        index = []
        for axis, coordinate in zip(self.axes, point):
            position = axis.position.get(coordinate)
            if position is None:
                return None
            index.append(position)
        return tuple(index)

    def require_index(self, point: Sequence[Number]) -> Index:
        index = self.index_of(point)
        if index is None:
            raise DomainError(f"point {[str(c) for c in point]} is not on the grid")
        return index

    @property
    def min_point(self) -> Point:
        return tuple(axis.points[0] for axis in self.axes)

    @property
    def max_point(self) -> Point:
        return tuple(axis.points[-1] for axis in self.axes)

    def reflected(self) -> Grid:
        return Grid(axes=tuple(axis.reflected() for axis in self.axes))

    def __str__(self) -> str:
        return f"Grid[{'x'.join(str(n) for n in self.shape)}]"


class GridFunction(BaseModel):
    model_config = ConfigDict(frozen=True)

    axes: tuple[Axis, ...]
    mode: NumericMode = "exact"
    values: tuple[Scalar, ...]

    @model_validator(mode="after")
    def _validate_shape(self) -> Self:
        grid = self.grid
        if len(self.values) != grid.size:
            raise ValueError(f"values must have length {grid.size} for {grid}, got {len(self.values)}")
        require_exact(self.mode, self.values, "values")
        return self

    @functools.cached_property
    def grid(self) -> Grid:
        return Grid(axes=self.axes)

    @classmethod
    def on(cls, grid: Grid, values: Iterable[Number]) -> Self:
        values = tuple(values)
        return cls(axes=grid.axes, mode=mode_of(values), values=values)

    @classmethod
    def tabulate(cls, grid: Grid, fn: Callable[..., Number]) -> Self:
        return cls.on(grid, (fn(*point) for point in grid.points()))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def at_index(self, index: Index) -> Number:
        return self.values[self.grid.flat(index)]

    def __call__(self, *point: Number) -> Number:
        return self.at_index(self.grid.require_index(point))

    def __str__(self) -> str:
        return f"GridFunction[{self.grid}]"


class MultiIndex(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: tuple[int, ...]

    @model_validator(mode="after")
    def _validate_range(self) -> Self:
        if any(not 0 <= ni <= CAPS.max_multi_index for ni in self.n):
            raise ValueError(f"multi-index components must lie in [0, {CAPS.max_multi_index}], got {list(self.n)}")
        return self

    @property
    def order(self) -> int:
        return sum(self.n)


class StepVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    h: tuple[Rational, ...]

    @model_validator(mode="after")
    def _validate_sign(self) -> Self:
        if any(hi < 0 for hi in self.h):
            raise ValueError(f"steps must be nonnegative, got {[str(hi) for hi in self.h]}")
        return self


class DiscreteMeasure(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: tuple[tuple[Rational, ...], ...] = ()
    mode: NumericMode = "exact"
    masses: tuple[Scalar, ...] = ()

    @model_validator(mode="after")
    def _validate_support(self) -> Self:
        if len(self.points) != len(self.masses):
            raise ValueError(f"{len(self.points)} support points but {len(self.masses)} masses")
        if any(mass < 0 for mass in self.masses):
            raise ValueError("masses must be nonnegative")
        if len(set(self.points)) != len(self.points):
            raise ValueError("support points must be distinct")
        if len({len(point) for point in self.points}) > 1:
            raise ValueError("support points must share one dimension")
        require_exact(self.mode, self.masses, "masses")
        return self

    @property
    def total(self) -> Number:
        return sum(self.masses, Fraction(0))

    def canonical(self) -> dict[Point, Number]:
        return {point: mass for point, mass in zip(self.points, self.masses) if mass != 0}

    def scaled(self, factor: Number) -> DiscreteMeasure:
        masses = tuple(mass * factor for mass in self.masses)
        return DiscreteMeasure(points=self.points, mode=mode_of(masses), masses=masses)


def _as_multi_index(n: MultiIndex | Sequence[int]) -> MultiIndex:
    return n if isinstance(n, MultiIndex) else MultiIndex(n=tuple(n))


def _as_steps(h: StepVector | Sequence[Number]) -> StepVector:
    return h if isinstance(h, StepVector) else StepVector(h=tuple(h))


def forward_difference(
    F: GridFunction,
    n: MultiIndex | Sequence[int],
    h: StepVector | Sequence[Number],
    s: Sequence[Number],
) -> Number:
    n, h = _as_multi_index(n), _as_steps(h)
    if not len(n.n) == len(h.h) == len(s) == F.dim:
        raise PreconditionError(f"n, h and s must all have {F.dim} components")
    total: Number = 0
    for q in itertools.product(*(range(ni + 1) for ni in n.n)):
        point = tuple(si + qi * hi for si, qi, hi in zip(s, q, h.h))
        index = F.grid.index_of(point)
        if index is None:
            raise DomainError(f"s + q*h is off the grid for q={list(q)}")
        weight = math.prod(math.comb(ni, qi) for ni, qi in zip(n.n, q))
        term = weight * F.at_index(index)
        total += -term if (n.order - sum(q)) % 2 else term
    return total


def nabla_difference(
    F: GridFunction,
    n: MultiIndex | Sequence[int],
    h: StepVector | Sequence[Number],
    s: Sequence[Number],
) -> Number:
    n = _as_multi_index(n)
    value = forward_difference(F, n, h, s)
    return -value if n.order % 2 else value


def _steps(axis: Axis, start: Number, repeats: int) -> list[Number]:
    if repeats == 0:
        return [Fraction(0)]
    steps = []
    for target in axis.points:
        step = target - start
        if step > 0 and all(start + q * step in axis.position for q in range(1, repeats + 1)):
            steps.append(step)
    return steps


def _scan(F: GridFunction, orders: Iterable[Index], mode: Mode, epsilon: Number) -> CheckResult:
    grid = F.grid
    worst: tuple[Number, Witness] | None = None
    for p in orders:
        sign = mode_sign(mode, sum(p))
        for s in grid.points():
            candidates = [_steps(axis, si, pi) for axis, si, pi in zip(grid.axes, s, p)]
            for h in itertools.product(*candidates):
                value = forward_difference(F, p, h, s)
                normalized = sign * value
                if normalized < -epsilon and (worst is None or normalized < worst[0]):
                    worst = normalized, Witness(mode=mode, value=value, p=list(p), s=list(s), h=list(h))
    return CheckResult.passed() if worst is None else CheckResult.failed(worst[1])


def _nonzero_orders(bounds: Sequence[int]) -> list[Index]:
    return [p for p in itertools.product(*(range(b + 1) for b in bounds)) if any(p)]


def _binary_orders(dim: int, k: int) -> list[Index]:
    return [p for p in itertools.product((0, 1), repeat=dim) if 1 <= sum(p) <= k]


def check_n_monotone(
    F: GridFunction,
    n: MultiIndex | Sequence[int],
    mode: Mode = "increasing",
    epsilon: Number = 0,
) -> CheckResult:
    n = _as_multi_index(n)
    if len(n.n) != F.dim:
        raise PreconditionError(f"n must have {F.dim} components, got {len(n.n)}")
    if n.order == 0:
        raise PreconditionError("n must be nonzero")
    return _scan(F, _nonzero_orders(n.n), mode, epsilon)


def _check_order(F: GridFunction, k: int) -> None:
    if not 1 <= k <= F.dim:
        raise PreconditionError(f"k must lie in [1, {F.dim}], got {k}")


def check_fully_k_naive(F: GridFunction, k: int, mode: Mode = "increasing", epsilon: Number = 0) -> CheckResult:
    _check_order(F, k)
    return _scan(F, _binary_orders(F.dim, k), mode, epsilon)


def check_fully_k(F: GridFunction, k: int, mode: Mode = "increasing", epsilon: Number = 0) -> CheckResult:
    _check_order(F, k)
    grid = F.grid
    orders = _binary_orders(F.dim, k)
    # A box difference telescopes into a sum of adjacent-cell differences of the
    # same p. That bounds it by 0, not by -epsilon, so tolerant checks scan.
    if epsilon != 0:
        return _scan(F, orders, mode, epsilon)
    for p in orders:
        sign = mode_sign(mode, sum(p))
        corners = list(itertools.product(*((0, 1) if pi else (0,) for pi in p)))
        ranges = [range(size - pi) for size, pi in zip(grid.shape, p)]
        for index in itertools.product(*ranges):
            value: Number = 0
            for q in corners:
                term = F.at_index(tuple(i + qi for i, qi in zip(index, q)))
                value += -term if (sum(p) - sum(q)) % 2 else term
            if sign * value < 0:
                logger.debug("%s fails fully %d-%s at p=%s; scanning all steps", F, k, mode, p)
                return _scan(F, orders, mode, epsilon)
    return CheckResult.passed()


def _reindexed(F: GridFunction, grid: Grid, transform: Callable[[Number], Number]) -> GridFunction:
    shape = F.grid.shape
    values = (transform(F.at_index(tuple(n - 1 - i for n, i in zip(shape, index)))) for index in grid.indices())
    return GridFunction.on(grid, values)


def negate_reflect(F: GridFunction, c: Number) -> GridFunction:
    return _reindexed(F, F.grid.reflected(), lambda value: c - value)


def reflect_argument(F: GridFunction) -> GridFunction:
    return _reindexed(F, F.grid.reflected(), lambda value: value)


def point_mass_df(a: Sequence[Number], grid: Grid) -> GridFunction:
    threshold = grid.require_index(a)
    return GridFunction.on(
        grid,
        (Fraction(int(all(i >= t for i, t in zip(index, threshold)))) for index in grid.indices()),
    )


def _difference_along_axes(values: Sequence[Number], grid: Grid) -> list[Number]:
    result = list(values)
    for axis, stride in enumerate(grid.strides):
        previous = list(result)
        for index in grid.indices():
            if index[axis] > 0:
                flat = grid.flat(index)
                result[flat] = previous[flat] - previous[flat - stride]
    return result


def _cumulate_along_axes(values: Sequence[Number], grid: Grid) -> list[Number]:
    result = list(values)
    for axis, stride in enumerate(grid.strides):
        # Row-major order visits each predecessor first.
        for index in grid.indices():
            if index[axis] > 0:
                flat = grid.flat(index)
                result[flat] += result[flat - stride]
    return result


def df_to_measure(F: GridFunction, epsilon: Number = 0) -> DiscreteMeasure:
    check = check_fully_k(F, F.dim, "increasing", epsilon)
    if not check:
        raise NotMonotoneError(f"{F} is not a distribution function", check.witness)
    bottom = F.values[0]
    if bottom < -epsilon:
        witness = Witness(
            mode="increasing",
            value=bottom,
            p=[0] * F.dim,
            s=list(F.grid.min_point),
            h=[Fraction(0)] * F.dim,
            detail="negative at the grid minimum",
        )
        raise NotMonotoneError(f"{F} is negative at the grid minimum", witness)
    masses = _difference_along_axes(F.values, F.grid)
    points, kept = [], []
    # Each mass is an adjacent-step difference, so the check above bounds it by -epsilon.
    for point, mass in zip(F.grid.points(), masses):
        if not F.is_exact and abs(mass) <= epsilon:
            continue
        if mass > 0:
            points.append(point)
            kept.append(mass)
    return DiscreteMeasure(points=tuple(points), mode=F.mode, masses=tuple(kept))


def measure_to_df(mu: DiscreteMeasure, grid: Grid) -> GridFunction:
    placed: list[Number] = [Fraction(0)] * grid.size
    for point, mass in zip(mu.points, mu.masses):
        placed[grid.flat(grid.require_index(point))] += mass
    return GridFunction.on(grid, _cumulate_along_axes(placed, grid))


def restrict(F: GridFunction, sub_axes: Sequence[Sequence[Number]]) -> GridFunction:
    if len(sub_axes) != F.dim:
        raise PreconditionError(f"need {F.dim} sub-axes, got {len(sub_axes)}")
    sub = Grid.of(*(sorted(axis) for axis in sub_axes))
    return GridFunction.on(sub, (F(*point) for point in sub.points()))


def lemma3_approx(F: GridFunction, sub_axes: Sequence[Sequence[Number]]) -> GridFunction:
    # Measure of F on the sub-grid, normalized and placed back on the full grid.
    if any(not 0 <= value <= 1 for value in F.values):
        raise PreconditionError(f"{F} must take values in [0, 1]")
    local = restrict(F, sub_axes)
    top = local.values[-1]
    if top <= 0:
        raise PreconditionError("F vanishes at the maximum of the sub-grid")
    nu = df_to_measure(local)
    return measure_to_df(nu.scaled(1 / top), F.grid)


def compose_pointwise(phi: GridFunction, gs: Sequence[GridFunction]) -> GridFunction:
    if len(gs) != phi.dim:
        raise PreconditionError(f"{phi} takes {phi.dim} arguments, got {len(gs)} functions")
    grid = gs[0].grid
    if any(g.axes != grid.axes for g in gs):
        raise PreconditionError("all inner functions must share one grid")
    values = []
    for flat, point in enumerate(grid.points()):
        inner = tuple(g.values[flat] for g in gs)
        index = phi.grid.index_of(inner)
        if index is None:
            raise DomainError(f"inner values {[str(v) for v in inner]} at {[str(c) for c in point]} are off {phi.grid}")
        values.append(phi.at_index(index))
    return GridFunction.on(grid, values)


def random_grid(dim: int, max_length: int, rng: random.Random) -> Grid:
    axes = []
    for _ in range(dim):
        length = rng.randint(1, max_length)
        axes.append(sorted(Fraction(v, 2) for v in rng.sample(range(-2, 7), length)))
    return Grid.of(*axes)


def random_measure(grid: Grid, rng: random.Random, *, normalized: bool = False) -> DiscreteMeasure:
    raw = [rng.choice((0, 0, 0, 1, 2, 3)) for _ in range(grid.size)]
    if normalized and not any(raw):
        raw[rng.randrange(grid.size)] = 1
    total = sum(raw)
    scale = total if normalized else total + rng.randint(0, 2)
    points = [point for point, mass in zip(grid.points(), raw) if mass]
    masses = [Fraction(mass, scale) for mass in raw if mass]
    return DiscreteMeasure(points=tuple(points), masses=tuple(masses))
