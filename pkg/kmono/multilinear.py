from __future__ import annotations

import logging
from fractions import Fraction
from typing import Self, Sequence

from pydantic import BaseModel, ConfigDict, model_validator

from .configs import CAPS, DEFAULT_TOLERANCE, Mode
from .errors import PreconditionError, UndefinedValueError
from .messages import CheckResult
from .subset_core import PBFunction, SubsetMask, delta_point, expanded_masks, is_fully_k, mobius, zeta
from .types import Number, NumericMode, Scalar, mode_of, require_exact
from .univariate import AnyMap

logger = logging.getLogger(__name__)


class MLPoly(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int
    mode: NumericMode = "exact"
    # coeffs[α] = (Δ_α f)(∅), indexed like PBFunction.values.
    coeffs: tuple[Scalar, ...]
    tolerance: float | None = None
    # Original variable labels after differentiation; None means 1..d.
    variables: tuple[int, ...] | None = None

    @model_validator(mode="after")
    def _validate_shape(self) -> Self:
        if not 0 <= self.d <= CAPS.max_d:
            raise ValueError(f"d must lie in [0, {CAPS.max_d}], got {self.d}")
        if len(self.coeffs) != 1 << self.d:
            raise ValueError(f"coeffs must have length 2^d = {1 << self.d}, got {len(self.coeffs)}")
        if self.variables is not None and len(self.variables) != self.d:
            raise ValueError(f"variables must list {self.d} labels, got {len(self.variables)}")
        if self.mode == "exact":
            require_exact(self.mode, self.coeffs, "coefficients")
            if self.tolerance:
                raise ValueError("exact mode admits no tolerance")
        elif self.tolerance is not None and self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")
        return self

    @property
    def epsilon(self) -> Number:
        if self.mode == "exact":
            return 0
        return DEFAULT_TOLERANCE.epsilon if self.tolerance is None else self.tolerance

    def __str__(self) -> str:
        return f"MLPoly[d={self.d}, {self.mode}]"


def extend(f: PBFunction) -> MLPoly:
    coeffs = mobius(f.values)
    return MLPoly(d=f.d, mode=mode_of(coeffs), coeffs=tuple(coeffs), variables=f.elements)


def extend_naive(f: PBFunction) -> MLPoly:
    # O(3^d) alternating sums; kept as an oracle for extend.
    coeffs = [delta_point(f, alpha, 0) for alpha in range(1 << f.d)]
    return MLPoly(d=f.d, mode=mode_of(coeffs), coeffs=tuple(coeffs), variables=f.elements)


def _check_point(d: int, x: Sequence[Number]) -> None:
    if len(x) != d:
        raise PreconditionError(f"point must have {d} coordinates, got {len(x)}")


def evaluate(p: MLPoly, x: Sequence[Number]) -> Number:
    _check_point(p.d, x)
    values: list[Number] = list(p.coeffs)
    for i in reversed(range(p.d)):
        half = 1 << i
        values = [values[j] + x[i] * values[j + half] for j in range(half)]
    return values[0]


def eval_bernoulli(f: PBFunction, x: Sequence[Number]) -> Number:
    _check_point(f.d, x)
    values: list[Number] = list(f.values)
    for i in reversed(range(f.d)):
        half = 1 << i
        values = [(1 - x[i]) * values[j] + x[i] * values[j + half] for j in range(half)]
    return values[0]


def to_table(p: MLPoly) -> PBFunction:
    return PBFunction(d=p.d, mode=p.mode, values=tuple(zeta(p.coeffs)), elements=p.variables)


def _labels(p: MLPoly) -> tuple[int, ...]:
    return p.variables if p.variables is not None else tuple(range(1, p.d + 1))


def partial(p: MLPoly, beta: SubsetMask) -> MLPoly:
    if beta < 0 or beta >> p.d:
        raise PreconditionError(f"beta={beta:#b} has bits outside {p.d} variables")
    positions = [i for i in range(p.d) if not beta >> i & 1]
    labels = _labels(p)
    return p.model_copy(
        update={
            "d": len(positions),
            "coeffs": tuple(p.coeffs[mask | beta] for mask in expanded_masks(positions)),
            "variables": tuple(labels[i] for i in positions),
        }
    )


def derivative_at_zero(p: MLPoly, beta: SubsetMask) -> Number:
    return p.coeffs[beta]


def is_fully_k_on_cube(p: MLPoly, k: int, mode: Mode = "increasing") -> CheckResult:
    # A fully k-monotone table has a fully k-monotone extension on [0,1]^d.
    return is_fully_k(to_table(p), k, mode, p.epsilon)


def argument_scale(p: MLPoly, c: Sequence[Number]) -> MLPoly:
    _check_point(p.d, c)
    if any(not 0 <= ci <= 1 for ci in c):
        raise PreconditionError(f"scale factors must lie in [0, 1], got {list(c)}")
    scales: list[Number] = [Fraction(1)]
    for ci in c:
        scales += [scale * ci for scale in scales]
    coeffs = tuple(coeff * scale for coeff, scale in zip(p.coeffs, scales))
    mode = mode_of(coeffs)
    return p.model_copy(update={"coeffs": coeffs, "mode": mode, "tolerance": p.tolerance if mode == "float" else None})


def compose_univariate(phi: AnyMap, f: PBFunction, tolerance: float | None = None) -> MLPoly:
    images: list[Number] = []
    for mask, value in enumerate(f.values):
        try:
            images.append(phi(value))
        except UndefinedValueError as e:
            raise UndefinedValueError(f"{e} (table entry {f.label_list(mask)})") from e
    coeffs = mobius(images)
    mode = mode_of(coeffs)
    logger.debug("composed %s with %s (%s mode)", phi.type, f, mode)
    return MLPoly(
        d=f.d,
        mode=mode,
        coeffs=tuple(coeffs),
        tolerance=(DEFAULT_TOLERANCE.epsilon if tolerance is None else tolerance) if mode == "float" else None,
        variables=f.elements,
    )
