from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Literal, Self, Sequence

from pydantic import BaseModel, ConfigDict, model_validator

from .configs import CAPS, Mode
from .errors import BudgetExhaustedError, PreconditionError
from .messages import CheckResult, Witness
from .types import Number, NumericMode, Scalar, mode_of, require_exact

# Element i of [d] is bit i - 1 of a mask.
type SubsetMask = int


def mask_of(elements: Iterable[int]) -> SubsetMask:
    mask = 0
    for element in elements:
        if element < 1:
            raise PreconditionError(f"elements are 1-based, got {element}")
        mask |= 1 << (element - 1)
    return mask


def elements_of(mask: SubsetMask) -> list[int]:
    return [i + 1 for i in range(mask.bit_length()) if mask >> i & 1]


def submasks(mask: SubsetMask) -> Iterable[SubsetMask]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def expanded_masks(positions: Sequence[int]) -> list[SubsetMask]:
    # Compact index j (bit t <-> positions[t]) to full mask, in increasing order.
    masks = [0]
    for position in positions:
        masks += [mask | 1 << position for mask in masks]
    return masks


def mode_sign(mode: Mode, order: int) -> int:
    match mode:
        case "increasing":
            return 1
        case "decreasing":
            return -1 if order % 2 else 1
        case "alternating":
            return 1 if order % 2 else -1


def mobius(values: Sequence[Number], bits: Iterable[int] | None = None) -> list[Number]:
    # With every bit differenced, entry α holds (Δ_α f)(∅).
    result = list(values)
    size = len(result)
    if bits is None:
        bits = range(size.bit_length() - 1)
    for i in bits:
        bit = 1 << i
        for mask in range(size):
            if mask & bit:
                result[mask] -= result[mask ^ bit]
    return result


def zeta(values: Sequence[Number]) -> list[Number]:
    result = list(values)
    size = len(result)
    for i in range(size.bit_length() - 1):
        bit = 1 << i
        for mask in range(size):
            if mask & bit:
                result[mask] += result[mask ^ bit]
    return result


class PBFunction(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int
    mode: NumericMode = "exact"
    values: tuple[Scalar, ...]
    # Original element labels of a compacted table; None means 1..d.
    elements: tuple[int, ...] | None = None

    @model_validator(mode="after")
    def _validate_shape(self) -> Self:
        if not 0 <= self.d <= CAPS.max_d:
            raise ValueError(f"d must lie in [0, {CAPS.max_d}], got {self.d}")
        if len(self.values) != 1 << self.d:
            raise ValueError(f"values must have length 2^d = {1 << self.d}, got {len(self.values)}")
        if self.elements is not None and len(self.elements) != self.d:
            raise ValueError(f"elements must list {self.d} labels, got {len(self.elements)}")
        require_exact(self.mode, self.values, "values")
        return self

    @classmethod
    def from_values(cls, values: Sequence[Number | str | int], elements: Sequence[int] | None = None) -> Self:
        d = len(values).bit_length() - 1
        labels = None if elements is None else tuple(elements)
        return cls(d=d, mode=mode_of(values), values=tuple(values), elements=labels)

    @property
    def full(self) -> SubsetMask:
        return (1 << self.d) - 1

    @property
    def labels(self) -> tuple[int, ...]:
        return self.elements if self.elements is not None else tuple(range(1, self.d + 1))

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def __call__(self, mask: SubsetMask) -> Number:
        return self.values[mask]

    def label_list(self, mask: SubsetMask) -> list[int]:
        labels = self.labels
        return [labels[i] for i in range(self.d) if mask >> i & 1]

    def check_mask(self, mask: SubsetMask, name: str = "mask") -> None:
        if mask < 0 or mask >> self.d:
            raise PreconditionError(f"{name}={mask:#b} has bits outside the ground set of size {self.d}")

    def __str__(self) -> str:
        return f"PBFunction[d={self.d}]"


def _compacted(f: PBFunction, alpha: SubsetMask, table: Sequence[Number]) -> PBFunction:
    positions = [i for i in range(f.d) if not alpha >> i & 1]
    labels = f.labels
    values = tuple(table[mask | alpha] for mask in expanded_masks(positions))
    return PBFunction(d=len(positions), mode=f.mode, values=values, elements=tuple(labels[i] for i in positions))


def delta_point(f: PBFunction, alpha: SubsetMask, gamma: SubsetMask) -> Number:
    f.check_mask(alpha, "alpha")
    f.check_mask(gamma, "gamma")
    if alpha & gamma:
        raise PreconditionError(f"gamma={f.label_list(gamma)} overlaps alpha={f.label_list(alpha)}")
    size = alpha.bit_count()
    total: Number = 0
    for sub in submasks(alpha):
        term = f.values[gamma | sub]
        total += -term if (size - sub.bit_count()) % 2 else term
    return total


def shift(f: PBFunction, alpha: SubsetMask) -> PBFunction:
    f.check_mask(alpha, "alpha")
    return _compacted(f, alpha, f.values)


def delta_table(f: PBFunction, alpha: SubsetMask) -> PBFunction:
    f.check_mask(alpha, "alpha")
    differenced = mobius(f.values, (i for i in range(f.d) if alpha >> i & 1))
    return _compacted(f, alpha, differenced)


def complement_dual(f: PBFunction, c: Number) -> PBFunction:
    full = f.full
    values = tuple(c - f.values[full ^ mask] for mask in range(1 << f.d))
    return f.model_copy(update={"values": values, "mode": mode_of(values)})


def complement_argument(f: PBFunction) -> PBFunction:
    full = f.full
    return f.model_copy(update={"values": tuple(f.values[full ^ mask] for mask in range(1 << f.d))})


def is_fully_k(f: PBFunction, k: int, mode: Mode = "increasing", epsilon: Number = 0) -> CheckResult:
    if not 1 <= k <= f.d:
        raise PreconditionError(f"k must lie in [1, {f.d}], got {k}")
    for beta in range(1, 1 << f.d):
        order = beta.bit_count()
        if order > k:
            continue
        sign = mode_sign(mode, order)
        # Compacted masks keep their order, so the first failure is the
        # lexicographically smallest (beta, gamma).
        table = delta_table(f, beta)
        positions = [i for i in range(f.d) if not beta >> i & 1]
        for gamma, value in zip(expanded_masks(positions), table.values):
            if sign * value < -epsilon:
                return CheckResult.failed(
                    Witness(mode=mode, value=value, beta=f.label_list(beta), gamma=f.label_list(gamma))
                )
    return CheckResult.passed()


def max_full_order(f: PBFunction, mode: Mode = "increasing", epsilon: Number = 0) -> int:
    for k in range(1, f.d + 1):
        if not is_fully_k(f, k, mode, epsilon):
            return k - 1
    return f.d


def is_increasing(f: PBFunction) -> bool:
    return all(f.values[a] <= f.values[b] for b in range(1 << f.d) for a in submasks(b))


def is_submodular(f: PBFunction) -> bool:
    # Marginal gains shrink along A ⊆ B for every v outside B.
    for b in range(1 << f.d):
        for a in submasks(b):
            for v in range(f.d):
                bit = 1 << v
                if b & bit:
                    continue
                if f.values[a | bit] - f.values[a] < f.values[b | bit] - f.values[b]:
                    return False
    return True


type GeneratorPath = Literal["mixed", "combination", "rejection"]


def _combination_table(d: int, rng: random.Random) -> list[Number]:
    table: list[Number] = [Fraction(rng.randint(0, 2))] * (1 << d)
    for _ in range(rng.randint(1, d + 1)):
        alpha = rng.randrange(1 << d)
        weight = rng.randint(0, 3)
        for gamma in range(1 << d):
            if gamma & alpha == alpha:
                table[gamma] += weight
    return table


def _rejection_table(d: int, k: int, rng: random.Random, budget: int) -> list[Number]:
    high_order = sum(1 for mask in range(1 << d) if mask.bit_count() > k)
    spread = min(0.5, 2 / high_order) if high_order else 0.0
    for _ in range(budget):
        coeffs: list[Number] = []
        for mask in range(1 << d):
            order = mask.bit_count()
            if order == 0:
                coeffs.append(Fraction(rng.randint(0, 2)))
            elif order <= k:
                coeffs.append(Fraction(rng.randint(0, 3)))
            elif rng.random() < spread:
                coeffs.append(Fraction(rng.choice((-2, -1, -1, 1))))
            else:
                coeffs.append(Fraction(0))
        table = zeta(coeffs)
        if is_fully_k(PBFunction.from_values(table), k, "increasing"):
            return table
    raise BudgetExhaustedError(f"no fully {k}-increasing table on d={d} within {budget} draws")


def gen_fully_k(
    d: int,
    k: int,
    mode: Mode = "increasing",
    seed: int = 0,
    *,
    path: GeneratorPath = "mixed",
    budget: int = 1000,
) -> PBFunction:
    if not 1 <= k <= d <= 6:
        raise PreconditionError(f"need 1 <= k <= d <= 6, got k={k}, d={d}")
    rng = random.Random(seed)
    if path == "mixed":
        path = rng.choice(("combination", "rejection"))
    match path:
        case "combination":
            base = PBFunction.from_values(_combination_table(d, rng))
        case "rejection":
            base = PBFunction.from_values(_rejection_table(d, k, rng, budget))
    match mode:
        case "increasing":
            return base
        case "decreasing":
            return complement_argument(base)
        case "alternating":
            return complement_dual(base, base.values[base.full])


def size_or_one(d: int = 3) -> PBFunction:
    return PBFunction.from_values([Fraction(max(mask.bit_count(), 1)) for mask in range(1 << d)])


def saturating_sum() -> PBFunction:
    by_size = (0, 2, 4, 5)
    return PBFunction.from_values([Fraction(by_size[mask.bit_count()]) for mask in range(8)])


def or_function() -> PBFunction:
    return PBFunction.from_values([Fraction(v) for v in (0, 1, 1, 1)])


def random_table(d: int, rng: random.Random, low: int = -5, high: int = 5) -> PBFunction:
    return PBFunction.from_values(
        [Fraction(rng.randint(low, high), rng.randint(1, 4)) for _ in range(1 << d)]
    )
