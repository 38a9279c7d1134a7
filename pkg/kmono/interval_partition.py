from __future__ import annotations

import math
from typing import Any, Self, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator

from .configs import CAPS
from .errors import PreconditionError
from .subset_core import SubsetMask, elements_of, mask_of, submasks
from .types import Number, Rational


class SetInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: SubsetMask
    tau: SubsetMask

    @model_validator(mode="before")
    @classmethod
    def _accept_element_lists(cls, data: Any) -> Any:
        if isinstance(data, dict):
            return {key: mask_of(value) if isinstance(value, list) else value for key, value in data.items()}
        return data

    @model_validator(mode="after")
    def _sigma_within_tau(self) -> Self:
        if self.sigma & ~self.tau:
            raise ValueError(f"sigma={elements_of(self.sigma)} is not contained in tau={elements_of(self.tau)}")
        return self

    @model_serializer
    def _as_element_lists(self) -> dict[str, list[int]]:
        return {"sigma": elements_of(self.sigma), "tau": elements_of(self.tau)}

    def __contains__(self, gamma: SubsetMask) -> bool:
        return gamma & self.sigma == self.sigma and gamma & ~self.tau == 0

    def __len__(self) -> int:
        return 1 << (self.tau & ~self.sigma).bit_count()

    def __str__(self) -> str:
        return f"<{elements_of(self.sigma)}, {elements_of(self.tau)}>"


def intersection(a: SetInterval, b: SetInterval) -> SetInterval | None:
    sigma, tau = a.sigma | b.sigma, a.tau & b.tau
    if sigma & ~tau:
        return None
    return SetInterval(sigma=sigma, tau=tau)


class VectorFamily(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    vectors: tuple[tuple[Rational, ...], ...]

    @model_validator(mode="after")
    def _common_length(self) -> Self:
        if self.k < 1:
            raise ValueError(f"vectors need at least one coordinate, got k={self.k}")
        if not self.vectors:
            raise ValueError("the family must contain at least one vector")
        if any(len(vector) != self.k for vector in self.vectors):
            raise ValueError(f"every vector must have {self.k} coordinates")
        return self

    @classmethod
    def of(cls, vectors: Sequence[Sequence[Number | str | int]]) -> Self:
        return cls(k=len(vectors[0]), vectors=tuple(tuple(v) for v in vectors))

    @property
    def d(self) -> int:
        return len(self.vectors)

    def maximum(self, mask: SubsetMask) -> tuple[Number, ...]:
        members = [self.vectors[i] for i in range(self.d) if mask >> i & 1]
        return tuple(max(column) for column in zip(*members))


class PartitionResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    intervals: list[SetInterval] = Field(default_factory=list)


def equivalent(alpha: SubsetMask, beta: SubsetMask, family: VectorFamily) -> bool:
    if not alpha or not beta:
        raise PreconditionError("equivalence is only defined for nonempty sets")
    return family.maximum(alpha) == family.maximum(beta)


def _first_maximizer(indices: Sequence[int], vectors: Sequence[Sequence[Number]], coordinate: int) -> int:
    return max(indices, key=lambda i: (vectors[i][coordinate], -i))


def _chain(indices: Sequence[int], vectors: Sequence[Sequence[Number]]) -> list[SetInterval]:
    ordered = sorted(indices, key=lambda i: (vectors[i][0], i))
    intervals = []
    for position in reversed(range(len(ordered))):
        prefix = mask_of(i + 1 for i in ordered[: position + 1])
        intervals.append(SetInterval(sigma=1 << ordered[position], tau=prefix))
    return intervals


def _base_case(indices: Sequence[int], vectors: Sequence[Sequence[Number]], k: int) -> list[SetInterval]:
    # d = k + 1: one interval ⟨α, [d]⟩ with α ∼ [d], plus the singletons [d] ∖ {a}.
    chosen: list[int] = []
    for coordinate in range(k):
        top = _first_maximizer(indices, vectors, coordinate)
        if top not in chosen:
            chosen.append(top)
    for i in sorted(indices):
        if len(chosen) == k:
            break
        if i not in chosen:
            chosen.append(i)
    everything = mask_of(i + 1 for i in indices)
    alpha = mask_of(i + 1 for i in chosen)
    intervals = [SetInterval(sigma=alpha, tau=everything)]
    for a in sorted(chosen):
        rest = everything & ~(1 << a)
        intervals.append(SetInterval(sigma=rest, tau=rest))
    return intervals


# Recurse on a pivot maximizing the last coordinate: pivot-free sets are
# partitioned at level k, the rest come from a level k - 1 partition of the
# projected family with the pivot adjoined to both endpoints.
def _partition(
    indices: Sequence[int],
    vectors: Sequence[Sequence[Number]],
    k: int,
    use_base_case: bool,
) -> list[SetInterval]:
    if k == len(indices):
        everything = mask_of(i + 1 for i in indices)
        return [SetInterval(sigma=everything, tau=everything)]
    if k == 1:
        return _chain(indices, vectors)
    if use_base_case and len(indices) == k + 1:
        return _base_case(indices, vectors, k)
    pivot = _first_maximizer(indices, vectors, k - 1)
    rest = [i for i in indices if i != pivot]
    pivot_free = _partition(rest, vectors, k, use_base_case)
    projected = [vector[: k - 1] for vector in vectors]
    bit = 1 << pivot
    lifted = [
        SetInterval(sigma=interval.sigma | bit, tau=interval.tau | bit)
        for interval in _partition(rest, projected, k - 1, use_base_case)
    ]
    return pivot_free + lifted


def partition_upper(family: VectorFamily, k: int, *, use_base_case: bool = False) -> PartitionResult:
    if not 1 <= k <= family.d:
        raise PreconditionError(f"k must lie in [1, {family.d}], got {k}")
    if k != family.k:
        raise PreconditionError(f"k={k} does not match the vector length {family.k}")
    return PartitionResult(intervals=_partition(range(family.d), family.vectors, k, use_base_case))


class PartitionDiagnostics(BaseModel):
    valid: bool
    uncovered: list[list[int]] = Field(default_factory=list)
    overcovered: list[list[int]] = Field(default_factory=list)
    too_small: list[list[int]] = Field(default_factory=list)
    bad_sigma: list[str] = Field(default_factory=list)
    inequivalent: list[str] = Field(default_factory=list)
    overlapping: list[tuple[str, str]] = Field(default_factory=list)
    cardinality: int = 0
    expected_cardinality: int = 0


def cardinality_identity(result: PartitionResult, d: int, k: int) -> tuple[int, int]:
    covered = sum(len(interval) for interval in result.intervals)
    expected = sum(math.comb(d, m) for m in range(k, d + 1))
    return covered, expected


def verify_partition(result: PartitionResult, family: VectorFamily, k: int) -> PartitionDiagnostics:
    d = family.d
    if d > CAPS.max_exhaustive_partition_d:
        raise PreconditionError(f"exhaustive verification is capped at d={CAPS.max_exhaustive_partition_d}")
    full = (1 << d) - 1
    counts = [0] * (1 << d)
    diagnostics = PartitionDiagnostics(valid=True)
    for interval in result.intervals:
        if interval.tau & ~full:
            diagnostics.bad_sigma.append(f"{interval} leaves the ground set")
            continue
        if interval.sigma.bit_count() != k:
            diagnostics.bad_sigma.append(str(interval))
        if not interval.sigma or not equivalent(interval.sigma, interval.tau, family):
            diagnostics.inequivalent.append(str(interval))
        for gamma in submasks(interval.tau & ~interval.sigma):
            counts[gamma | interval.sigma] += 1
    for gamma, count in enumerate(counts):
        if gamma.bit_count() >= k and count == 0:
            diagnostics.uncovered.append(elements_of(gamma))
        elif count > 1:
            diagnostics.overcovered.append(elements_of(gamma))
        elif gamma.bit_count() < k and count:
            diagnostics.too_small.append(elements_of(gamma))
    # Cross-check disjointness through the intersection law.
    intervals = result.intervals
    for i, a in enumerate(intervals):
        for b in intervals[i + 1 :]:
            if intersection(a, b) is not None:
                diagnostics.overlapping.append((str(a), str(b)))
    diagnostics.cardinality, diagnostics.expected_cardinality = cardinality_identity(result, d, k)
    diagnostics.valid = not (
        diagnostics.uncovered
        or diagnostics.overcovered
        or diagnostics.too_small
        or diagnostics.bad_sigma
        or diagnostics.inequivalent
        or diagnostics.overlapping
        or diagnostics.cardinality != diagnostics.expected_cardinality
    )
    return diagnostics
