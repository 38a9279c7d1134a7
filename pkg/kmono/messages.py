from __future__ import annotations

import json
import time
from typing import Any, Literal, Mapping, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .configs import Mode
from .types import Scalar


class Witness(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Mode
    # The raw difference value, before the mode's sign is applied.
    value: Scalar
    # Pseudo-Boolean witnesses, as 1-based element lists.
    beta: list[int] | None = None
    gamma: list[int] | None = None
    # Grid witnesses.
    p: list[int] | None = None
    s: list[Scalar] | None = None
    h: list[Scalar] | None = None
    detail: str | None = None


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    holds: bool
    witness: Witness | None = None

    @model_validator(mode="after")
    def _failure_has_witness(self) -> Self:
        if not self.holds and self.witness is None:
            raise ValueError("a failed check must carry a witness")
        return self

    def __bool__(self) -> bool:
        return self.holds

    @classmethod
    def passed(cls) -> Self:
        return cls(holds=True)

    @classmethod
    def failed(cls, witness: Witness) -> Self:
        return cls(holds=False, witness=witness)


class CheckEntry(BaseModel):
    name: str
    verdict: Literal["pass", "fail"]
    detail: str | None = None
    witnesses: list[dict[str, Any]] = Field(default_factory=list)


class Report(BaseModel):
    kind: Literal["report"] = "report"
    verdict: Literal["pass", "fail"]
    witnesses: list[dict[str, Any]] = Field(default_factory=list)
    timing_ms: float = 0.0
    seed: int | None = None
    result: dict[str, Any] | list[Any] | None = None
    checks: list[CheckEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _failure_is_reproducible(self) -> Self:
        if self.verdict == "fail" and not self.witnesses and self.seed is None:
            raise ValueError("a failing report needs a witness or a reproduction seed")
        return self

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == "pass" else 1

    @classmethod
    def from_checks(
        cls,
        checks: list[CheckEntry],
        *,
        started: float,
        seed: int | None = None,
        result: dict[str, Any] | list[Any] | None = None,
    ) -> Self:
        failed = [check for check in checks if check.verdict == "fail"]
        return cls(
            verdict="fail" if failed else "pass",
            witnesses=[witness for check in failed for witness in check.witnesses],
            timing_ms=(time.perf_counter() - started) * 1000,
            seed=seed,
            result=result,
            checks=checks,
        )


def entry(name: str, holds: bool, detail: str | None = None, witness: Witness | None = None) -> CheckEntry:
    witnesses = [] if witness is None else [witness.model_dump(mode="json", exclude_none=True)]
    return CheckEntry(name=name, verdict="pass" if holds else "fail", detail=detail, witnesses=witnesses)


# Artifacts exchanged on the command line. Written artifacts carry a "kind"
# field; readers accept it when present and otherwise fall back to the schema
# the verb expects.


def _artifact_index() -> dict[str, type[BaseModel]]:
    from .compounding import CompoundInput, DecompositionCertificate
    from .grid_monotone import DiscreteMeasure, GridFunction
    from .interval_partition import PartitionResult, VectorFamily
    from .multilinear import MLPoly
    from .subset_core import PBFunction

    return {
        "pb_function": PBFunction,
        "ml_poly": MLPoly,
        "grid_function": GridFunction,
        "measure": DiscreteMeasure,
        "vector_family": VectorFamily,
        "partition": PartitionResult,
        "certificate": DecompositionCertificate,
        "compound_input": CompoundInput,
        "report": Report,
    }


def _kind_of(cls: type[BaseModel]) -> str:
    for kind, candidate in _artifact_index().items():
        if candidate is cls:
            return kind
    raise ValueError(f"{cls.__name__} is not an artifact type")


def get_artifact[T: BaseModel](message: Mapping[str, Any], expected: type[T]) -> T:
    index = _artifact_index()
    kind = message.get("kind")
    if kind is not None and kind not in index:
        raise ValueError(f"invalid 'kind' {kind!r} (expected one of {', '.join(repr(key) for key in index)})")
    if kind is not None and index[kind] is not expected:
        raise ValueError(f"expected a {_kind_of(expected)!r} artifact, got {kind!r}")
    fields = {key: value for key, value in message.items() if key != "kind" or expected is Report}
    return expected.model_validate(fields)


def dump_artifact(artifact: BaseModel) -> dict[str, Any]:
    data = artifact.model_dump(mode="json", exclude_none=True)
    return {"kind": _kind_of(type(artifact))} | data


def dumps_artifact(artifact: BaseModel, *, indent: int | None = None) -> str:
    return json.dumps(dump_artifact(artifact), indent=indent)
