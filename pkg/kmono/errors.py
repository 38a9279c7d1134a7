from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .messages import Witness


class KMonoError(Exception):
    pass


class PreconditionError(KMonoError, ValueError):
    pass


class DomainError(KMonoError, ValueError):
    pass


class UndefinedValueError(KMonoError, ValueError):
    pass


class NotMonotoneError(KMonoError, ValueError):

    def __init__(self, message: str, witness: Witness | None = None) -> None:
        super().__init__(message)
        self.witness = witness


class BudgetExhaustedError(KMonoError, RuntimeError):
    pass


class ClosureViolationError(KMonoError, RuntimeError):

    def __init__(self, message: str, *, seed: int, witness: Witness | None = None) -> None:
        super().__init__(f"{message} (reproduce with seed={seed})")
        self.seed = seed
        self.witness = witness
