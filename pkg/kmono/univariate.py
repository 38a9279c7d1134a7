import math
import re
from fractions import Fraction
from typing import Any, Literal, Mapping

from pydantic import BaseModel, ConfigDict, TypeAdapter

from .errors import UndefinedValueError
from .types import Number, Scalar


class UnivariateMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: str

    def __call__(self, value: Number) -> Number:
        raise NotImplementedError()


class Identity(UnivariateMap):
    type: Literal["identity"] = "identity"

    def __call__(self, value: Number) -> Number:
        return value


class Constant(UnivariateMap):
    type: Literal["constant"] = "constant"
    value: Scalar

    def __call__(self, value: Number) -> Number:
        return self.value


class Sqrt(UnivariateMap):
    type: Literal["sqrt"] = "sqrt"

    def __call__(self, value: Number) -> Number:
        if value < 0:
            raise UndefinedValueError(f"sqrt is undefined at {value}")
        return math.sqrt(value)


class Log1p(UnivariateMap):
    type: Literal["log1p"] = "log1p"

    def __call__(self, value: Number) -> Number:
        if value <= -1:
            raise UndefinedValueError(f"log1p is undefined at {value}")
        return math.log1p(value)


class Power(UnivariateMap):
    type: Literal["power"] = "power"
    theta: Scalar

    def __call__(self, value: Number) -> Number:
        if value < 0 or (value == 0 and self.theta < 0):
            raise UndefinedValueError(f"t^{self.theta} is undefined at {value}")
        match self.theta, value:
            case Fraction(denominator=1) as theta, Fraction():
                return value**theta.numerator
            case _:
                return float(value) ** float(self.theta)


class ValueTable(UnivariateMap):
    type: Literal["table"] = "table"
    # Pairs rather than a mapping so that keys stay exact rationals in JSON.
    pairs: list[tuple[Scalar, Scalar]]

    def __call__(self, value: Number) -> Number:
        for key, image in self.pairs:
            if key == value:
                return image
        raise UndefinedValueError(f"value map has no entry for {value}")


# Deserialize through this union rather than the base class, otherwise only
# the base fields survive validation.
type AnyMap = Identity | Constant | Sqrt | Log1p | Power | ValueTable


def get_map(message: Mapping[str, Any]) -> AnyMap:
    return TypeAdapter(AnyMap).validate_python(message)


def named_map(spec: str) -> AnyMap:
    match spec.strip().lower():
        case "identity" | "id":
            return Identity()
        case "sqrt":
            return Sqrt()
        case "log1p":
            return Log1p()
        case text if match := re.fullmatch(r"power\((.+)\)", text):
            return Power(theta=match.group(1))
        case _:
            raise ValueError(f"unknown map {spec!r} (expected identity, sqrt, log1p or power(theta))")
