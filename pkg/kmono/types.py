from fractions import Fraction
from typing import Annotated, Any, Iterable, Literal

from pydantic import PlainSerializer, PlainValidator


def parse_rational(value: Any) -> Fraction:
    match value:
        case bool():
            raise ValueError(f"expected a rational, got {value!r}")
        case Fraction():
            return value
        case int():
            return Fraction(value)
        case str():
            try:
                return Fraction(value.strip())
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"invalid rational {value!r}") from e
        case _:
            raise ValueError(f"expected a rational string such as '1/3', got {value!r}")


def _accept_scalar(value: Any) -> Fraction | float:
    match value:
        case float():
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError(f"value must be finite, got {value!r}")
            return value
        case _:
            return parse_rational(value)


def format_scalar(value: Fraction | float) -> str | float:
    match value:
        case Fraction():
            return str(value)
        case _:
            return value


# Exact values travel as strings ("1/3", "0.5") so that JSON never turns them
# into binary floats.
type Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(format_scalar),
]

# Floats pass only where the owning model declares mode "float"; see
# require_exact.
type Scalar = Annotated[
    Fraction | float,
    PlainValidator(_accept_scalar),
    PlainSerializer(format_scalar),
]

type Number = Fraction | float

type NumericMode = Literal["exact", "float"]


def is_exact(values: Any) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def mode_of(values: Iterable[Any]) -> NumericMode:
    return "float" if any(isinstance(v, float) for v in values) else "exact"


def require_exact(mode: NumericMode, values: Iterable[Any], what: str) -> None:
    if mode == "exact" and not is_exact(values):
        raise ValueError(f'exact mode requires rational {what}; mark the artifact "mode": "float" to pass floats')
