import os
from typing import Literal, Self

from pydantic import BaseModel, Field, model_validator

type Mode = Literal["increasing", "decreasing", "alternating"]

MODE_ALIASES: dict[str, Mode] = {
    "inc": "increasing",
    "dec": "decreasing",
    "alt": "alternating",
    "increasing": "increasing",
    "decreasing": "decreasing",
    "alternating": "alternating",
}


class Tolerance(BaseModel):
    # Only consulted on the floating path; exact mode admits no tolerance.
    epsilon: float = Field(default=1e-12, ge=0.0)


class Caps(BaseModel):
    max_d: int = 24
    max_grid_dim: int = 8
    max_multi_index: int = 6
    max_tensor_dim: int = 4
    max_exhaustive_partition_d: int = 20


class ClosureConfig(BaseModel):
    mode: Literal["increasing", "alternating"] = "increasing"
    d: int = Field(default=3, ge=1, le=4)
    k: int = Field(default=2, ge=1, le=3)
    axis_length: int = Field(default=3, ge=1, le=3)
    trials: int = Field(default=500, ge=1, le=10_000)
    seed: int = 1

    @model_validator(mode="after")
    def _order_within_dimension(self) -> Self:
        if self.k > self.d:
            raise ValueError(f"k={self.k} exceeds d={self.d}")
        return self


CAPS = Caps()
DEFAULT_TOLERANCE = Tolerance()


def default_seed() -> int:
    return int(os.environ.get("KMONO_SEED", "1"))


def parse_mode(value: str) -> Mode:
    try:
        return MODE_ALIASES[value]
    except KeyError:
        raise ValueError(f"unknown mode {value!r} (expected one of {', '.join(sorted(MODE_ALIASES))})") from None
