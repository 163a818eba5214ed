from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class DensityRoute(str, Enum):
    EQ4 = "Eq4"
    EQ11 = "Eq11"
    EQ8 = "Eq8"
    EQ13 = "Eq13"


class DensityResult(BaseModel):
    """
    A density value with a certified absolute truncation error:
    value - error_bound <= true density <= value + error_bound.
    """

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0, le=1.0)
    error_bound: float = Field(ge=0.0, lt=1.0)
    # 0 for the sum form, which truncates at sum_limit only
    prime_limit: int = Field(ge=0)
    exponent_depth: int = Field(ge=0)
    route: DensityRoute
    sum_limit: int | None = None
    term_limit: int | None = None

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def intersects(self, other: "DensityResult") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


class GapInterval(BaseModel):
    """Separation between exponent sets without 2 (at most upper_no2) and with {1, 2} (at least lower_with2)."""

    model_config = ConfigDict(frozen=True)

    upper_no2: float
    upper_no2_error: float
    lower_with2: float
    lower_with2_error: float
    prime_limit: int
    certified: bool
    no2: DensityResult | None = None
    with2: DensityResult | None = None


class BoundedValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    tail_bound: float = Field(ge=0.0)
