"""Small value types shared between the analytic modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

Method = Literal["phi01_ratio", "phi11_ratio", "continued_fraction", "monte_carlo", "product"]


@dataclass(frozen=True)
class LaplaceValue:
    """A transform value together with how it was obtained."""

    value: float
    method: Method
    error_estimate: float = 0.0

    def __float__(self) -> float:
        return self.value
