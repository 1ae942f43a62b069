from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union
import math
import numpy as np

from generator_means.src.generator import bisect_increasing
from generator_means.src.interval import Interval
from utils.errors import ArityError, DomainError

ArrayLike = Union[float, np.ndarray]

COUPLER_KINDS = ("sum", "product", "affine", "power_sum", "arithmetic_mean", "reflected")


@dataclass(frozen=True)
class Coupler:
    """Separately increasing k-variable function from a closed family (φ and Φ).

    sum: Σx_j; product: Πx_j (positive orthant); affine: c_0 + Σc_j x_j with c_j > 0;
    power_sum: (Σx_j^r)^(1/r) (positive orthant); arithmetic_mean: Σx_j / k;
    reflected: -base(-x), the coupler of the converse inequality.
    """
    kind: str
    arity: int
    offset: float = 0.0
    coefficients: Tuple[float, ...] = ()
    exponent: float = 1.0
    base: Optional["Coupler"] = None

    def __post_init__(self) -> None:
        if self.kind not in COUPLER_KINDS:
            raise ValueError(f"Unknown coupler kind '{self.kind}'")
        if self.arity < 1:
            raise ArityError(f"Coupler arity must be positive, got {self.arity}")
        if self.kind == "affine":
            if len(self.coefficients) != self.arity:
                raise ArityError(f"Affine coupler needs {self.arity} coefficients, got {len(self.coefficients)}")
            if any(not math.isfinite(c) or c <= 0 for c in self.coefficients) or not math.isfinite(self.offset):
                raise ValueError(f"Affine coupler coefficients must be finite and positive, got {list(self.coefficients)}")
        if self.kind == "power_sum" and (self.exponent == 0 or not math.isfinite(self.exponent)):
            raise ValueError("power_sum exponent must be finite and non-zero")
        if self.kind == "reflected":
            if self.base is None or self.base.arity != self.arity:
                raise ArityError("Reflected coupler needs a base coupler of the same arity")

    @property
    def requires_positive(self) -> bool:
        if self.kind == "reflected":
            return False
        return self.kind in ("product", "power_sum")

    @property
    def requires_negative(self) -> bool:
        return self.kind == "reflected" and self.base is not None and self.base.requires_positive

    # Every builtin kind is continuous and separately strictly increasing on its domain.
    @property
    def continuous(self) -> bool:
        return True

    def strictly_increasing_in(self, coordinate: int) -> bool:
        return 0 <= coordinate < self.arity

    @property
    def strictly_increasing(self) -> bool:
        return all(self.strictly_increasing_in(j) for j in range(self.arity))

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "sum":
            return x.sum(axis=-1)
        if self.kind == "arithmetic_mean":
            return x.sum(axis=-1) / self.arity
        if self.kind == "product":
            return x.prod(axis=-1)
        if self.kind == "affine":
            return self.offset + x @ np.asarray(self.coefficients, dtype=float)
        if self.kind == "power_sum":
            return np.power(np.power(x, self.exponent).sum(axis=-1), 1.0 / self.exponent)
        assert self.base is not None
        return -self.base._evaluate(-x)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1:] != (self.arity,):
            raise ArityError(f"Coupler of arity {self.arity} got input of shape {arr.shape}")
        with np.errstate(all="ignore"):
            out = self._evaluate(arr)
        return out if np.ndim(out) else float(out)

    def check_box(self, box: Sequence[Interval]) -> None:
        if len(box) != self.arity:
            raise ArityError(f"Coupler of arity {self.arity} got a box of dimension {len(box)}")
        if self.requires_positive and any(interval.lo < 0 for interval in box):
            raise DomainError(f"Coupler '{self.kind}' is restricted to the positive orthant, box is {list(box)}")
        if self.requires_negative and any(interval.hi > 0 for interval in box):
            raise DomainError(f"Reflected coupler '{self.base.kind if self.base else ''}' is restricted to the negative orthant")

    def image(self, box: Sequence[Interval]) -> Interval:
        """Image of an open box; exact for separately increasing continuous couplers."""
        self.check_box(box)
        lo = float(self(np.asarray([interval.lo for interval in box], dtype=float)))
        hi = float(self(np.asarray([interval.hi for interval in box], dtype=float)))
        if math.isnan(lo):
            lo = -math.inf
        if math.isnan(hi):
            hi = math.inf
        return Interval(lo, hi)

    def solve_coordinate(self, point: Sequence[float], coordinate: int, target: float,
                         bounds: Interval) -> Optional[float]:
        """x in bounds with self(point with x at `coordinate`) = target, or None if unreachable."""
        base = np.asarray(point, dtype=float).copy()

        def section(value: float) -> float:
            base[coordinate] = value
            return float(self(base))

        lo_value, hi_value = section(bounds.lo), section(bounds.hi)
        if not (lo_value < target < hi_value):
            return None
        return bisect_increasing(section, target, bounds.lo, bounds.hi)

    def reflected(self) -> "Coupler":
        if self.kind == "reflected" and self.base is not None:
            return self.base
        return Coupler("reflected", self.arity, base=self)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind}
        if self.kind == "affine":
            data["c0"] = self.offset
            data["c"] = list(self.coefficients)
        if self.kind == "power_sum":
            data["r"] = self.exponent
        if self.kind == "reflected" and self.base is not None:
            data["base"] = self.base.to_json()
        return data


def sum_coupler(k: int) -> Coupler:
    return Coupler("sum", k)


def product_coupler(k: int) -> Coupler:
    return Coupler("product", k)


def mean_coupler(k: int) -> Coupler:
    return Coupler("arithmetic_mean", k)


def affine_coupler(offset: float, coefficients: Sequence[float]) -> Coupler:
    return Coupler("affine", len(coefficients), offset=float(offset), coefficients=tuple(float(c) for c in coefficients))


def power_sum_coupler(k: int, exponent: float) -> Coupler:
    return Coupler("power_sum", k, exponent=float(exponent))
