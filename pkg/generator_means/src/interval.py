from dataclasses import dataclass
from typing import List, Optional, Union
import math
import numpy as np

from utils.helpers import format_extended_real

ArrayLike = Union[float, np.ndarray]

# Unit coordinates are kept this far away from 0 and 1 so that mapped points
# stay strictly inside the open interval.
UNIT_EPS = 1e-12


@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi) of the extended real line."""
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError(f"Interval endpoints must not be NaN: ({self.lo}, {self.hi})")
        if not self.lo < self.hi:
            raise ValueError(f"Interval requires lo < hi, got ({self.lo}, {self.hi})")

    def __repr__(self) -> str:
        return f"({self.lo:.6g}, {self.hi:.6g})"

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def scale(self) -> float:
        """Length scale of the compactifying map on unbounded sides."""
        finite = [abs(v) for v in (self.lo, self.hi) if math.isfinite(v)]
        return max([1.0] + finite)

    @property
    def midpoint(self) -> float:
        if self.is_bounded:
            return 0.5 * (self.lo + self.hi)
        return float(self.from_unit(0.5))

    def contains(self, x: ArrayLike) -> Union[bool, np.ndarray]:
        arr = np.asarray(x, dtype=float)
        inside = (arr > self.lo) & (arr < self.hi)
        return bool(inside) if inside.ndim == 0 else inside

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersection(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None

    def reflected(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def to_unit(self, x: ArrayLike) -> ArrayLike:
        """Compactifying map (lo, hi) -> (0, 1); tanh on unbounded sides."""
        arr = np.asarray(x, dtype=float)
        if self.is_bounded:
            s = (arr - self.lo) / self.width
        elif math.isfinite(self.lo):
            s = np.tanh((arr - self.lo) / self.scale)
        elif math.isfinite(self.hi):
            s = 1.0 - np.tanh((self.hi - arr) / self.scale)
        else:
            s = 0.5 * (np.tanh(arr / self.scale) + 1.0)
        return s if s.ndim else float(s)

    def from_unit(self, s: ArrayLike) -> ArrayLike:
        """Inverse of to_unit; the result is clipped strictly inside the interval."""
        arr = np.clip(np.asarray(s, dtype=float), UNIT_EPS, 1.0 - UNIT_EPS)
        if self.is_bounded:
            x = self.lo + arr * self.width
        elif math.isfinite(self.lo):
            x = self.lo + self.scale * np.arctanh(arr)
        elif math.isfinite(self.hi):
            x = self.hi - self.scale * np.arctanh(1.0 - arr)
        else:
            x = self.scale * np.arctanh(2.0 * arr - 1.0)
        x = np.clip(x, np.nextafter(self.lo, math.inf), np.nextafter(self.hi, -math.inf))
        return x if x.ndim else float(x)

    def grid(self, n: int) -> np.ndarray:
        """n interior points, uniform in unit coordinates."""
        if n < 1:
            raise ValueError(f"Grid size must be positive, got {n}")
        return np.asarray(self.from_unit((np.arange(n) + 0.5) / n), dtype=float)

    def sample(self, rng: np.random.Generator, size: Union[int, tuple]) -> np.ndarray:
        return np.asarray(self.from_unit(rng.uniform(0.0, 1.0, size)), dtype=float)

    def to_json(self) -> List[Union[str, float]]:
        return [format_extended_real(self.lo), format_extended_real(self.hi)]
