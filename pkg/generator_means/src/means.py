from dataclasses import dataclass
from typing import Sequence, Tuple
import logging
import math
import numpy as np

from generator_means.src.generator import GeneratorFn
from utils.errors import ArityError, WeightError

logger = logging.getLogger("Means")


@dataclass(frozen=True)
class WeightVector:
    """Element of Λ_n: nonnegative entries, not all zero."""
    entries: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ArityError("Weight vector must not be empty")
        if any(not math.isfinite(w) or w < 0 for w in self.entries):
            raise WeightError(f"Weights must be finite and nonnegative, got {list(self.entries)}")
        if not any(w > 0 for w in self.entries):
            raise WeightError("At least one weight must be positive")

    @classmethod
    def of(cls, values: Sequence[float]) -> "WeightVector":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls((1.0,) * n)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> float:
        return math.fsum(self.entries)

    def normalized(self) -> "WeightVector":
        total = self.total
        return WeightVector(tuple(w / total for w in self.entries))


def _check_points(f: GeneratorFn, x: Sequence[float]) -> np.ndarray:
    if len(x) == 0:
        raise ArityError("A mean needs at least one point")
    return np.asarray(x, dtype=float)


def _mean_from_average(f: GeneratorFn, average: float, points: np.ndarray, values: np.ndarray) -> float:
    # The average is a convex combination of the f-values, and the mean lies between
    # min and max of the points; clamping only removes rounding noise.
    average = min(max(average, float(values.min())), float(values.max()))
    mean = float(f.inverse(average))
    return min(max(mean, float(points.min())), float(points.max()))


def qam(f: GeneratorFn, x: Sequence[float]) -> float:
    """n-variable generalized quasi-arithmetic mean f^(-1)((f(x_1)+...+f(x_n))/n)."""
    points = _check_points(f, x)
    values = np.asarray(f(points), dtype=float)
    average = math.fsum(values.tolist()) / len(values)
    return _mean_from_average(f, average, points, values)


def weighted_qam(f: GeneratorFn, x: Sequence[float], weights: WeightVector) -> float:
    """Weighted generalized quasi-arithmetic mean f^(-1)(Σλ_i f(x_i) / Σλ_i)."""
    points = _check_points(f, x)
    if len(points) != len(weights):
        raise ArityError(f"Got {len(points)} points but {len(weights)} weights")
    values = np.asarray(f(points), dtype=float)
    active = np.asarray(weights.entries) > 0
    average = math.fsum((w * v for w, v in zip(weights.entries, values.tolist()) if w > 0)) / weights.total
    # Zero weights take no part in the mean, not even in the internality clamp.
    return _mean_from_average(f, average, points[active], values[active])


def weighted_qam_batch(f: GeneratorFn, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Vectorized weighted means over the last axis; nan where a point leaves the domain.

    Used by the search engines; `weighted_qam` is the reference path for replay.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if points.shape != weights.shape:
        raise ArityError(f"Points shape {points.shape} does not match weights shape {weights.shape}")
    inside = (points > f.domain.lo) & (points < f.domain.hi)
    values = f.values(np.where(inside, points, f.domain.midpoint))
    values = np.where(inside, values, np.nan)
    total = weights.sum(axis=-1)
    average = (weights * values).sum(axis=-1) / total
    active = weights > 0
    low = np.where(active, values, np.inf).min(axis=-1)
    high = np.where(active, values, -np.inf).max(axis=-1)
    average = np.clip(average, low, high)
    return np.asarray(f.inverse.values(average), dtype=float)
