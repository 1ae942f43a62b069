from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple
import math
import numpy as np

from generator_means.src.means import WeightVector, weighted_qam, weighted_qam_batch
from inequality_engine.engine_types import CounterexampleDataType
from inequality_engine.src.problems import InequalityProblem
from utils.errors import ArityError, ProblemFormatError


def _as_points(p: InequalityProblem, points: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != p.k or arr.shape[0] < 1:
        raise ArityError(f"Expected an n x {p.k} matrix of points, got shape {arr.shape}")
    return arr


def evaluate_inequality(p: InequalityProblem, points: Sequence[Sequence[float]],
                        weights: Optional[Sequence[float]] = None) -> Tuple[float, float]:
    """(lhs, rhs) of the weighted inequality on the reference (compensated-sum) path.

    lhs = M_{f_0}(φ(x_1), ..., φ(x_n); λ), rhs = Φ(M_{f_1}(x_{·1}; λ), ..., M_{f_k}(x_{·k}; λ)).
    Without weights this is the unweighted inequality.
    """
    arr = _as_points(p, points)
    w = WeightVector.uniform(len(arr)) if weights is None else WeightVector.of(weights)
    images = [float(p.phi(row)) for row in arr]
    lhs = weighted_qam(p.f0, images, w)
    means = np.asarray([weighted_qam(f, arr[:, j].tolist(), w) for j, f in enumerate(p.fs)], dtype=float)
    rhs = float(p.Phi(means))
    return lhs, rhs


def inequality_gap(p: InequalityProblem, points: Sequence[Sequence[float]],
                   weights: Optional[Sequence[float]] = None) -> float:
    """lhs - rhs for any number of points; positive means the inequality fails there."""
    lhs, rhs = evaluate_inequality(p, points, weights)
    return lhs - rhs


def gap_batch(p: InequalityProblem, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Vectorized lhs - rhs over a batch (B, n, k) of point matrices; -inf where undefined."""
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    images = np.asarray(p.phi(points), dtype=float)
    lhs = weighted_qam_batch(p.f0, images, weights)
    means = np.stack([weighted_qam_batch(f, points[..., j], weights) for j, f in enumerate(p.fs)], axis=-1)
    rhs = np.asarray(p.Phi(means), dtype=float)
    gap = lhs - rhs
    return np.where(np.isfinite(gap), gap, -np.inf)


@dataclass(frozen=True)
class Counterexample:
    """Points and weights at which the inequality fails, with the evaluated sides."""
    points: Tuple[Tuple[float, ...], ...]
    weights: Tuple[float, ...]
    lhs: float
    rhs: float
    violation: float
    source: str = "falsifier"

    def to_json(self) -> CounterexampleDataType:
        return {
            "points": [list(row) for row in self.points],
            "lambda": list(self.weights),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "violation": self.violation,
            "source": self.source,
        }


def make_counterexample(p: InequalityProblem, points: Sequence[Sequence[float]],
                        weights: Sequence[float], source: str = "falsifier") -> Counterexample:
    arr = _as_points(p, points)
    lhs, rhs = evaluate_inequality(p, arr, weights)
    return Counterexample(tuple(tuple(float(v) for v in row) for row in arr),
                          tuple(float(w) for w in weights), lhs, rhs, lhs - rhs, source)


def replay(p: InequalityProblem, counterexample: Counterexample) -> Counterexample:
    """Re-evaluate stored points and weights from scratch."""
    return make_counterexample(p, counterexample.points, counterexample.weights, counterexample.source)


def counterexample_from_json(data: Dict[str, Any], p: InequalityProblem) -> Counterexample:
    try:
        points = [[float(v) for v in row] for row in data["points"]]
        weights = [float(w) for w in data["lambda"]]
        lhs, rhs, violation = float(data["lhs"]), float(data["rhs"]), float(data["violation"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProblemFormatError(f"Malformed counterexample: {e}", "counterexample")
    if len(points) != len(weights) or any(len(row) != p.k for row in points):
        raise ProblemFormatError(f"Counterexample needs n rows of {p.k} coordinates and n weights", "counterexample")
    if not all(math.isfinite(v) for v in (lhs, rhs, violation)):
        raise ProblemFormatError("Counterexample sides must be finite", "counterexample")
    return Counterexample(tuple(tuple(row) for row in points), tuple(weights), lhs, rhs, violation,
                          str(data.get("source", "falsifier")))
