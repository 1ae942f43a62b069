from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple
import itertools
import logging
import math
import numpy as np

from generator_means.src.generator import GeneratorFn
from generator_means.src.interval import Interval
from inequality_engine.engine_types import EngineSettingsDataType
from inequality_engine.src.evidence import Counterexample, make_counterexample
from inequality_engine.src.problems import InequalityProblem, psi_eval, psi_values

logger = logging.getLogger("Concavity")

REJECT_THRESHOLD = 1e-6
HESSIAN_STEP = 1e-4
UNIT_MARGIN = 1e-3
JENSEN_SAMPLES = 400
ZERO_CURVATURE = 1e-12


@dataclass(frozen=True)
class ConcavityReport:
    """concave | not_concave | inconclusive | unsupported, with the evidence gathered."""
    status: str
    pairs: int = 0
    worst_deficit: float = -math.inf
    max_eigenvalue: float = -math.inf
    witness: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None
    reason: str = ""

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status, "pairs": self.pairs}
        if math.isfinite(self.worst_deficit):
            data["worst_deficit"] = self.worst_deficit
        if math.isfinite(self.max_eigenvalue):
            data["max_scaled_eigenvalue"] = self.max_eigenvalue
        if self.witness is not None:
            data["witness"] = {"u": list(self.witness[0]), "v": list(self.witness[1])}
        if self.reason:
            data["reason"] = self.reason
        return data


def _hull_units(hull: Interval, s: np.ndarray) -> np.ndarray:
    return np.asarray(hull.from_unit(s), dtype=float)


def _to_range(p: InequalityProblem, s: np.ndarray) -> np.ndarray:
    return np.stack([_hull_units(hull, s[..., j]) for j, hull in enumerate(p.range_box)], axis=-1)


def _midpoint_scan(p: InequalityProblem, pairs: int, rng: np.random.Generator) -> Tuple[float, np.ndarray, np.ndarray]:
    """Worst relative midpoint deficit (Ψ(u)+Ψ(v))/2 - Ψ((u+v)/2) over random pairs."""
    u = _to_range(p, rng.uniform(UNIT_MARGIN, 1.0 - UNIT_MARGIN, (pairs, p.k)))
    v = _to_range(p, rng.uniform(UNIT_MARGIN, 1.0 - UNIT_MARGIN, (pairs, p.k)))
    psi_u, psi_v = psi_values(p, u), psi_values(p, v)
    psi_mid = psi_values(p, 0.5 * (u + v))
    deficit = 0.5 * (psi_u + psi_v) - psi_mid
    scale = 1.0 + np.maximum(np.abs(psi_u), np.abs(psi_v))
    relative = np.where(np.isfinite(deficit), deficit / scale, -np.inf)
    worst = int(np.argmax(relative))
    return float(relative[worst]), u[worst], v[worst]


def _hessian_steps(p: InequalityProblem, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Finite-difference steps and the coordinate scales used to normalize curvature."""
    widths = np.asarray([hull.width if hull.is_bounded else 1.0 for hull in p.range_box])
    scales = np.maximum(np.abs(u), 1e-2 * widths)
    steps = HESSIAN_STEP * scales
    room = np.asarray([min(u[j] - hull.lo, hull.hi - u[j]) for j, hull in enumerate(p.range_box)])
    return np.minimum(steps, 0.25 * room), scales


def finite_difference_hessian(p: InequalityProblem, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Central-difference Hessian of Ψ at u, plus the coordinate scales."""
    steps, scales = _hessian_steps(p, u)
    k = p.k
    offsets = []
    for i, j in itertools.product(range(k), repeat=2):
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            shift = np.zeros(k)
            shift[i] += si * steps[i]
            shift[j] += sj * steps[j]
            offsets.append(shift)
    values = psi_values(p, u[None, :] + np.asarray(offsets)).reshape(k, k, 4)
    hessian = (values[..., 0] - values[..., 1] - values[..., 2] + values[..., 3]) / (4.0 * np.outer(steps, steps))
    return 0.5 * (hessian + hessian.T), scales


def _hessian_scan(p: InequalityProblem, points: int) -> Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
    """Largest scale-normalized Hessian eigenvalue over a grid in the range box."""
    axis = (np.arange(points) + 0.5) / points
    worst, where, direction = -math.inf, None, None
    for s in itertools.product(axis, repeat=p.k):
        u = _to_range(p, np.asarray(s))
        hessian, scales = finite_difference_hessian(p, u)
        if not np.all(np.isfinite(hessian)):
            continue
        scaled = hessian * np.outer(scales, scales) / (1.0 + abs(float(psi_values(p, u))))
        eigenvalues, eigenvectors = np.linalg.eigh(scaled)
        if eigenvalues[-1] > worst:
            worst, where, direction = float(eigenvalues[-1]), u, eigenvectors[:, -1] * scales
    return worst, where, direction


def _pair_along(p: InequalityProblem, u: np.ndarray, direction: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray, float]]:
    """Try ±δ·direction around u for a midpoint deficit."""
    for fraction in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3):
        a, b = u + fraction * direction, u - fraction * direction
        if not all(hull.contains(a[j]) and hull.contains(b[j]) for j, hull in enumerate(p.range_box)):
            continue
        psi_a, psi_b, psi_u = (float(psi_values(p, x)) for x in (a, b, u))
        deficit = 0.5 * (psi_a + psi_b) - psi_u
        if deficit / (1.0 + max(abs(psi_a), abs(psi_b))) > REJECT_THRESHOLD:
            return a, b, deficit
    return None


def check_concavity(p: InequalityProblem, settings: EngineSettingsDataType, rng: np.random.Generator,
                    pairs: Optional[int] = None, hessian_grid: Optional[int] = None) -> ConcavityReport:
    """Midpoint concavity on random pairs plus a finite-difference Hessian scan of Ψ."""
    if not p.continuous_inner:
        return ConcavityReport("unsupported", reason="Psi needs continuous f_1..f_k")
    pairs = settings["concavity_pairs"] if pairs is None else pairs
    hessian_grid = settings["hessian_grid"] if hessian_grid is None else hessian_grid

    worst, u, v = _midpoint_scan(p, pairs, rng)
    logger.debug(f"Midpoint scan over {pairs} pairs: worst relative deficit {worst:.3e}")
    if worst > REJECT_THRESHOLD:
        return ConcavityReport("not_concave", pairs, worst, witness=(tuple(u.tolist()), tuple(v.tolist())),
                               reason="midpoint deficit")

    eigenvalue, where, direction = _hessian_scan(p, hessian_grid)
    logger.debug(f"Hessian scan on {hessian_grid}^{p.k} points: max scaled eigenvalue {eigenvalue:.3e}")
    if eigenvalue > settings["hessian_tolerance"] and where is not None:
        pair = _pair_along(p, where, direction)
        if pair is not None:
            a, b, _ = pair
            return ConcavityReport("not_concave", pairs, worst, eigenvalue, (tuple(a.tolist()), tuple(b.tolist())),
                                   "positive Hessian eigenvalue")
        return ConcavityReport("inconclusive", pairs, worst, eigenvalue, reason="positive Hessian eigenvalue without a midpoint witness")

    if worst > settings["concavity_tolerance"]:
        return ConcavityReport("inconclusive", pairs, worst, eigenvalue, reason="midpoint deficit between tolerances")
    return ConcavityReport("concave", pairs, worst, eigenvalue)


def concavity_counterexample(p: InequalityProblem, report: ConcavityReport) -> Optional[Counterexample]:
    """With φ = Φ, a midpoint deficit of Ψ at (u, v) is the two-point inequality failing at f^(-1)(u), f^(-1)(v)."""
    if report.witness is None or not p.same_couplers or not p.continuous_inner:
        return None
    u, v = (np.asarray(w, dtype=float) for w in report.witness)
    rows = [[float(f.inverse(w[j])) for j, f in enumerate(p.fs)] for w in (u, v)]
    rows += [rows[0]] * (p.k - 1)
    weights = [1.0, 1.0] + [0.0] * (p.k - 1)
    return make_counterexample(p, rows, weights, source="concavity")


@dataclass(frozen=True)
class E2Report:
    status: str  # ok | violation | skipped
    worst_gap: float
    e1_error: float
    witness: Optional[Tuple[float, ...]] = None

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status, "e1_error": self.e1_error}
        if math.isfinite(self.worst_gap):
            data["worst_gap"] = self.worst_gap
        if self.witness is not None:
            data["witness"] = {"t": list(self.witness)}
        return data


def check_e2(p: InequalityProblem, report: ConcavityReport, rng: np.random.Generator, samples: int,
             tolerance: float = 1e-9) -> E2Report:
    """f_0(Φ(t)) ≥ Ψ(f_1(t_1), ..., f_k(t_k)) on sampled t, with e1 as a sanity check."""
    if report.status == "unsupported":
        return E2Report("skipped", -math.inf, 0.0)
    t = p.sample_box(rng, samples)
    u = np.stack([f.values(t[:, j]) for j, f in enumerate(p.fs)], axis=-1)
    psi = np.asarray(psi_eval(p, u), dtype=float)

    direct = p.f0.values(np.asarray(p.phi(t), dtype=float))
    e1_error = float(np.max(np.abs(direct - psi) / (1.0 + np.abs(direct))))

    y = np.asarray(p.Phi(t), dtype=float)
    inside = p.f0.domain.contains(y)
    outer = np.where(inside, p.f0.values(np.where(inside, y, p.f0.domain.midpoint)),
                     np.where(y >= p.f0.domain.hi, np.inf, -np.inf))
    gap = (psi - outer) / (1.0 + np.abs(psi))
    gap = np.where(np.isnan(gap), -np.inf, gap)
    worst = int(np.argmax(gap))
    if gap[worst] > tolerance:
        return E2Report("violation", float(gap[worst]), e1_error, tuple(t[worst].tolist()))
    return E2Report("ok", float(gap[worst]), e1_error)


@dataclass(frozen=True)
class JensenReport:
    status: str  # holds | fails | unsupported
    reason: str
    witness: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status, "reason": self.reason}
        if self.witness is not None:
            data["witness"] = self.witness
        return data


def jensen_criterion(f: GeneratorFn, samples: int = JENSEN_SAMPLES, tolerance: float = 1e-9) -> JensenReport:
    """f'' ≡ 0, or f'' > 0 with f'/f'' concave: the Jensen convexity of the mean M_f."""
    if not f.is_single_piece:
        return JensenReport("unsupported", "criterion needs a single analytic piece")
    x = f.domain.grid(samples)
    first = np.asarray(f.derivative(x), dtype=float)
    second = np.asarray(f.second_derivative(x), dtype=float)
    if not (np.all(np.isfinite(first)) and np.all(np.isfinite(second))):
        return JensenReport("unsupported", "derivatives are not finite on the sample")

    flat = np.abs(second) <= ZERO_CURVATURE * (1.0 + np.abs(first))
    if np.all(flat):
        return JensenReport("holds", "f'' vanishes identically")
    if np.any(flat) or np.any(second < 0):
        index = int(np.flatnonzero(flat | (second < 0))[0])
        return JensenReport("fails", "f'' is not positive everywhere", float(x[index]))

    ratio = first / second
    left, middle, right = x[:-2], x[1:-1], x[2:]
    chord = ((right - middle) * ratio[:-2] + (middle - left) * ratio[2:]) / (right - left)
    deficit = (chord - ratio[1:-1]) / (1.0 + np.abs(ratio[1:-1]))
    worst = int(np.argmax(deficit))
    if deficit[worst] > tolerance:
        return JensenReport("fails", "f'/f'' is not concave", float(middle[worst]))
    return JensenReport("holds", "f'' > 0 and f'/f'' is concave")
