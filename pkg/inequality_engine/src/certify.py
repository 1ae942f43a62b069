from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import asyncio
import itertools
import logging
import math
import numpy as np

from inequality_engine.engine_types import CertificateDataType, EngineSettingsDataType
from inequality_engine.src.evidence import Counterexample, make_counterexample
from inequality_engine.src.falsifier import climb_counterexample, hill_climb
from inequality_engine.src.problems import InequalityProblem, gamma_density
from inequality_engine.src.simplex import lp_feasible
from utils.errors import PreconditionError, ProblemFormatError, SolverError

logger = logging.getLogger("Certify")

GAMMA_MARGIN = 1e-9
LOCAL_SCALES = (1e-1, 1e-2, 1e-3, 1e-4)
LOCAL_DIRECTIONS = 16
RESIDUAL_CANDIDATES = 2000
REFINEMENT_STARTS = 4
SUPPORT_TOLERANCE = 1e-15
WITNESS_TOLERANCE = 1e-9


# Evidence types

@dataclass(frozen=True)
class FarkasWitness:
    """λ and points proving that no nonnegative coefficients fit the sampled rows at t."""
    base: Tuple[float, ...]
    points: Tuple[Tuple[float, ...], ...]
    weights: Tuple[float, ...]

    def inner_sums(self, p: InequalityProblem) -> np.ndarray:
        """Σ_i λ_i (f_j(x_ij) - f_j(t_j)) for each j; all ≤ 0."""
        points = np.asarray(self.points, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        return np.asarray([weights @ (f.values(points[:, j]) - float(f(self.base[j])))
                           for j, f in enumerate(p.fs)], dtype=float)

    def outer_sum(self, p: InequalityProblem) -> float:
        """Σ_i λ_i (f_0(φ(x_i)) - f_0(Φ(t))); positive."""
        points = np.asarray(self.points, dtype=float)
        anchor = float(p.f0(float(p.Phi(np.asarray(self.base)))))
        return float(np.asarray(self.weights) @ (p.f0.values(p.phi(points)) - anchor))

    def to_json(self) -> Dict[str, Any]:
        return {"base": list(self.base), "points": [list(row) for row in self.points], "lambda": list(self.weights)}


@dataclass(frozen=True)
class CertificateEntry:
    """Coefficients a(t) ≥ 0 of the supporting affine map Ψ_t at one grid point."""
    base: Tuple[float, ...]
    coeffs: Tuple[float, ...]
    residual: float

    def anchor(self, p: InequalityProblem) -> Tuple[float, np.ndarray]:
        """(f_0(Φ(t)), (f_1(t_1), ..., f_k(t_k)))."""
        t = np.asarray(self.base, dtype=float)
        return float(p.f0(float(p.Phi(t)))), np.asarray([float(f(t[j])) for j, f in enumerate(p.fs)])

    def majorant(self, p: InequalityProblem, u: np.ndarray) -> np.ndarray:
        value, at = self.anchor(p)
        return value + (np.asarray(u, dtype=float) - at) @ np.asarray(self.coeffs)


@dataclass(frozen=True)
class Certificate:
    entries: Tuple[CertificateEntry, ...]
    residual: float
    rounds: int = 0

    @property
    def grid(self) -> List[Tuple[float, ...]]:
        return [entry.base for entry in self.entries]

    def envelope(self, p: InequalityProblem, u: np.ndarray) -> np.ndarray:
        """Pointwise infimum of the certified affine maps; concave by construction."""
        values = np.stack([entry.majorant(p, u) for entry in self.entries], axis=0)
        return values.min(axis=0)

    def to_json(self) -> CertificateDataType:
        return {
            "grid": [list(entry.base) for entry in self.entries],
            "coeffs": [list(entry.coeffs) for entry in self.entries],
            "residual": self.residual,
            "rounds": self.rounds,
        }


def certificate_from_json(data: Dict[str, Any], p: InequalityProblem) -> Certificate:
    try:
        grid = [[float(v) for v in row] for row in data["grid"]]
        coeffs = [[float(v) for v in row] for row in data["coeffs"]]
        residual = float(data["residual"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProblemFormatError(f"Malformed certificate: {e}", "certificate")
    if len(grid) != len(coeffs) or not grid:
        raise ProblemFormatError("Certificate grid and coeffs must be non-empty and of equal length", "certificate")
    if any(len(row) != p.k for row in grid + coeffs):
        raise ProblemFormatError(f"Certificate rows must have {p.k} entries", "certificate")
    if any(c < 0 for row in coeffs for c in row):
        raise ProblemFormatError("Certificate coefficients must be nonnegative", "certificate.coeffs")
    entries = tuple(CertificateEntry(tuple(t), tuple(a), residual) for t, a in zip(grid, coeffs))
    return Certificate(entries, residual, int(data.get("rounds", 0)))


# Single grid point

def in_gamma(p: InequalityProblem, t: np.ndarray) -> bool:
    y = float(p.Phi(np.asarray(t, dtype=float)))
    return bool(p.f0.domain.contains(y)) and p.f0.distance_to_jump(y) > GAMMA_MARGIN * (1.0 + abs(y))


def _anchor(p: InequalityProblem, t: np.ndarray) -> float:
    y = float(p.Phi(t))
    if not p.f0.domain.contains(y):
        raise PreconditionError(f"Phi(t) = {y:.12g} is outside the domain {p.f0.domain} of f_0")
    if not in_gamma(p, t):
        raise PreconditionError(f"Phi(t) = {y:.12g} is at a jump of f_0; perturb t")
    return float(p.f0(y))


def constraint_rows(p: InequalityProblem, t: np.ndarray, sample: np.ndarray, anchor: float) -> Tuple[np.ndarray, np.ndarray]:
    """G_i = (f_j(x_ij) - f_j(t_j))_j and h_i = f_0(φ(x_i)) - f_0(Φ(t))."""
    G = np.stack([f.values(sample[:, j]) - float(f(t[j])) for j, f in enumerate(p.fs)], axis=-1)
    h = p.f0.values(np.asarray(p.phi(sample), dtype=float)) - anchor
    return G, h


def reduce_support(G: np.ndarray, h: np.ndarray, dual: np.ndarray, k: int) -> np.ndarray:
    """Carathéodory reduction: same λᵀG and λᵀh on at most k + 1 rows."""
    lam = np.array(dual, dtype=float)
    support = np.flatnonzero(lam > SUPPORT_TOLERANCE)
    while len(support) > k + 1:
        system = np.vstack([G[support].T, h[support][None, :]])
        direction = np.linalg.svd(system)[2][-1]
        if direction.max() <= 0:
            direction = -direction
        positive = direction > SUPPORT_TOLERANCE
        ratios = lam[support][positive] / direction[positive]
        theta = ratios.min()
        lam[support] -= theta * direction
        lam[support[np.flatnonzero(positive)[int(np.argmin(ratios))]]] = 0.0
        lam = np.clip(lam, 0.0, None)
        support = np.flatnonzero(lam > SUPPORT_TOLERANCE)
    lam[lam <= SUPPORT_TOLERANCE] = 0.0
    return lam / lam.sum()


def _dual_verifies(G: np.ndarray, h: np.ndarray, lam: np.ndarray) -> bool:
    tolerance = WITNESS_TOLERANCE * max(1.0, float(np.abs(G).max()))
    return bool((lam @ G).max() <= tolerance and lam @ h > 0)


def certify_at(p: InequalityProblem, t: Sequence[float], sample: np.ndarray) -> Union[CertificateEntry, FarkasWitness]:
    """Fit a(t) ≥ 0 to every sampled constraint, or return the Farkas witness of infeasibility."""
    t = np.asarray(t, dtype=float)
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    if len(sample) == 0:
        raise PreconditionError("certify_at needs a non-empty sample")
    anchor = _anchor(p, t)
    G, h = constraint_rows(p, t, sample, anchor)
    result = lp_feasible(G, h)
    if result.feasible:
        residual = float((h - G @ result.point).max())
        return CertificateEntry(tuple(t.tolist()), tuple(result.point.tolist()), residual)

    lam = reduce_support(G, h, result.dual, p.k)
    if not _dual_verifies(G, h, lam):
        logger.debug("Support reduction lost precision; keeping the full Farkas dual")
        lam = result.dual
    support = np.flatnonzero(lam > 0)
    points = [tuple(sample[i].tolist()) for i in support]
    weights = [float(lam[i]) for i in support]
    while len(points) < p.k + 1:
        points.append(tuple(t.tolist()))
        weights.append(0.0)
    return FarkasWitness(tuple(t.tolist()), tuple(points), tuple(weights))


def farkas_counterexample(p: InequalityProblem, witness: FarkasWitness) -> Counterexample:
    """Weighted means built from λ: M_j ≤ t_j for every j, while M_0(φ-images) > Φ(t)."""
    _anchor(p, np.asarray(witness.base, dtype=float))
    return make_counterexample(p, witness.points, witness.weights, source="farkas")


# Cutting-plane refinement

def bounding_points(p: InequalityProblem, t: np.ndarray, step: float) -> np.ndarray:
    """t - ε e_j for every j, ε one grid step in unit coordinates; they bound a_j from above."""
    s = p.to_unit(t)
    rows = []
    for j in range(p.k):
        moved = s.copy()
        moved[j] = s[j] - step if s[j] - step > 0 else 0.5 * s[j]
        rows.append(p.from_unit(moved))
    return np.asarray(rows)


def local_points(p: InequalityProblem, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    s = p.to_unit(t)
    axes = np.concatenate([np.eye(p.k), -np.eye(p.k)])
    rows = []
    for scale in LOCAL_SCALES:
        directions = rng.normal(size=(LOCAL_DIRECTIONS, p.k))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        rows.append(np.clip(s + scale * np.concatenate([axes, directions]), 0.0, 1.0))
    return p.from_unit(np.concatenate(rows))


def residual_values(p: InequalityProblem, entry: CertificateEntry, anchor: Tuple[float, np.ndarray], X: np.ndarray) -> np.ndarray:
    """f_0(φ(x)) - Ψ_t(f(x)); the certificate needs this ≤ 0."""
    value, at = anchor
    F = np.stack([f.values(X[..., j]) for j, f in enumerate(p.fs)], axis=-1)
    out = p.f0.values(np.asarray(p.phi(X), dtype=float)) - value - (F - at) @ np.asarray(entry.coeffs)
    return np.where(np.isfinite(out), out, -np.inf)


def maximize_residual(p: InequalityProblem, entry: CertificateEntry, rng: np.random.Generator,
                      settings: EngineSettingsDataType) -> Tuple[np.ndarray, float]:
    """Points where the current coefficients are most violated, and the worst residual."""
    anchor = entry.anchor(p)
    t = np.asarray(entry.base)

    def objective(z: np.ndarray) -> np.ndarray:
        return residual_values(p, entry, anchor, p.from_unit(z))

    starts = np.concatenate([rng.uniform(0.0, 1.0, (RESIDUAL_CANDIDATES, p.k)), p.to_unit(local_points(p, t, rng))])
    values = objective(starts)
    top = np.argsort(-values, kind="stable")[:REFINEMENT_STARTS]
    climbed, climbed_values = hill_climb(objective, starts[top], max(settings["hill_climb_steps"] // 2, 1))
    worst = float(max(climbed_values.max(), values.max()))
    cuts = p.from_unit(climbed[climbed_values > settings["certificate_tolerance"]])
    if not len(cuts):
        cuts = p.from_unit(starts[top[:1]])
    return np.atleast_2d(cuts), worst


@dataclass(frozen=True)
class GridOutcome:
    status: str  # certified | refuted | undecided
    base: Tuple[float, ...]
    rounds: int = 0
    reason: str = ""
    entry: Optional[CertificateEntry] = None
    witness: Optional[FarkasWitness] = None
    counterexample: Optional[Counterexample] = None


def certify_point(p: InequalityProblem, t: np.ndarray, step: float, settings: EngineSettingsDataType,
                  rng: np.random.Generator) -> GridOutcome:
    """certify_at with cutting-plane refinement at one grid point."""
    base = tuple(np.asarray(t, dtype=float).tolist())
    sample = np.concatenate([bounding_points(p, t, step), local_points(p, t, rng),
                             p.sample_box(rng, settings["sample_size"])])
    entry: Optional[CertificateEntry] = None
    for round_index in range(1, settings["cutting_plane_rounds"] + 1):
        try:
            outcome = certify_at(p, t, sample)
        except (SolverError, PreconditionError) as e:
            logger.warning(f"Grid point {base} left undecided: {e}")
            return GridOutcome("undecided", base, round_index, str(e))

        if isinstance(outcome, FarkasWitness):
            counterexample = farkas_counterexample(p, outcome)
            if counterexample.violation <= settings["violation_tolerance"]:
                logger.warning(f"Weak Farkas counterexample at {base} (violation {counterexample.violation:.3e}); climbing")
                counterexample = climb_counterexample(p, counterexample, settings)
            if counterexample.violation <= settings["violation_tolerance"]:
                return GridOutcome("undecided", base, round_index, "Farkas counterexample too weak", witness=outcome)
            logger.debug(f"Grid point {base} refuted after {round_index} round(s)")
            return GridOutcome("refuted", base, round_index, witness=outcome, counterexample=counterexample)

        entry = outcome
        cuts, worst = maximize_residual(p, entry, rng, settings)
        if worst <= settings["certificate_tolerance"]:
            logger.debug(f"Grid point {base} certified after {round_index} round(s), residual {worst:.3e}")
            return GridOutcome("certified", base, round_index, entry=replace(entry, residual=max(entry.residual, worst)))
        sample = np.concatenate([sample, cuts])

    logger.warning(f"Cutting-plane cap reached at {base}")
    return GridOutcome("undecided", base, settings["cutting_plane_rounds"], "cutting-plane cap reached", entry=entry)


# Whole grid

def certification_grid(p: InequalityProblem, size: int) -> List[Optional[np.ndarray]]:
    """Uniform grid in the compactified box, nudged off f_0's jumps; None where that fails."""
    axis = (np.arange(size) + 0.5) / size
    step = 1.0 / size
    nudges = [sign * fraction * step for fraction in (0.1, 0.2, 0.3, 0.4, 0.5) for sign in (1.0, -1.0)]
    grid: List[Optional[np.ndarray]] = []
    for s in itertools.product(axis, repeat=p.k):
        s = np.asarray(s)
        t = p.from_unit(s)
        if not in_gamma(p, t):
            moved = None
            for j, nudge in itertools.product(range(p.k), nudges):
                trial = s.copy()
                trial[j] = np.clip(trial[j] + nudge, 0.0, 1.0)
                if in_gamma(p, p.from_unit(trial)):
                    moved = p.from_unit(trial)
                    break
            t = moved
        grid.append(t)
    return grid


@dataclass(frozen=True)
class CertificationResult:
    status: str  # certified | refuted | undecided
    certificate: Optional[Certificate] = None
    counterexample: Optional[Counterexample] = None
    witness: Optional[FarkasWitness] = None
    undecided: Tuple[Tuple[Tuple[float, ...], str], ...] = field(default=())

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status}
        data["certificate"] = self.certificate.to_json() if self.certificate else None
        data["counterexample"] = self.counterexample.to_json() if self.counterexample else None
        if self.witness is not None:
            data["farkas_witness"] = self.witness.to_json()
        if self.undecided:
            data["undecided_points"] = [{"base": list(base), "reason": reason} for base, reason in self.undecided]
        return data


async def build_certificate(p: InequalityProblem, settings: EngineSettingsDataType, seed: Optional[int] = None,
                            grid_size: Optional[int] = None) -> CertificationResult:
    """Certify every Γ-grid point; the first refuted point (in grid order) wins."""
    gamma = gamma_density(p)
    if not gamma.dense:
        raise PreconditionError(f"Gamma is not known to be dense: {gamma.reason}")
    size = settings["grid_size"] if grid_size is None else grid_size
    grid = certification_grid(p, size)
    sequences = np.random.SeedSequence(settings["seed"] if seed is None else seed).spawn(len(grid))
    semaphore = asyncio.Semaphore(max(1, settings["max_workers"]))
    logger.info(f"Certifying '{p.name or 'problem'}' on a {size}^{p.k} grid")

    async def run_point(t: Optional[np.ndarray], sequence: np.random.SeedSequence) -> GridOutcome:
        if t is None:
            return GridOutcome("undecided", (), 0, "no grid point in Gamma nearby")
        async with semaphore:
            return await asyncio.to_thread(certify_point, p, t, 1.0 / size, settings, np.random.default_rng(sequence))

    outcomes = await asyncio.gather(*(run_point(t, sequence) for t, sequence in zip(grid, sequences)))
    rounds = sum(outcome.rounds for outcome in outcomes)

    refuted = [outcome for outcome in outcomes if outcome.status == "refuted"]
    if refuted:
        first = refuted[0]
        logger.info(f"Certification refuted at {first.base} with violation {first.counterexample.violation:.6g}")
        return CertificationResult("refuted", counterexample=first.counterexample, witness=first.witness)

    entries = tuple(outcome.entry for outcome in outcomes if outcome.status == "certified")
    undecided = tuple((outcome.base, outcome.reason) for outcome in outcomes if outcome.status == "undecided")
    certificate = None
    if entries:
        certificate = Certificate(entries, max(entry.residual for entry in entries), rounds)
    status = "undecided" if undecided or certificate is None else "certified"
    logger.info(f"Certification {status}: {len(entries)} certified, {len(undecided)} undecided, {rounds} LP round(s)")
    return CertificationResult(status, certificate=certificate, undecided=undecided)


def recheck_certificate(p: InequalityProblem, certificate: Certificate, rng: np.random.Generator, count: int) -> float:
    """Worst residual of the stored coefficients on fresh (x, nearest grid t) pairs."""
    logger.warning("Certificate covers a finite grid of base points; off-grid t are checked at their nearest grid point")
    X = p.sample_box(rng, count)
    T = p.sample_box(rng, count)
    grid_units = p.to_unit(np.asarray(certificate.grid))
    nearest = np.argmin(((p.to_unit(T)[:, None, :] - grid_units[None, :, :]) ** 2).sum(axis=-1), axis=1)
    worst = -math.inf
    for index, entry in enumerate(certificate.entries):
        mask = nearest == index
        if np.any(mask):
            worst = max(worst, float(residual_values(p, entry, entry.anchor(p), X[mask]).max()))
    return worst
