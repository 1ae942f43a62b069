from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging
import numpy as np

from utils.errors import ArityError, SolverError

logger = logging.getLogger("Simplex")

PIVOT_TOLERANCE = 1e-11
FEASIBILITY_TOLERANCE = 1e-10  # phase-one optimum on row-normalized data
VERIFY_TOLERANCE = 1e-9
REFACTOR_INTERVAL = 25


@dataclass(frozen=True)
class LPResult:
    """Outcome of `lp_feasible`: a primal point a or a normalized Farkas dual λ."""
    feasible: bool
    point: Optional[np.ndarray]
    dual: Optional[np.ndarray]
    iterations: int


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    others = np.arange(len(tableau)) != row
    tableau[others] -= np.outer(tableau[others, col], tableau[row])


def _refactor(tableau: np.ndarray, original: np.ndarray, basis: List[int]) -> None:
    """Rebuild the tableau as B⁻¹ [A | b] from the original data."""
    try:
        tableau[:] = np.linalg.solve(original[:, basis], original)
    except np.linalg.LinAlgError:
        logger.debug(f"Basis {basis} is numerically singular; keeping the pivoted tableau")


def _run_simplex(tableau: np.ndarray, original: np.ndarray, basis: List[int], cost: np.ndarray,
                 max_iterations: int) -> int:
    """Minimize cost over the tableau with Bland's rule; returns the pivot count."""
    iterations = 0
    while True:
        reduced = cost - cost[basis] @ tableau[:, :-1]
        candidates = np.flatnonzero(reduced < -PIVOT_TOLERANCE)
        if candidates.size == 0:
            return iterations
        col = int(candidates[0])
        column = tableau[:, col]
        positive = column > PIVOT_TOLERANCE
        if not np.any(positive):
            raise SolverError(f"Objective unbounded below at column {col}")
        ratios = np.full(len(tableau), np.inf)
        ratios[positive] = np.maximum(tableau[positive, -1], 0.0) / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tableau, row, col)
        basis[row] = col
        iterations += 1
        if iterations % REFACTOR_INTERVAL == 0:
            _refactor(tableau, original, basis)
        if iterations > max_iterations:
            raise SolverError(f"Simplex exceeded {max_iterations} pivots")


def _solve_standard(rows: np.ndarray, rhs: np.ndarray, cost: np.ndarray,
                    max_iterations: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """min cost·x over {[rows | I] x = rhs, x ≥ 0} from the slack basis (rhs ≥ 0).

    Returns the basic solution, the simplex multipliers and the pivot count.
    Both are solved from the original basis columns, not read off the tableau.
    """
    count, width = rows.shape
    original = np.hstack([rows, np.eye(count), rhs[:, None]])
    tableau = original.copy()
    basis = list(range(width, width + count))
    iterations = _run_simplex(tableau, original, basis, cost, max_iterations)
    B = original[:, basis]
    values = np.zeros(width + count)
    try:
        values[basis] = np.linalg.solve(B, rhs)
        multipliers = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError as e:
        raise SolverError(f"Final basis is singular: {e}")
    return values, multipliers, iterations


def lp_feasible(G: Sequence[Sequence[float]], h: Sequence[float], max_iterations: Optional[int] = None) -> LPResult:
    """Decide {a ≥ 0 : G a ≥ h}; otherwise return λ ≥ 0, Σλ = 1, λᵀG ≤ 0, λᵀh > 0.

    Dense two-phase simplex on the dual side, so the tableau has k + 1 rows
    however many constraints are sampled. Rows are normalized by their largest
    entry. Phase one maximizes λᵀh over {λ ≥ 0, λᵀG ≤ 0, Σλ ≤ 1}: a positive
    optimum is the Farkas certificate, otherwise its multipliers are a feasible
    a. Phase two picks the feasible a of smallest coefficient sum. Both
    branches are verified by substitution.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    m, k = G.shape
    if m < 1 or k < 1:
        raise ArityError(f"LP needs at least one row and one column, got {m}x{k}")
    if len(h) != m:
        raise ArityError(f"Right-hand side has {len(h)} entries for {m} rows")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
        raise ValueError("LP data must be finite")

    scale = np.maximum(np.abs(G).max(axis=1), np.abs(h))
    scale[scale == 0] = 1.0
    Gs = G / scale[:, None]
    hs = h / scale
    if max_iterations is None:
        max_iterations = 50 * (m + k + 1)

    # Phase one: rows λᵀG + μ = 0 and Σλ + ν = 1.
    rows = np.vstack([Gs.T, np.ones((1, m))])
    rhs = np.concatenate([np.zeros(k), [1.0]])
    cost = np.concatenate([-hs, np.zeros(k + 1)])
    values, multipliers, iterations = _solve_standard(rows, rhs, cost, max_iterations)
    infeasibility = float(hs @ values[:m])
    logger.debug(f"Phase one on {m}x{k} finished after {iterations} pivots, infeasibility {infeasibility:.3e}")

    if infeasibility > FEASIBILITY_TOLERANCE:
        dual = np.clip(values[:m], 0.0, None) / scale
        total = dual.sum()
        if not total > 0:
            raise SolverError("Phase one ended infeasible but produced a zero dual")
        dual /= total
        slack = dual @ G
        gap = float(dual @ h)
        tolerance = VERIFY_TOLERANCE * max(1.0, float(np.abs(G).max()))
        if slack.max() > tolerance or not gap > 0:
            raise SolverError(f"Farkas dual failed verification: max(λᵀG) = {slack.max():.3e}, λᵀh = {gap:.3e}")
        return LPResult(False, None, dual, iterations)

    point = np.clip(-multipliers[:k], 0.0, None)

    # Phase two: max λᵀh over {λ ≥ 0, λᵀG ≤ 1}; its multipliers minimize Σa.
    try:
        _, multipliers, more = _solve_standard(Gs.T.copy(), np.ones(k), np.concatenate([-hs, np.zeros(k)]),
                                               max_iterations)
        iterations += more
        smallest = np.clip(-multipliers, 0.0, None)
        if (Gs @ smallest - hs).min() >= -VERIFY_TOLERANCE:
            point = smallest
        else:
            logger.debug("Phase-two point missed a row; keeping the phase-one point")
    except SolverError as e:
        logger.debug(f"Phase two gave up ({e}); keeping the phase-one point")

    residual = Gs @ point - hs
    if residual.min() < -VERIFY_TOLERANCE:
        raise SolverError(f"Primal point failed verification: min(Ga - h) = {residual.min():.3e} on normalized rows")
    return LPResult(True, point, None, iterations)
