from typing import Callable, List, Optional, Tuple
import asyncio
import logging
import numpy as np

from inequality_engine.engine_types import EngineSettingsDataType
from inequality_engine.src.evidence import Counterexample, gap_batch, make_counterexample
from inequality_engine.src.problems import InequalityProblem, PrecheckReport

logger = logging.getLogger("Falsifier")

CHUNK_SIZE = 4096
CLIMB_STARTS = 4
SEEDED_CANDIDATES = 256
CLIMB_INITIAL_STEP = 0.1
CLIMB_FINAL_STEP = 1e-8

Objective = Callable[[np.ndarray], np.ndarray]


def hill_climb(objective: Objective, starts: np.ndarray, steps: int,
               initial: float = CLIMB_INITIAL_STEP, final: float = CLIMB_FINAL_STEP) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinate-wise best-improvement ascent in the unit cube, one move per step.

    The step shrinks geometrically from `initial` to `final`; every start climbs
    independently and all moves of a step are evaluated in one batch.
    """
    current = np.array(starts, dtype=float)
    count, dim = current.shape
    values = np.asarray(objective(current), dtype=float)
    eye = np.eye(dim)
    for step in np.geomspace(initial, final, max(steps, 1)):
        moves = np.concatenate([eye * step, -eye * step])
        candidates = np.clip(current[:, None, :] + moves[None, :, :], 0.0, 1.0)
        candidate_values = np.asarray(objective(candidates.reshape(-1, dim)), dtype=float).reshape(count, 2 * dim)
        best = candidate_values.argmax(axis=1)
        best_values = candidate_values[np.arange(count), best]
        improved = best_values > values
        current[improved] = candidates[improved, best[improved]]
        values[improved] = best_values[improved]
    return current, values


def _dimension(p: InequalityProblem, n: int) -> int:
    return n * p.k + n


def _decode(p: InequalityProblem, z: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split unit-cube vectors into (points, weights) with points mapped into the box."""
    units = z[..., :n * p.k].reshape(z.shape[:-1] + (n, p.k))
    return p.from_unit(units), np.clip(z[..., n * p.k:], 0.0, 1.0)


def _encode(p: InequalityProblem, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    return np.concatenate([np.ravel(p.to_unit(points)), weights / weights.max()])


def violation_objective(p: InequalityProblem, n: int) -> Objective:
    def objective(z: np.ndarray) -> np.ndarray:
        out = np.empty(len(z))
        for start in range(0, len(z), CHUNK_SIZE):
            chunk = z[start:start + CHUNK_SIZE]
            points, weights = _decode(p, chunk, n)
            valid = weights.sum(axis=-1) > 0
            gap = gap_batch(p, points, np.where(valid[:, None], weights, 1.0))
            out[start:start + CHUNK_SIZE] = np.where(valid, gap, -np.inf)
        return out
    return objective


def _verified(p: InequalityProblem, z: np.ndarray, n: int, tolerance: float, source: str) -> Optional[Counterexample]:
    points, weights = _decode(p, z, n)
    if not weights.sum() > 0:
        return None
    counterexample = make_counterexample(p, points, weights / weights.sum(), source)
    return counterexample if counterexample.violation > tolerance else None


def jump_candidates(p: InequalityProblem, precheck: PrecheckReport, rng: np.random.Generator, count: int) -> np.ndarray:
    """Unit-cube candidates straddling the jump named by a must_fail precheck.

    All rows share the coordinates off the jump axis, so those means are exact
    and the violation comes from the jump alone.
    """
    n = p.k + 1
    z = rng.uniform(0.0, 1.0, (count, _dimension(p, n)))
    units = z[:, :n * p.k].reshape(count, n, p.k)
    units[:] = units[:, :1, :]
    for c in range(count):
        if precheck.generator:
            axis = precheck.generator - 1
            center = float(p.box[axis].to_unit(precheck.jump))
        else:
            axis = int(rng.integers(p.k))
            base = p.from_unit(units[c, 0])
            x0 = p.phi.solve_coordinate(base, axis, float(precheck.jump), p.box[axis])
            if x0 is None:
                continue
            center = float(p.box[axis].to_unit(x0))
        spread = 10.0 ** rng.uniform(-4.0, -1.0)
        offsets = rng.uniform(0.0, 1.0, n) * spread
        signs = np.where(rng.uniform(0.0, 1.0, n) < 0.5, -1.0, 1.0)
        signs[:2] = (-1.0, 1.0)
        units[c, :, axis] = np.clip(center + signs * offsets, 0.0, 1.0)
    z[:, :n * p.k] = units.reshape(count, -1)
    return z


def search_restart(p: InequalityProblem, trials: int, settings: EngineSettingsDataType,
                   rng: np.random.Generator, precheck: Optional[PrecheckReport] = None) -> Optional[Counterexample]:
    """One restart: random (k+1)-point candidates, then hill climbing from the best few."""
    n = p.k + 1
    objective = violation_objective(p, n)
    z = rng.uniform(0.0, 1.0, (max(trials, 1), _dimension(p, n)))
    if precheck is not None and precheck.must_fail:
        seeded = min(len(z) // 2 + 1, SEEDED_CANDIDATES)
        z[:seeded] = jump_candidates(p, precheck, rng, seeded)
    values = objective(z)
    top = np.argsort(-values, kind="stable")[:CLIMB_STARTS]
    climbed, climbed_values = hill_climb(objective, z[top], settings["hill_climb_steps"])
    best = int(np.argmax(climbed_values))
    logger.debug(f"Restart best violation {climbed_values[best]:.3e} after {len(z)} trials")
    if not climbed_values[best] > settings["violation_tolerance"]:
        return None
    return _verified(p, climbed[best], n, settings["violation_tolerance"], "falsifier")


def climb_counterexample(p: InequalityProblem, counterexample: Counterexample,
                         settings: EngineSettingsDataType) -> Counterexample:
    """Local hill climb from an existing (possibly weak) counterexample."""
    n = len(counterexample.points)
    objective = violation_objective(p, n)
    start = _encode(p, np.asarray(counterexample.points), np.asarray(counterexample.weights))
    climbed, values = hill_climb(objective, start[None, :], settings["hill_climb_steps"])
    if not values[0] > counterexample.violation:
        return counterexample
    improved = _verified(p, climbed[0], n, counterexample.violation, counterexample.source)
    return improved if improved is not None else counterexample


def _split_budget(budget: int, restarts: int) -> List[int]:
    share, extra = divmod(budget, restarts)
    return [share + (1 if index < extra else 0) for index in range(restarts)]


async def falsify(p: InequalityProblem, settings: EngineSettingsDataType, budget: Optional[int] = None,
                  seed: Optional[int] = None, precheck: Optional[PrecheckReport] = None) -> Optional[Counterexample]:
    """Search for a counterexample; None is evidence that the inequality holds, never proof."""
    budget = settings["falsify_budget"] if budget is None else budget
    restarts = max(1, min(settings["falsify_restarts"], budget))
    sequences = np.random.SeedSequence(settings["seed"] if seed is None else seed).spawn(restarts)
    semaphore = asyncio.Semaphore(max(1, settings["max_workers"]))
    logger.info(f"Falsifying '{p.name or 'problem'}' with {budget} trials over {restarts} restarts")

    async def run_restart(trials: int, sequence: np.random.SeedSequence) -> Optional[Counterexample]:
        async with semaphore:
            return await asyncio.to_thread(search_restart, p, trials, settings, np.random.default_rng(sequence), precheck)

    results = await asyncio.gather(*(run_restart(trials, sequence)
                                     for trials, sequence in zip(_split_budget(budget, restarts), sequences)))
    found = [result for result in results if result is not None]
    if not found:
        logger.info("No counterexample found")
        return None
    best = max(found, key=lambda counterexample: counterexample.violation)
    logger.info(f"Counterexample found with violation {best.violation:.6g}")
    return best
