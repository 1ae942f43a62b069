from itertools import combinations
from pathlib import Path
import sys

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from inequality_engine.src.simplex import lp_feasible  # noqa: E402
from utils.errors import ArityError  # noqa: E402

RANDOM_LPS = 100
SHIFT = 1e-6


def vertex_oracle(G: np.ndarray, h: np.ndarray, tolerance: float = 1e-9) -> bool:
    """Whether {a >= 0, Ga >= h} is nonempty, by enumerating its vertices.

    The set is pointed, so it is nonempty iff some regular k-subset of the
    constraints, taken as equalities, yields a point satisfying every row.
    """
    m, k = G.shape
    rows = np.vstack([G, np.eye(k)])
    rhs = np.concatenate([h, np.zeros(k)])
    norms = np.maximum(np.abs(rows).max(axis=1), np.abs(rhs))
    norms[norms == 0] = 1.0
    subsets = np.asarray(list(combinations(range(m + k), k)))
    A = rows[subsets]
    b = rhs[subsets]
    regular = np.abs(np.linalg.det(A)) > 1e-12
    if not np.any(regular):
        return False
    vertices = np.linalg.solve(A[regular], b[regular][..., None])[..., 0]
    residuals = (vertices @ rows.T - rhs) / norms
    return bool(np.any(residuals.min(axis=1) >= -tolerance))


def borderline(G: np.ndarray, h: np.ndarray) -> bool:
    """Loosening and tightening every row by SHIFT changes the answer."""
    shift = SHIFT * np.maximum(np.abs(G).max(axis=1), np.abs(h))
    return vertex_oracle(G, h - shift) != vertex_oracle(G, h + shift)


def check_against_oracle() -> None:
    rng = np.random.default_rng(20240611)
    checked = feasible_count = 0
    for _ in range(RANDOM_LPS):
        k = int(rng.integers(1, 4))
        m = int(rng.integers(1, 11))
        G = rng.normal(size=(m, k))
        h = rng.normal(size=m)
        if borderline(G, h):
            continue
        expected = vertex_oracle(G, h)
        result = lp_feasible(G, h)
        checked += 1
        assert result.feasible == expected, (G.tolist(), h.tolist(), expected)
        if result.feasible:
            feasible_count += 1
            assert np.all(result.point >= 0)
            assert np.all(G @ result.point - h >= -1e-9 * np.maximum(1.0, np.abs(G).max(axis=1)))
        else:
            lam = result.dual
            assert np.all(lam >= 0) and abs(lam.sum() - 1.0) < 1e-12
            assert np.all(lam @ G <= 1e-9 * max(1.0, float(np.abs(G).max())))
            assert lam @ h > 0
    assert checked >= 90, f"too many borderline instances: only {checked} checked"
    assert 0 < feasible_count < checked, f"degenerate sample: {feasible_count}/{checked} feasible"


def check_small_cases() -> None:
    # a >= 0 with a_1 + a_2 >= 1 and a_1 - a_2 >= 0: phase two returns the smallest sum
    result = lp_feasible([[1.0, 1.0], [1.0, -1.0]], [1.0, 0.0])
    assert result.feasible and abs(result.point.sum() - 1.0) < 1e-12, result

    # a >= 2 and -a >= -1 cannot both hold
    result = lp_feasible([[1.0], [-1.0]], [2.0, -1.0])
    assert not result.feasible
    lam = result.dual
    assert lam[0] - lam[1] <= 1e-12 and 2.0 * lam[0] - lam[1] > 0, lam

    # Positive right-hand side on a non-positive row: a single-row certificate
    result = lp_feasible([[-1.0, -2.0]], [0.5])
    assert not result.feasible and np.allclose(result.dual, [1.0])

    # Duplicated and zero rows are harmless
    result = lp_feasible([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]], [1.0, 1.0, 0.0])
    assert result.feasible and abs(result.point[0] - 1.0) < 1e-12 and result.point[1] == 0.0

    # Wildly scaled rows are normalized before pivoting
    result = lp_feasible([[1e8, 0.0], [0.0, 1e-8]], [1e8, 1e-8])
    assert result.feasible and np.allclose(result.point, [1.0, 1.0])

    for G, h in (([], []), ([[1.0, 2.0]], [1.0, 2.0])):
        try:
            lp_feasible(G, h)
        except ArityError:
            continue
        raise RuntimeError(f"malformed LP {G}, {h} was accepted")


def check_many_rows() -> None:
    # Thousands of rows around a known point, one of them tight
    rng = np.random.default_rng(7)
    G = rng.normal(size=(3000, 3))
    target = np.array([0.5, 1.0, 2.0])
    h = G @ target - rng.uniform(0.0, 1e-3, size=3000)
    h[0] = G[0] @ target
    scale = np.maximum(np.abs(G).max(axis=1), np.abs(h))
    result = lp_feasible(G, h)
    assert result.feasible, result
    assert np.all(result.point >= 0) and np.all(G @ result.point - h >= -1e-9 * scale)

    # Pushing the tight row one unit further leaves no room
    h[0] += 1.0
    result = lp_feasible(G, h)
    assert not result.feasible
    lam = result.dual
    assert np.all(lam @ G <= 1e-9 * float(np.abs(G).max())) and lam @ h > 0 and lam[0] > 0
    assert np.count_nonzero(lam) <= G.shape[1] + 1


def run_smoke() -> None:
    check_small_cases()
    check_many_rows()
    check_against_oracle()


def main() -> None:
    run_smoke()
    print("simplex smoke passed")


if __name__ == "__main__":
    main()
