from pathlib import Path
import math
import sys

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from generator_means.src.generator import build_generator, identity_generator  # noqa: E402
from generator_means.src.interval import Interval  # noqa: E402
from generator_means.src.means import WeightVector, qam, weighted_qam, weighted_qam_batch  # noqa: E402
from generator_means.src.primitives import AffinePrimitive, ExponentialPrimitive, PowerPrimitive  # noqa: E402
from utils.errors import ArityError, DomainError, WeightError  # noqa: E402

POSITIVE = Interval(0.0, math.inf)


def sample_generators():
    return [
        identity_generator(Interval(-10.0, 10.0)),
        build_generator(POSITIVE, [PowerPrimitive(2.0)]).restrict(Interval(0.1, 10.0)),
        build_generator(POSITIVE, [PowerPrimitive(-1.0)]).restrict(Interval(0.1, 10.0)),
        build_generator(Interval(-3.0, 3.0), [ExponentialPrimitive(1.0)]),
        build_generator(Interval(-1.0, 1.0), [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0)], [0.0]),
    ]


def check_examples() -> None:
    identity = identity_generator()
    square = build_generator(POSITIVE, [PowerPrimitive(2.0)])
    assert qam(identity, [1.0, 2.0, 3.0]) == 2.0
    assert abs(qam(square, [1.0, 2.0]) - math.sqrt(2.5)) < 1e-12
    assert abs(weighted_qam(identity, [1.0, 2.0], WeightVector.of([1.0, 3.0])) - 1.75) < 1e-15
    assert abs(weighted_qam(square, [1.0, 2.0], WeightVector.uniform(2)) - math.sqrt(2.5)) < 1e-12
    for f in sample_generators():
        c = float(f.domain.grid(7)[3])
        assert abs(qam(f, [c, c, c]) - c) <= 1e-12 * (1.0 + abs(c)), f
        assert weighted_qam(f, [c, f.domain.grid(7)[5], f.domain.grid(7)[1]], WeightVector.of([1.0, 0.0, 0.0])) == c


def check_errors() -> None:
    identity = identity_generator(Interval(0.0, 1.0))
    cases = [
        (lambda: qam(identity, []), ArityError),
        (lambda: qam(identity, [0.5, 2.0]), DomainError),
        (lambda: weighted_qam(identity, [0.5, 0.6], WeightVector.uniform(3)), ArityError),
        (lambda: WeightVector.of([0.0, 0.0]), WeightError),
        (lambda: WeightVector.of([1.0, -1.0]), WeightError),
    ]
    for call, error in cases:
        try:
            call()
        except error:
            continue
        raise RuntimeError(f"expected {error.__name__}")


def check_properties() -> None:
    rng = np.random.default_rng(11)
    for f in sample_generators():
        for _ in range(200):
            n = int(rng.integers(1, 6))
            x = f.domain.sample(rng, n).tolist()
            weights = WeightVector.of(rng.uniform(0.0, 1.0, n).tolist())
            mean = qam(f, x)
            # Internality
            assert min(x) <= mean <= max(x), (f, x, mean)
            # Scaling invariance, exact
            scaled = WeightVector.of([4.0 * w for w in weights.entries])
            assert weighted_qam(f, x, scaled) == weighted_qam(f, x, weights), (f, x)
            # Equal weights agree with the unweighted mean
            assert abs(weighted_qam(f, x, WeightVector.of([0.3] * n)) - mean) <= 1e-12 * (1.0 + abs(mean))
            # Monotone in each coordinate
            bumped = list(x)
            index = int(rng.integers(n))
            unit = float(f.domain.to_unit(x[index]))
            bumped[index] = max(x[index], float(f.domain.from_unit(unit + 0.05 * (1.0 - unit))))
            assert qam(f, bumped) >= mean - 1e-12 * (1.0 + abs(mean))


def check_batch_matches_scalar() -> None:
    rng = np.random.default_rng(13)
    for f in sample_generators():
        points = f.domain.sample(rng, (300, 3))
        weights = rng.uniform(0.0, 1.0, (300, 3))
        batch = weighted_qam_batch(f, points, weights)
        scalar = np.asarray([weighted_qam(f, row.tolist(), WeightVector.of(w.tolist())) for row, w in zip(points, weights)])
        assert np.allclose(batch, scalar, rtol=1e-9, atol=1e-9), f

    # Out-of-domain rows turn into nan rather than raising
    square = build_generator(POSITIVE, [PowerPrimitive(2.0)])
    batch = weighted_qam_batch(square, np.asarray([[1.0, 2.0], [-1.0, 2.0]]), np.ones((2, 2)))
    assert abs(batch[0] - math.sqrt(2.5)) < 1e-12 and math.isnan(batch[1])


def check_comparison_transfer() -> None:
    """Comparable means have generators with the same discontinuity set."""
    grid = np.linspace(-0.95, 0.95, 25)
    unit = Interval(-1.0, 1.0)
    f = build_generator(unit, [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0)], [0.0])
    g = build_generator(unit, [AffinePrimitive(1.0, 0.0), AffinePrimitive(3.0, 2.0)], [0.0])
    for a in grid:
        for b in grid:
            assert qam(f, [a, b]) <= qam(g, [a, b]) + 1e-12, (a, b)
    assert f.discontinuities() == g.discontinuities() == [0.0]

    h = build_generator(Interval(-3.0, 3.0), [ExponentialPrimitive(1.0)])
    linear = identity_generator(Interval(-3.0, 3.0))
    for a in np.linspace(-2.9, 2.9, 15):
        for b in np.linspace(-2.9, 2.9, 15):
            assert qam(linear, [a, b]) <= qam(h, [a, b]) + 1e-12
    assert linear.discontinuities() == h.discontinuities() == []


def run_smoke() -> None:
    check_examples()
    check_errors()
    check_properties()
    check_batch_matches_scalar()
    check_comparison_transfer()


def main() -> None:
    run_smoke()
    print("means smoke passed")


if __name__ == "__main__":
    main()
