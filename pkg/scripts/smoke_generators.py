from pathlib import Path
from typing import Optional
import math
import sys

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from generator_means.src.generator import (  # noqa: E402
    GeneratorFn,
    build_generator,
    compose,
    discontinuities,
    eval_with_limits,
    gen_inverse,
    identity_generator,
    reflect,
    validate_generator,
)
from generator_means.src.generator_loader import parse_generator  # noqa: E402
from generator_means.src.interval import Interval  # noqa: E402
from generator_means.src.primitives import (  # noqa: E402
    AffinePrimitive,
    ComposedPrimitive,
    ExponentialPrimitive,
    LogarithmPrimitive,
    PowerPrimitive,
)
from utils.errors import (  # noqa: E402
    CompositionError,
    DomainError,
    GeneratorInvariantError,
    ProblemFormatError,
    RangeError,
)

POSITIVE = Interval(0.0, math.inf)
UNIT = Interval(-1.0, 1.0)
RANDOM_GENERATORS = 50
COMPOSABLE_PAIRS = 20


def jump_at_zero():
    """x on (-1, 0), value 0.5 at 0, x + 1 on (0, 1)."""
    return build_generator(UNIT, [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0)], [0.0])


def check_limits_and_inverse() -> None:
    f = identity_generator(UNIT)
    assert eval_with_limits(f, 0.5) == (0.5, 0.5, 0.5)

    jump = jump_at_zero()
    assert eval_with_limits(jump, 0.0) == (0.0, 0.5, 1.0), eval_with_limits(jump, 0.0)
    assert eval_with_limits(jump, -0.5) == (-0.5, -0.5, -0.5)
    try:
        eval_with_limits(jump, 1.5)
    except DomainError:
        pass
    else:
        raise RuntimeError("eval outside the domain must raise DomainError")

    inv = gen_inverse(jump)
    assert inv(0.25) == 0.0
    assert abs(inv(-0.5) + 0.5) < 1e-15
    assert abs(inv(1.5) - 0.5) < 1e-15
    try:
        inv(2.5)
    except RangeError:
        pass
    else:
        raise RuntimeError("inverse outside the range hull must raise RangeError")

    square = build_generator(POSITIVE, [PowerPrimitive(2.0)])
    assert abs(gen_inverse(square)(2.5) - math.sqrt(2.5)) < 1e-12


def check_inverse_laws() -> None:
    rng = np.random.default_rng(7)
    generators = [
        identity_generator(UNIT),
        jump_at_zero(),
        build_generator(POSITIVE, [PowerPrimitive(2.0)]),
        build_generator(POSITIVE, [PowerPrimitive(-1.0)]),
        build_generator(Interval(-3.0, 3.0), [ExponentialPrimitive(1.0)]),
        build_generator(POSITIVE, [LogarithmPrimitive(math.e)]),
        build_generator(Interval(-2.0, 2.0), [AffinePrimitive(1.0, 0.0), PowerPrimitive(3.0)], [1.0],
                        jump_values=[1.0]),
    ]
    for f in generators:
        report = validate_generator(f)
        assert report.ok, report.to_json()
        x = f.domain.sample(rng, 1000)
        # Left-inverse law
        back = f.inverse.values(f.values(x))
        assert np.all(np.abs(back - x) <= 1e-9 * (1.0 + np.abs(x))), f"left inverse failed for {f}"
        # Right-inverse law on the range
        u = f.values(x)
        again = f.values(f.inverse.values(u))
        assert np.all(np.abs(again - u) <= 1e-9 * (1.0 + np.abs(u))), f"right inverse failed for {f}"
        # Monotone inverse
        hull = f.range_hull
        grid = np.sort(hull.sample(rng, 500))
        assert np.all(np.diff(f.inverse.values(grid)) >= 0), f"inverse not monotone for {f}"

    # Order equivalences at the jump, with exact comparisons
    jump = jump_at_zero()
    inv = jump.inverse
    left, _, right = eval_with_limits(jump, 0.0)
    for u in (-0.5, -1e-9, 0.0, 0.5, 1.0, 1.0 + 1e-9, 1.5):
        assert (inv(u) < 0.0) == (u < left), u
        assert (inv(u) <= 0.0) == (u <= right), u
        assert (inv(u) > 0.0) == (u > right), u
        assert (inv(u) >= 0.0) == (u >= left), u


def random_piece(rng: np.random.Generator, level: float, at: float, width: float):
    """Affine or shifted exponential piece passing through (at, level)."""
    if rng.random() < 0.5:
        slope = float(rng.uniform(0.2, 3.0)) * 4.0 / width
        return AffinePrimitive(slope, level - slope * at)
    rate = float(rng.uniform(0.2, 1.0)) * 4.0 / width
    return ComposedPrimitive(AffinePrimitive(1.0, level - 1.0),
                             ComposedPrimitive(ExponentialPrimitive(rate), AffinePrimitive(1.0, -at)))


def random_generator(rng: np.random.Generator, domain: Interval = Interval(-2.0, 2.0),
                     jumps: Optional[int] = None) -> GeneratorFn:
    """0-3 jumps of random height; each jump value sits at a limit or mid-gap."""
    count = int(rng.integers(0, 4)) if jumps is None else jumps
    slots = domain.lo + domain.width * np.linspace(0.1, 0.9, 9)
    breakpoints = np.sort(rng.choice(slots, count, replace=False))
    pieces = [random_piece(rng, float(rng.normal()), domain.midpoint, domain.width)]
    jump_values = []
    for t in breakpoints:
        left = float(pieces[-1].value(t))
        right = left + float(rng.uniform(0.05, 1.0))
        pieces.append(random_piece(rng, right, float(t), domain.width))
        jump_values.append(left + float(rng.choice([0.0, 0.5, 1.0])) * (right - left))
    return build_generator(domain, pieces, breakpoints.tolist(), jump_values)


def check_order_equivalences(f: GeneratorFn, u: float, x: float) -> None:
    inv = float(f.inverse(u))
    left, _, right = eval_with_limits(f, x)
    assert (inv < x) == (u < left), (f, u, x, inv)
    assert (inv <= x) == (u <= right), (f, u, x, inv)
    assert (inv > x) == (u > right), (f, u, x, inv)
    assert (inv >= x) == (u >= left), (f, u, x, inv)


def check_random_generators() -> None:
    rng = np.random.default_rng(11)
    jumps_seen = 0
    for _ in range(RANDOM_GENERATORS):
        f = random_generator(rng)
        jumps_seen += len(f.discontinuities())
        x = f.domain.sample(rng, 1000)
        back = f.inverse.values(f.values(x))
        assert np.all(np.abs(back - x) <= 1e-9 * (1.0 + np.abs(x))), f"left inverse failed for {f}"

        # Both sides of every gap, one ulp out, at the limits and inside
        for t, left, right, v in zip(f.breakpoints, f.left_limits, f.right_limits, f.jump_values):
            for u in (np.nextafter(left, -math.inf), left, 0.5 * (left + right), v, right, np.nextafter(right, math.inf)):
                check_order_equivalences(f, float(u), t)

        # Random pairs away from ties
        xs = f.domain.sample(rng, 100)
        us = f.range_hull.sample(rng, 100)
        for x_value, u in zip(xs, us):
            if abs(float(f.inverse(u)) - x_value) > 1e-6:
                check_order_equivalences(f, float(u), float(x_value))
    assert jumps_seen >= RANDOM_GENERATORS, f"only {jumps_seen} jumps across the random generators"


def check_random_compositions() -> None:
    rng = np.random.default_rng(13)
    for index in range(COMPOSABLE_PAIRS):
        g = random_generator(rng, jumps=index % 4)
        hull = g.range_hull
        f = random_generator(rng, Interval(hull.lo - 1.0, hull.hi + 1.0))
        fg = compose(f, g)

        x = g.domain.sample(rng, 1000)
        expected = f.values(g.values(x))
        assert np.all(np.abs(fg.values(x) - expected) <= 1e-9 * (1.0 + np.abs(expected))), f"f∘g values for pair {index}"

        u = fg.range_hull.grid(1000)
        chained = g.inverse.values(f.inverse.values(u))
        assert np.all(np.abs(fg.inverse.values(u) - chained) <= 1e-9), f"inverse of f∘g for pair {index}"


def check_compose_and_reflect() -> None:
    f = identity_generator(POSITIVE)
    g = identity_generator(POSITIVE)
    fg = compose(f, g)
    xs = POSITIVE.grid(50)
    assert np.allclose(fg.values(xs), xs)

    square = build_generator(POSITIVE, [PowerPrimitive(2.0)])
    shift = build_generator(POSITIVE, [AffinePrimitive(1.0, 1.0)])
    composed = compose(square, shift)
    assert abs(composed.inverse(4.0) - 1.0) < 1e-12
    u = composed.range_hull.sample(np.random.default_rng(3), 200)
    assert np.allclose(composed.inverse.values(u), shift.inverse.values(square.inverse.values(u)), rtol=1e-9, atol=1e-9)

    jump = jump_at_zero()
    with_identity = compose(jump, identity_generator(UNIT))
    grid = jump.range_hull.grid(1000)
    assert np.allclose(with_identity.inverse.values(grid), jump.inverse.values(grid), atol=1e-12)
    assert discontinuities(with_identity) == [0.0]

    try:
        compose(square, identity_generator(UNIT))
    except CompositionError:
        pass
    else:
        raise RuntimeError("composing onto a smaller domain must raise CompositionError")

    assert np.allclose(reflect(identity_generator(UNIT)).values(UNIT.grid(20)), UNIT.grid(20))
    reflected_square = reflect(square)
    assert reflected_square.domain == Interval(-math.inf, 0.0)
    ys = np.sort(reflected_square.domain.sample(np.random.default_rng(5), 200))
    assert np.all(np.diff(reflected_square.values(ys)) > 0)
    assert np.allclose(reflected_square.values(ys), -ys ** 2)

    twice = reflect(reflect(jump))
    grid = UNIT.grid(1000)
    assert np.array_equal(twice.values(grid), jump.values(grid))
    assert twice.breakpoints == jump.breakpoints and twice.jump_values == jump.jump_values


def check_discontinuities_and_validation() -> None:
    assert discontinuities(identity_generator()) == []
    assert discontinuities(jump_at_zero()) == [0.0]
    staircase = build_generator(UNIT, [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0), AffinePrimitive(1.0, 2.0)],
                                [-0.5, 0.5])
    assert discontinuities(staircase) == [-0.5, 0.5]
    # A breakpoint with matching limits is not a discontinuity
    kink = build_generator(Interval(-2.0, 2.0), [AffinePrimitive(1.0, 0.0), AffinePrimitive(2.0, -1.0)], [1.0])
    assert discontinuities(kink) == []

    try:
        build_generator(UNIT, [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, -5.0)], [0.0], jump_values=[0.0])
    except GeneratorInvariantError as e:
        first = e.report.first
        assert first.invariant == "jump_order" and first.breakpoint == 0, e.report.to_json()
        assert "f_+(0.0) = -5.0 < v = 0.0" in first.message, first.message
    else:
        raise RuntimeError("a falling jump must fail validation")

    for bad in (lambda: PowerPrimitive(0.0), lambda: ExponentialPrimitive(0.0),
                lambda: LogarithmPrimitive(1.0), lambda: AffinePrimitive(-1.0, 0.0)):
        try:
            bad()
        except ValueError:
            continue
        raise RuntimeError("degenerate primitive parameters must be rejected")


def check_loader() -> None:
    f = parse_generator({"domain": [0, "inf"], "pieces": [{"kind": "power", "params": {"exponent": 2}}]})
    assert f.domain == POSITIVE and abs(f(3.0) - 9.0) < 1e-12

    jump = parse_generator({
        "domain": [-1, 1],
        "pieces": [{"kind": "affine", "params": {"slope": 1}}, {"kind": "affine", "params": {"slope": 1, "intercept": 1}}],
        "breakpoints": [0],
    })
    assert jump.jump_values == (0.5,)
    assert parse_generator(jump.to_json()) == jump

    for data, field in (
        ({"pieces": []}, "generator"),
        ({"domain": [0, 1], "pieces": [{"kind": "sine"}]}, "generator.pieces[0].kind"),
        ({"domain": [0, 1], "pieces": [{"kind": "power", "params": {}}]}, "generator.pieces[0].params"),
        ({"domain": [1, 0], "pieces": [{"kind": "identity"}]}, "generator.domain"),
    ):
        try:
            parse_generator(data)  # type: ignore[arg-type]
        except ProblemFormatError as e:
            assert e.field == field, (e.field, field)
        else:
            raise RuntimeError(f"malformed generator {data} was accepted")


def run_smoke() -> None:
    check_limits_and_inverse()
    check_inverse_laws()
    check_random_generators()
    check_random_compositions()
    check_compose_and_reflect()
    check_discontinuities_and_validation()
    check_loader()


def main() -> None:
    run_smoke()
    print("generators smoke passed")


if __name__ == "__main__":
    main()
