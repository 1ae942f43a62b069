from copy import deepcopy
from dataclasses import replace
from pathlib import Path
import asyncio
import math
import sys

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from generator_means.src.generator import build_generator, identity_generator  # noqa: E402
from generator_means.src.interval import Interval  # noqa: E402
from generator_means.src.primitives import AffinePrimitive, ExponentialPrimitive  # noqa: E402
from inequality_engine.src.couplers import (  # noqa: E402
    Coupler,
    affine_coupler,
    mean_coupler,
    power_sum_coupler,
    product_coupler,
    sum_coupler,
)
from inequality_engine.src.evidence import evaluate_inequality, inequality_gap  # noqa: E402
from inequality_engine.src.problem_loader import load_problem, parse_coupler, parse_problem  # noqa: E402
from inequality_engine.src.problems import (  # noqa: E402
    build_problem,
    continuity_precheck,
    gamma_density,
    holder_problem,
    jensen_problem,
    minkowski_problem,
    psi_eval,
    reflect_problem,
)
from utils.errors import ArityError, DomainError, ProblemFormatError, RangeError, UnsupportedError  # noqa: E402

PROBLEM_FILES = PROJECT_ROOT / "problem_files"
BOX = [Interval(0.5, 4.0), Interval(0.5, 4.0)]
UNIT = Interval(-1.0, 1.0)


class FlatCoupler(Coupler):
    """Stand-in for a coupler that is strictly increasing in no coordinate."""

    def strictly_increasing_in(self, coordinate: int) -> bool:
        return False


def jump_generator(domain: Interval, at: float):
    return build_generator(domain, [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0)], [at])


def check_couplers() -> None:
    x = np.asarray([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(sum_coupler(2)(x), [3.0, 7.0])
    assert np.allclose(product_coupler(2)(x), [2.0, 12.0])
    assert np.allclose(mean_coupler(2)(x), [1.5, 3.5])
    assert np.allclose(affine_coupler(1.0, [2.0, 0.5])(x), [4.0, 9.0])
    assert np.allclose(power_sum_coupler(2, 2.0)(x), [math.sqrt(5.0), 5.0])
    reflected = product_coupler(2).reflected()
    assert np.allclose(reflected(-x), -product_coupler(2)(x))
    assert reflected.reflected() == product_coupler(2)

    assert sum_coupler(2).image(BOX) == Interval(1.0, 8.0)
    assert product_coupler(2).image(BOX) == Interval(0.25, 16.0)
    solved = sum_coupler(2).solve_coordinate([1.0, 2.0], 0, 4.5, Interval(0.5, 4.0))
    assert solved is not None and abs(solved - 2.5) < 1e-9
    assert sum_coupler(2).solve_coordinate([1.0, 2.0], 0, 100.0, Interval(0.5, 4.0)) is None

    for bad, error in (
        (lambda: product_coupler(2).check_box([Interval(-1.0, 1.0), Interval(0.5, 1.0)]), DomainError),
        (lambda: sum_coupler(2)(np.ones(3)), ArityError),
        (lambda: affine_coupler(0.0, [1.0, -1.0]), ValueError),
        (lambda: power_sum_coupler(2, 0.0), ValueError),
    ):
        try:
            bad()
        except error:
            continue
        raise RuntimeError(f"expected {error.__name__}")

    parsed = parse_coupler({"kind": "reflected", "base": {"kind": "affine", "c0": 1, "c": [1, 2]}}, 2, "phi")
    assert parsed == affine_coupler(1.0, [1.0, 2.0]).reflected()
    assert parse_coupler(parsed.to_json(), 2, "phi") == parsed  # type: ignore[arg-type]
    try:
        parse_coupler({"kind": "max"}, 2, "phi")
    except ProblemFormatError as e:
        assert e.field == "phi.kind"
    else:
        raise RuntimeError("unknown coupler kind was accepted")


def check_psi() -> None:
    chain = build_problem([identity_generator(), identity_generator(UNIT)], sum_coupler(1), sum_coupler(1))
    assert psi_eval(chain, np.asarray([0.25])) == 0.25

    minkowski = minkowski_problem(2.0, box=BOX)
    u, v = 2.0, 3.0
    assert abs(psi_eval(minkowski, np.asarray([u, v])) - (math.sqrt(u) + math.sqrt(v)) ** 2) < 1e-12

    exp = build_generator(Interval(-math.inf, math.inf), [ExponentialPrimitive(1.0)])
    jensen = jensen_problem(exp, box=[Interval(-2.0, 2.0), Interval(-2.0, 2.0)])
    assert abs(psi_eval(jensen, np.asarray([1.5, 3.0])) - math.sqrt(4.5)) < 1e-12

    # Separately increasing on sampled pairs
    rng = np.random.default_rng(17)
    for p in (minkowski, jensen, holder_problem([2.0, 2.0], box=BOX)):
        lo = np.asarray([hull.lo for hull in p.range_box])
        hi = np.asarray([hull.hi for hull in p.range_box])
        a = lo + (hi - lo) * rng.uniform(0.01, 0.99, (1000, 2))
        b = a + (hi - a) * rng.uniform(0.0, 0.9, (1000, 2))
        assert np.all(np.asarray(psi_eval(p, b)) >= np.asarray(psi_eval(p, a)) - 1e-12), p.name

    try:
        psi_eval(minkowski, np.asarray([100.0, 1.0]))
    except RangeError:
        pass
    else:
        raise RuntimeError("psi outside the range hull must raise RangeError")

    jumpy = build_problem([identity_generator(), jump_generator(UNIT, 0.0), identity_generator(UNIT)],
                          sum_coupler(2), sum_coupler(2))
    try:
        psi_eval(jumpy, np.asarray([0.5, 0.5]))
    except UnsupportedError:
        pass
    else:
        raise RuntimeError("psi with a discontinuous f_1 must raise UnsupportedError")


def check_prechecks() -> None:
    assert gamma_density(minkowski_problem(2.0, box=BOX)).dense

    outer_jump = jump_generator(Interval(-10.0, 10.0), 0.5)
    inner = [identity_generator(UNIT), identity_generator(UNIT)]
    with_jump = build_problem([outer_jump] + inner, sum_coupler(2), sum_coupler(2))
    report = gamma_density(with_jump)
    assert report.dense and report.coordinate == 1, report

    flat = replace(with_jump, Phi=FlatCoupler("sum", 2))
    assert gamma_density(flat).status == "unknown"

    assert continuity_precheck(minkowski_problem(2.0, box=BOX)).status == "consistent"

    jumpy = build_problem([identity_generator(), jump_generator(UNIT, 0.0), identity_generator(UNIT)],
                          sum_coupler(2), sum_coupler(2))
    precheck = continuity_precheck(jumpy)
    assert precheck.must_fail and precheck.generator == 1 and precheck.jump == 0.0
    assert precheck.to_json()["witness"] == {"j": 1, "t": 0.0}

    # f_0 jumps at 0.5, inside phi(I) = (-2, 2)
    precheck = continuity_precheck(with_jump)
    assert precheck.must_fail and precheck.generator == 0 and precheck.jump == 0.5

    # f_0 jump at 9 lies outside phi(I)
    far_jump = jump_generator(Interval(-10.0, 10.0), 9.0)
    assert continuity_precheck(build_problem([far_jump] + inner, sum_coupler(2), sum_coupler(2))).status == "consistent"

    different = build_problem([identity_generator()] + inner, sum_coupler(2), mean_coupler(2))
    assert continuity_precheck(different).status == "not_applicable"
    single = build_problem([identity_generator(), jump_generator(UNIT, 0.0)], sum_coupler(1), sum_coupler(1))
    assert continuity_precheck(single).status == "not_applicable"


def check_builders_and_reflection() -> None:
    p = minkowski_problem(0.5, box=[Interval(0.25, 16.0), Interval(0.25, 16.0)])
    lhs, rhs = evaluate_inequality(p, [[4.0, 1.0], [1.0, 4.0]])
    assert abs(lhs - 5.0) < 1e-12 and abs(rhs - 4.5) < 1e-12

    holder = holder_problem([2.0, 2.0], box=BOX)
    assert holder.phi == product_coupler(2) and holder.f0.domain == Interval(0.0, math.inf)

    # The reflected instance evaluates the converse inequality at -x
    rng = np.random.default_rng(19)
    base = minkowski_problem(2.0, box=BOX)
    mirror = reflect_problem(base)
    assert mirror.box == tuple(interval.reflected() for interval in BOX)
    for _ in range(50):
        points = base.sample_box(rng, 3)
        weights = rng.uniform(0.1, 1.0, 3)
        gap = inequality_gap(base, points, weights)
        assert abs(inequality_gap(mirror, -points, weights) + gap) <= 1e-9 * (1.0 + abs(gap))

    for bad, error in (
        (lambda: build_problem([identity_generator()], sum_coupler(1), sum_coupler(1)), ArityError),
        (lambda: build_problem([identity_generator()] + [identity_generator(UNIT)] * 2, sum_coupler(3), sum_coupler(3)),
         ArityError),
        (lambda: minkowski_problem(2.0, box=[Interval(-1.0, 1.0), Interval(0.5, 1.0)]), DomainError),
    ):
        try:
            bad()
        except error:
            continue
        raise RuntimeError(f"expected {error.__name__}")


async def check_loader() -> None:
    p = await load_problem(str(PROBLEM_FILES / "minkowski_p2.json"))
    assert p.k == 2 and p.name == "minkowski_p2" and p.box == tuple(BOX)
    assert parse_problem(p.to_json()) == p  # type: ignore[arg-type]

    for name in ("minkowski_p3", "minkowski_p05", "minkowski_p1", "holder_cauchy_schwarz",
                 "jensen_exp", "jensen_log", "identity_chain", "minkowski_jump"):
        loaded = await load_problem(str(PROBLEM_FILES / f"{name}.json"))
        assert loaded.name == name

    p05 = await load_problem(str(PROBLEM_FILES / "minkowski_p05.json"))
    assert p05.reference_points == ((4.0, 1.0), (1.0, 4.0))
    assert parse_problem(p05.to_json()) == p05  # type: ignore[arg-type]
    try:
        parse_problem(dict(p05.to_json(), reference_points=[[40.0, 1.0]]))  # type: ignore[arg-type]
    except DomainError:
        pass
    else:
        raise RuntimeError("a reference point outside the box must be rejected")

    valid = p.to_json()
    for mutate, field in (
        (lambda d: d.update(k=0), "k"),
        (lambda d: d.update(generators=d["generators"][:2]), "generators"),
        (lambda d: d.pop("Phi"), "Phi"),
        (lambda d: d.update(box=[[0.5, 4]]), "box"),
        (lambda d: d["generators"][1].update(pieces=[]), "generators[1].pieces"),
        (lambda d: d.update(reference_points=[[1.0]]), "reference_points"),
        (lambda d: d.update(reference_points=["ab"]), "reference_points"),
    ):
        data = deepcopy(valid)
        mutate(data)
        try:
            parse_problem(data)
        except ProblemFormatError as e:
            assert e.field == field, (e.field, field)
        else:
            raise RuntimeError(f"malformed problem accepted (field {field})")


async def run_smoke() -> None:
    check_couplers()
    check_psi()
    check_prechecks()
    check_builders_and_reflection()
    await check_loader()


def main() -> None:
    asyncio.run(run_smoke())
    print("problems smoke passed")


if __name__ == "__main__":
    main()
