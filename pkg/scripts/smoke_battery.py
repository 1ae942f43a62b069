from pathlib import Path
import asyncio
import math
import sys

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from generator_means.src.generator import build_generator, identity_generator  # noqa: E402
from generator_means.src.interval import Interval  # noqa: E402
from generator_means.src.primitives import (  # noqa: E402
    AffinePrimitive,
    ComposedPrimitive,
    ExponentialPrimitive,
    LogarithmPrimitive,
    PowerPrimitive,
    ReflectedPrimitive,
)
from inequality_engine.src.concavity import check_concavity, check_e2, jensen_criterion  # noqa: E402
from inequality_engine.src.couplers import mean_coupler, sum_coupler  # noqa: E402
from inequality_engine.src.evidence import gap_batch  # noqa: E402
from inequality_engine.src.falsifier import falsify  # noqa: E402
from inequality_engine.src.problems import (  # noqa: E402
    build_problem,
    continuity_precheck,
    holder_problem,
    jensen_problem,
    minkowski_problem,
)
from inequality_engine.verdict_manager import VerdictManager, engine_settings  # noqa: E402

BOX = [Interval(0.5, 4.0), Interval(0.5, 4.0)]
WIDE = [Interval(0.25, 16.0), Interval(0.25, 16.0)]
SQUARE = [Interval(-1.0, 1.0), Interval(-1.0, 1.0)]
TRIALS = 10000

SETTINGS = dict(engine_settings, grid_size=2, sample_size=200, cutting_plane_rounds=20, falsify_budget=2000,
                falsify_restarts=4, hill_climb_steps=100, concavity_pairs=2000, hessian_grid=4, max_workers=2)


def single_piece(domain: Interval, piece):
    return build_generator(domain, [piece])


def jensen_generators():
    """Single-piece generators on bounded domains, paired with whether M_f is Jensen convex."""
    positive = Interval(0.5, 4.0)
    negative = Interval(-4.0, -0.5)
    line = Interval(-2.0, 2.0)
    return [
        ("affine", single_piece(line, AffinePrimitive(2.0, 1.0)), True),
        ("power_2", single_piece(positive, PowerPrimitive(2.0)), True),
        ("power_3", single_piece(positive, PowerPrimitive(3.0)), True),
        ("exp", single_piece(line, ExponentialPrimitive(1.0)), True),
        ("exp_2x", single_piece(Interval(-1.0, 1.0), ComposedPrimitive(ExponentialPrimitive(1.0), AffinePrimitive(2.0, 0.0))), True),
        ("reflected_log", single_piece(negative, ReflectedPrimitive(LogarithmPrimitive(math.e))), True),
        ("power_half", single_piece(positive, PowerPrimitive(0.5)), False),
        ("power_minus_1", single_piece(positive, PowerPrimitive(-1.0)), False),
        ("exp_minus", single_piece(line, ExponentialPrimitive(-1.0)), False),
        ("log", single_piece(positive, LogarithmPrimitive(math.e)), False),
        ("reflected_square", single_piece(negative, ReflectedPrimitive(PowerPrimitive(2.0))), False),
        ("log_shifted", single_piece(line, ComposedPrimitive(LogarithmPrimitive(math.e), AffinePrimitive(1.0, 3.0))), False),
    ]


def battery():
    """(problem, holds) pairs with a known answer."""
    instances = [(minkowski_problem(p, box=BOX), True) for p in (1.0, 1.5, 2.0, 3.0, 4.0)]
    instances.append((minkowski_problem(2.0, k=3, box=BOX + [Interval(0.5, 4.0)]), True))
    instances += [(holder_problem(e, box=BOX), True) for e in ([2.0, 2.0], [3.0, 1.5], [4.0, 4.0 / 3.0], [1.25, 5.0])]
    instances += [(minkowski_problem(p, box=WIDE), False) for p in (0.3, 0.5, 0.7)]
    instances += [(holder_problem(e, box=BOX), False) for e in ([1.5, 1.5], [1.25, 1.25], [2.0, 1.5])]
    instances += [(jensen_problem(f, name=f"jensen_{name}"), holds) for name, f, holds in jensen_generators()]
    return instances


def jump_problems():
    """Sum or mean couplers with a jump in f_1, f_2 or inside phi(I) for f_0."""
    problems = []
    for j, s, height, coupler in ((1, 0.0, 1.0, sum_coupler), (1, -0.5, 0.5, sum_coupler), (2, 0.4, 1.0, sum_coupler),
                                  (2, -0.2, 0.5, sum_coupler), (1, 0.3, 0.5, mean_coupler), (2, 0.0, 1.0, mean_coupler)):
        jumpy = build_generator(Interval(-1.0, 1.0), [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, height)], [s])
        inner = [identity_generator(Interval(-1.0, 1.0))] * 2
        inner[j - 1] = jumpy
        problems.append((build_problem([identity_generator()] + inner, coupler(2), coupler(2), SQUARE, f"jump_f{j}"), j))
    for s, height in ((-0.5, 1.0), (0.3, 0.5), (1.0, 0.5), (-1.2, 1.0)):
        f0 = build_generator(Interval(-3.0, 3.0), [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, height)], [s])
        inner = [identity_generator(Interval(-1.0, 1.0))] * 2
        problems.append((build_problem([f0] + inner, sum_coupler(2), sum_coupler(2), SQUARE, "jump_f0"), 0))
    return problems


def random_instance(rng: np.random.Generator, index: int):
    """A classical family with random continuous generators and a known answer."""
    family = index % 3
    holds = bool(rng.uniform() < 0.5)
    if family == 0:
        p = rng.uniform(1.2, 4.0) if holds else rng.uniform(0.3, 0.7)
        return minkowski_problem(float(p), box=BOX), holds
    if family == 1:
        if holds:
            p = float(rng.uniform(1.3, 4.0))
            exponents = [p, p / (p - 1.0)]
        else:
            exponents = [float(e) for e in rng.uniform(1.1, 1.6, 2)]
        return holder_problem(exponents, box=BOX), holds
    r = rng.uniform(1.5, 3.0) if holds else rng.uniform(0.2, 0.7)
    f = single_piece(Interval(0.5, 4.0), PowerPrimitive(float(r)))
    return jensen_problem(f, name=f"jensen_power_{r:.3g}"), holds


async def check_equivalences() -> None:
    rng = np.random.default_rng(41)
    instances = battery()
    assert len(instances) >= 20
    for p, holds in instances:
        report = check_concavity(p, SETTINGS, rng)
        found = await falsify(p, SETTINGS, budget=4000, seed=11)
        if holds:
            assert report.status == "concave", (p.name, report.to_json())
            e2 = check_e2(p, report, rng, 500)
            assert e2.status == "ok" and e2.e1_error <= SETTINGS["e1_tolerance"], (p.name, e2.to_json())
            assert found is None, (p.name, found)
        else:
            assert report.status == "not_concave", (p.name, report.to_json())
            assert found is not None and found.violation > SETTINGS["violation_tolerance"], (p.name, found)


async def check_continuity_needed() -> None:
    problems = jump_problems()
    assert len(problems) == 10
    for p, generator in problems:
        precheck = continuity_precheck(p)
        assert precheck.must_fail and precheck.generator == generator, (p.name, precheck.to_json())
        found = await falsify(p, SETTINGS, budget=4000, seed=13, precheck=precheck)
        assert found is not None and found.violation > SETTINGS["violation_tolerance"], (p.name, precheck.to_json())


async def check_channels_agree() -> None:
    rng = np.random.default_rng(43)
    manager = VerdictManager(SETTINGS)
    for index in range(20):
        p, holds = random_instance(rng, index)
        # decide raises InternalInconsistencyError on conflicting evidence
        verdict = await manager.decide(p, seed=index)
        assert verdict.status == ("holds_certified" if holds else "fails"), (p.name, verdict.status, verdict.agreement)
        assert verdict.agreement["agreed"]["status"] == "agreed", (p.name, verdict.agreement)


def check_concave_means_holds() -> None:
    rng = np.random.default_rng(47)
    instances = [minkowski_problem(2.0, box=BOX), minkowski_problem(3.0, box=BOX),
                 minkowski_problem(1.5, k=3, box=BOX + [Interval(0.5, 4.0)]),
                 holder_problem([2.0, 2.0], box=BOX), holder_problem([3.0, 1.5], box=BOX),
                 jensen_problem(single_piece(Interval(-2.0, 2.0), ExponentialPrimitive(1.0)))]
    for p in instances:
        report = check_concavity(p, SETTINGS, rng)
        assert report.status == "concave", (p.name, report.to_json())
        assert check_e2(p, report, rng, 500).status == "ok"
        bound = 1e-9 * (1.0 + p.k * float(np.abs(np.concatenate([p.box_lo(), p.box_hi()])).max()) ** 2)
        for n in (2, p.k + 1):
            points = p.from_unit(rng.uniform(0.0, 1.0, (TRIALS, n, p.k)))
            weights = rng.dirichlet(np.ones(n), size=TRIALS)
            gaps = gap_batch(p, points, weights)
            assert gaps.max() <= bound, (p.name, n, float(gaps.max()))


def check_jensen_agreement() -> None:
    rng = np.random.default_rng(53)
    for name, f, holds in jensen_generators():
        criterion = jensen_criterion(f)
        assert criterion.status == ("holds" if holds else "fails"), (name, criterion.to_json())
        report = check_concavity(jensen_problem(f, name=name), SETTINGS, rng)
        assert report.status == ("concave" if holds else "not_concave"), (name, report.to_json())


async def run_smoke() -> None:
    check_jensen_agreement()
    check_concave_means_holds()
    await check_equivalences()
    await check_continuity_needed()
    await check_channels_agree()


def main() -> None:
    asyncio.run(run_smoke())
    print("battery smoke passed")


if __name__ == "__main__":
    main()
