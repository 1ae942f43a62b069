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
    ExponentialPrimitive,
    LogarithmPrimitive,
    PowerPrimitive,
)
from inequality_engine.src.concavity import (  # noqa: E402
    check_concavity,
    check_e2,
    concavity_counterexample,
    jensen_criterion,
)
from inequality_engine.src.couplers import mean_coupler, sum_coupler  # noqa: E402
from inequality_engine.src.evidence import replay  # noqa: E402
from inequality_engine.src.falsifier import falsify  # noqa: E402
from inequality_engine.src.problem_loader import load_problem  # noqa: E402
from inequality_engine.src.problems import (  # noqa: E402
    build_problem,
    continuity_precheck,
    minkowski_problem,
    reflect_problem,
)
from inequality_engine.verdict_manager import VerdictManager, engine_settings  # noqa: E402

PROBLEM_FILES = PROJECT_ROOT / "problem_files"
BOX = [Interval(0.5, 4.0), Interval(0.5, 4.0)]
WIDE = [Interval(0.25, 16.0), Interval(0.25, 16.0)]
POSITIVE = Interval(0.0, math.inf)

SETTINGS = dict(engine_settings, grid_size=2, sample_size=200, cutting_plane_rounds=20, falsify_budget=2000,
                falsify_restarts=4, hill_climb_steps=100, concavity_pairs=2000, hessian_grid=4, max_workers=2)

# Expected `check` outcome for every shipped problem file
BATTERY = {
    "minkowski_p2": "holds_certified",
    "minkowski_p3": "holds_certified",
    "minkowski_p1": "holds_certified",
    "minkowski_p05": "fails",
    "holder_cauchy_schwarz": "holds_certified",
    "jensen_exp": "holds_certified",
    "jensen_log": "fails",
    "identity_chain": "holds_certified",
    "minkowski_jump": "fails",
}


def split_couplers():
    """x + y on the left, the arithmetic mean of the means on the right."""
    inner = [identity_generator(Interval(0.5, 4.0))] * 2
    return build_problem([identity_generator()] + inner, sum_coupler(2), mean_coupler(2), BOX, "split")


def check_concavity_channel() -> None:
    rng = np.random.default_rng(31)
    concave = minkowski_problem(2.0, box=BOX)
    report = check_concavity(concave, SETTINGS, rng)
    assert report.status == "concave", report.to_json()
    e2 = check_e2(concave, report, rng, 500)
    assert e2.status == "ok" and e2.e1_error <= 1e-9, e2.to_json()

    convex = minkowski_problem(0.5, box=WIDE)
    report = check_concavity(convex, SETTINGS, rng)
    assert report.status == "not_concave" and report.witness is not None, report.to_json()
    counterexample = concavity_counterexample(convex, report)
    assert counterexample is not None and counterexample.source == "concavity"
    assert counterexample.violation > 0 and len(counterexample.points) == convex.k + 1

    # Psi = u_1 + u_2 is concave, yet f_0(Phi(t)) sits below it
    split = split_couplers()
    report = check_concavity(split, SETTINGS, rng)
    assert report.status == "concave", report.to_json()
    e2 = check_e2(split, report, rng, 500)
    assert e2.status == "violation" and e2.witness is not None, e2.to_json()
    assert concavity_counterexample(split, report) is None

    jumpy = build_problem(
        [identity_generator(),
         build_generator(Interval(-1.0, 1.0), [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0)], [0.0]),
         identity_generator(Interval(-1.0, 1.0))],
        sum_coupler(2), sum_coupler(2))
    report = check_concavity(jumpy, SETTINGS, rng)
    assert report.status == "unsupported"
    assert check_e2(jumpy, report, rng, 100).status == "skipped"


def check_jensen_criterion() -> None:
    exp = build_generator(Interval(-math.inf, math.inf), [ExponentialPrimitive(1.0)])
    assert jensen_criterion(exp).status == "holds"
    assert jensen_criterion(build_generator(POSITIVE, [PowerPrimitive(2.0)])).status == "holds"
    assert jensen_criterion(identity_generator()).status == "holds"

    report = jensen_criterion(build_generator(POSITIVE, [LogarithmPrimitive(math.e)]))
    assert report.status == "fails" and report.witness is not None

    two_pieces = build_generator(Interval(-1.0, 1.0), [AffinePrimitive(1.0, 0.0), AffinePrimitive(1.0, 1.0)], [0.0])
    assert jensen_criterion(two_pieces).status == "unsupported"


async def check_falsifier() -> None:
    p05 = await load_problem(str(PROBLEM_FILES / "minkowski_p05.json"))
    found = await falsify(p05, SETTINGS, seed=3)
    assert found is not None and found.violation >= 0.1, found
    assert abs(replay(p05, found).violation - found.violation) <= 1e-12 * (1.0 + abs(found.violation))
    again = await falsify(p05, SETTINGS, seed=3)
    assert again == found

    jensen_log = await load_problem(str(PROBLEM_FILES / "jensen_log.json"))
    found = await falsify(jensen_log, SETTINGS, seed=3)
    assert found is not None and found.violation >= 1.0, found

    jump = await load_problem(str(PROBLEM_FILES / "minkowski_jump.json"))
    precheck = continuity_precheck(jump)
    assert precheck.must_fail
    found = await falsify(jump, SETTINGS, seed=3, precheck=precheck)
    assert found is not None and found.violation > SETTINGS["violation_tolerance"], found

    p2 = await load_problem(str(PROBLEM_FILES / "minkowski_p2.json"))
    assert await falsify(p2, SETTINGS, seed=3) is None


async def check_verdicts() -> None:
    manager = VerdictManager(SETTINGS)
    for name, expected in BATTERY.items():
        p = await load_problem(str(PROBLEM_FILES / f"{name}.json"))
        verdict = await manager.decide(p, seed=7)
        assert verdict.status == expected, (name, verdict.status, verdict.agreement)
        assert verdict.agreement["agreed"]["status"] == "agreed", (name, verdict.agreement)
        evidence = verdict.evidence_json()
        if expected == "fails":
            assert verdict.exit_code == 1 and evidence is not None and "counterexample" in evidence
            assert replay(p, verdict.counterexample).violation > SETTINGS["violation_tolerance"]
        else:
            # Every holding instance here has a concave Psi, so both channels must report
            assert verdict.exit_code == 0 and evidence is not None
            assert "certificate" in evidence and "concavity" in evidence, (name, evidence)

    # The shipped point families come back verbatim, with their exact violations
    for name, points, violation in (("minkowski_p05", [[4.0, 1.0], [1.0, 4.0]], 0.5),
                                    ("jensen_log", [[1.0, 100.0], [100.0, 1.0]], 40.5)):
        p = await load_problem(str(PROBLEM_FILES / f"{name}.json"))
        verdict = await manager.decide(p, seed=7)
        reference = verdict.evidence_json()["reference_counterexample"]
        assert reference["points"] == points and reference["source"] == "reference", reference
        assert abs(reference["violation"] - violation) <= 1e-9, reference
        assert verdict.agreement["reference"]["status"] == "violated", verdict.agreement

    # Reversed inequalities through reflection: reverse Minkowski holds for p < 1 only
    held = await manager.decide(reflect_problem(minkowski_problem(0.5, box=WIDE)), seed=7)
    assert held.status == "holds_certified", held.agreement
    failed = await manager.decide(reflect_problem(minkowski_problem(2.0, box=BOX)), seed=7)
    assert failed.status == "fails", failed.agreement

    # A concave Psi that misses e2 cannot certify on its own
    split = await manager.decide(split_couplers(), seed=7)
    assert split.status == "fails" and split.agreement["e2"]["status"] == "violation", split.agreement


async def run_smoke() -> None:
    check_concavity_channel()
    check_jensen_criterion()
    await check_falsifier()
    await check_verdicts()


def main() -> None:
    asyncio.run(run_smoke())
    print("analyze smoke passed")


if __name__ == "__main__":
    main()
