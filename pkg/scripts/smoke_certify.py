from pathlib import Path
import asyncio
import sys
import time

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from generator_means.src.interval import Interval  # noqa: E402
from inequality_engine.src.certify import (  # noqa: E402
    Certificate,
    CertificateEntry,
    FarkasWitness,
    build_certificate,
    certificate_from_json,
    certification_grid,
    certify_at,
    recheck_certificate,
    farkas_counterexample,
)
from inequality_engine.src.problem_loader import load_problem  # noqa: E402
from inequality_engine.src.problems import InequalityProblem, minkowski_problem, psi_eval  # noqa: E402
from inequality_engine.verdict_manager import engine_settings  # noqa: E402
from utils.errors import PreconditionError, ProblemFormatError  # noqa: E402

PROBLEM_FILES = PROJECT_ROOT / "problem_files"
WIDE = [Interval(0.25, 16.0), Interval(0.25, 16.0)]

# Smaller grid and samples than the shipped defaults
SETTINGS = dict(engine_settings, grid_size=2, sample_size=200, cutting_plane_rounds=20, max_workers=2)


def check_single_point() -> None:
    # p = 1/2: the rows (4, 1) and (1, 4) leave no room for a(t) at t = (2.25, 2.25)
    p = minkowski_problem(0.5, box=WIDE)
    outcome = certify_at(p, [2.25, 2.25], np.asarray([[4.0, 1.0], [1.0, 4.0]]))
    assert isinstance(outcome, FarkasWitness), outcome
    assert np.all(outcome.inner_sums(p) <= 1e-9), outcome.inner_sums(p)
    assert outcome.outer_sum(p) > 0
    assert abs(sum(outcome.weights) - 1.0) < 1e-12 and len(outcome.points) == p.k + 1

    counterexample = farkas_counterexample(p, outcome)
    assert counterexample.source == "farkas"
    assert abs(counterexample.lhs - 5.0) < 1e-9 and abs(counterexample.rhs - 4.5) < 1e-9
    assert abs(counterexample.violation - 0.5) < 1e-9

    # A random sample against p = 1/2
    rng = np.random.default_rng(23)
    outcome = certify_at(p, [2.0, 3.0], p.sample_box(rng, 400))
    assert isinstance(outcome, FarkasWitness)
    scale = max(1.0, float(np.abs(np.asarray(outcome.points)).max()))
    assert np.all(outcome.inner_sums(p) <= 1e-9 * scale) and outcome.outer_sum(p) > 0
    # M_j <= t_j while M_0 > Phi(t): the sign is fixed even when the margin is small
    assert farkas_counterexample(p, outcome).violation > -1e-8

    # p = 2: Psi is concave, so the sampled rows always admit a(t) >= 0
    p = minkowski_problem(2.0, box=[Interval(0.5, 4.0), Interval(0.5, 4.0)])
    sample = p.sample_box(rng, 300)
    entry = certify_at(p, [2.0, 2.0], sample)
    assert isinstance(entry, CertificateEntry), entry
    assert all(c >= 0 for c in entry.coeffs) and entry.residual <= 1e-7
    u = np.stack([f.values(sample[:, j]) for j, f in enumerate(p.fs)], axis=-1)
    assert np.all(entry.majorant(p, u) >= psi_eval(p, u) - 1e-7)

    try:
        certify_at(p, [2.0, 2.0], np.empty((0, 2)))
    except PreconditionError:
        pass
    else:
        raise RuntimeError("an empty sample must be rejected")


async def check_whole_grid() -> None:
    chain = await load_problem(str(PROBLEM_FILES / "identity_chain.json"))
    grid = certification_grid(chain, 2)
    assert len(grid) == 4 and all(t is not None for t in grid)
    assert np.allclose(sorted(tuple(t) for t in grid), [(-2.5, -2.5), (-2.5, 2.5), (2.5, -2.5), (2.5, 2.5)])

    result = await build_certificate(chain, SETTINGS, seed=5)
    assert result.status == "certified", result.to_json()
    assert result.certificate is not None and len(result.certificate.entries) == 4
    for entry in result.certificate.entries:
        assert np.allclose(entry.coeffs, [1.0, 1.0], atol=1e-9), entry
    assert recheck_certificate(chain, result.certificate, np.random.default_rng(1), 10000) <= 1e-6

    # Same seed, same certificate
    again = await build_certificate(chain, SETTINGS, seed=5)
    assert again.to_json() == result.to_json()

    p05 = await load_problem(str(PROBLEM_FILES / "minkowski_p05.json"))
    refuted = await build_certificate(p05, SETTINGS, seed=5)
    assert refuted.status == "refuted", refuted.to_json()
    assert refuted.counterexample is not None and refuted.counterexample.violation > SETTINGS["violation_tolerance"]
    assert refuted.certificate is None

    p2 = await load_problem(str(PROBLEM_FILES / "minkowski_p2.json"))
    certified = await build_certificate(p2, SETTINGS, seed=5)
    assert certified.status == "certified", certified.to_json()
    check_envelope(p2, certified.certificate)


def check_envelope(p: InequalityProblem, certificate: Certificate) -> None:
    # The lower envelope of the certified maps is concave and sits above Psi
    rng = np.random.default_rng(37)
    x, y = p.sample_box(rng, 2000), p.sample_box(rng, 2000)
    u = np.stack([f.values(x[:, j]) for j, f in enumerate(p.fs)], axis=-1)
    v = np.stack([f.values(y[:, j]) for j, f in enumerate(p.fs)], axis=-1)
    env_u, env_v = certificate.envelope(p, u), certificate.envelope(p, v)
    env_mid = certificate.envelope(p, 0.5 * (u + v))
    assert np.all(env_mid >= 0.5 * (env_u + env_v) - 1e-12 * (1.0 + np.abs(env_mid)))
    psi = np.asarray(psi_eval(p, u), dtype=float)
    assert np.all(env_u >= psi - 1e-6 * (1.0 + np.abs(psi))), float((psi - env_u).max())


async def check_shipped_settings() -> None:
    # Full grid, samples and rounds: the concave Minkowski cases certify within a minute
    for name in ("minkowski_p2", "minkowski_p3"):
        p = await load_problem(str(PROBLEM_FILES / f"{name}.json"))
        started = time.perf_counter()
        result = await build_certificate(p, engine_settings, seed=5)
        elapsed = time.perf_counter() - started
        assert result.status == "certified", (name, result.to_json())
        assert result.certificate is not None and len(result.certificate.entries) == engine_settings["grid_size"] ** p.k
        assert elapsed < 60.0, (name, elapsed)


def check_certificate_files() -> None:
    chain = minkowski_problem(1.0, box=[Interval(0.5, 4.0), Interval(0.5, 4.0)])
    rng = np.random.default_rng(29)

    exact = certificate_from_json({"grid": [[2.0, 2.0]], "coeffs": [[1.0, 1.0]], "residual": 0.0}, chain)
    assert recheck_certificate(chain, exact, rng, 2000) <= 1e-12

    # Half the slope cannot dominate a linear Psi over the whole box
    loose = certificate_from_json({"grid": [[2.0, 2.0]], "coeffs": [[0.5, 0.5]], "residual": 0.0}, chain)
    assert recheck_certificate(chain, loose, rng, 2000) > 0.1

    for data, field in (
        ({"grid": [], "coeffs": [], "residual": 0.0}, "certificate"),
        ({"grid": [[2.0, 2.0]], "coeffs": [[1.0]], "residual": 0.0}, "certificate"),
        ({"grid": [[2.0, 2.0]], "coeffs": [[1.0, -1.0]], "residual": 0.0}, "certificate.coeffs"),
        ({"grid": [[2.0, 2.0]], "coeffs": [[1.0, 1.0]]}, "certificate"),
    ):
        try:
            certificate_from_json(data, chain)
        except ProblemFormatError as e:
            assert e.field == field, (e.field, field)
        else:
            raise RuntimeError(f"malformed certificate {data} was accepted")


async def run_smoke() -> None:
    check_single_point()
    check_certificate_files()
    await check_whole_grid()
    await check_shipped_settings()


def main() -> None:
    asyncio.run(run_smoke())
    print("certify smoke passed")


if __name__ == "__main__":
    main()
