from typing import Any, List
import logging

from generator_means.src.generator_loader import parse_generator, parse_interval
from inequality_engine.engine_types import CouplerDataType, ProblemDataType
from inequality_engine.src.couplers import COUPLER_KINDS, Coupler
from inequality_engine.src.problems import InequalityProblem, build_problem
from utils.errors import ProblemFormatError, QamError
from utils.helpers import parse_extended_real, read_json_file

logger = logging.getLogger("Problems")


def parse_coupler(data: CouplerDataType, arity: int, field: str) -> Coupler:
    if not isinstance(data, dict) or "kind" not in data:
        raise ProblemFormatError("Coupler must be an object with a 'kind'", field)
    kind = data["kind"]
    if kind not in COUPLER_KINDS:
        raise ProblemFormatError(f"Unknown coupler kind '{kind}', expected one of {list(COUPLER_KINDS)}", f"{field}.kind")
    try:
        if kind == "affine":
            raw = data.get("c")
            if not isinstance(raw, list):
                raise ProblemFormatError("Affine coupler needs a list 'c' of coefficients", f"{field}.c")
            return Coupler("affine", arity, offset=parse_extended_real(data.get("c0", 0.0)),
                           coefficients=tuple(parse_extended_real(c) for c in raw))
        if kind == "power_sum":
            if "r" not in data:
                raise ProblemFormatError("power_sum coupler needs an exponent 'r'", field)
            return Coupler("power_sum", arity, exponent=parse_extended_real(data["r"]))
        if kind == "reflected":
            if "base" not in data:
                raise ProblemFormatError("Reflected coupler needs a 'base'", field)
            return Coupler("reflected", arity, base=parse_coupler(data["base"], arity, f"{field}.base"))
        return Coupler(kind, arity)
    except ValueError as e:
        if isinstance(e, ProblemFormatError):
            raise
        raise ProblemFormatError(str(e), field)


def parse_problem(data: ProblemDataType) -> InequalityProblem:
    """Build a validated InequalityProblem from its JSON object."""
    if not isinstance(data, dict):
        raise ProblemFormatError("Problem must be a JSON object", "")
    k = data.get("k")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ProblemFormatError(f"k must be a positive integer, got {k!r}", "k")
    raw_generators = data.get("generators")
    if not isinstance(raw_generators, list) or len(raw_generators) != k + 1:
        raise ProblemFormatError(f"Expected a list of {k + 1} generators (f_0..f_{k})", "generators")
    generators = [parse_generator(g, f"generators[{i}]") for i, g in enumerate(raw_generators)]
    for key in ("phi", "Phi"):
        if key not in data:
            raise ProblemFormatError(f"Missing key '{key}'", key)
    phi = parse_coupler(data["phi"], k, "phi")
    Phi = parse_coupler(data["Phi"], k, "Phi")

    box = None
    if "box" in data:
        raw_box: List[Any] = data["box"]
        if not isinstance(raw_box, list) or len(raw_box) != k:
            raise ProblemFormatError(f"box must list {k} intervals", "box")
        box = [parse_interval(interval, f"box[{j}]") for j, interval in enumerate(raw_box)]

    reference_points: List[List[float]] = []
    if "reference_points" in data:
        try:
            reference_points = [[float(v) for v in row] for row in data["reference_points"]]
        except (TypeError, ValueError) as e:
            raise ProblemFormatError(f"reference_points must be a list of points: {e}", "reference_points")
        if not reference_points or any(len(row) != k for row in reference_points):
            raise ProblemFormatError(f"reference_points must list points of {k} coordinates", "reference_points")

    name = data.get("name", "")
    try:
        return build_problem(generators, phi, Phi, box, str(name), reference_points)
    except QamError as e:
        if isinstance(e, ProblemFormatError):
            raise
        logger.error(f"Problem '{name}' is inconsistent: {e}")
        raise


async def load_problem(path: str) -> InequalityProblem:
    data = await read_json_file(path)
    logger.info(f"Loaded problem file {path}")
    return parse_problem(data)
