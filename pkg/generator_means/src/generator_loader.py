from typing import Any, Dict, List, Optional
import logging

from generator_means.means_types import GeneratorDataType, PieceDataType
from generator_means.src.generator import GeneratorFn, build_generator
from generator_means.src.interval import Interval
from generator_means.src.primitives import (
    AffinePrimitive,
    ComposedPrimitive,
    ExponentialPrimitive,
    LogarithmPrimitive,
    PowerPrimitive,
    Primitive,
    ReflectedPrimitive,
)
from utils.errors import GeneratorInvariantError, ProblemFormatError
from utils.helpers import parse_extended_real

logger = logging.getLogger("GeneratorLoader")


def _require(data: Dict[str, Any], key: str, field: str) -> Any:
    if not isinstance(data, dict):
        raise ProblemFormatError(f"Expected an object, got {type(data).__name__}", field)
    if key not in data:
        raise ProblemFormatError(f"Missing key '{key}'", field)
    return data[key]


def _number(value: Any, field: str) -> float:
    try:
        return parse_extended_real(value)
    except ValueError as e:
        raise ProblemFormatError(str(e), field)


def parse_interval(data: Any, field: str) -> Interval:
    if not isinstance(data, list) or len(data) != 2:
        raise ProblemFormatError("Interval must be a two-element list [lo, hi]", field)
    try:
        return Interval(_number(data[0], f"{field}[0]"), _number(data[1], f"{field}[1]"))
    except ValueError as e:
        if isinstance(e, ProblemFormatError):
            raise
        raise ProblemFormatError(str(e), field)


def parse_primitive(data: PieceDataType, field: str) -> Primitive:
    kind = _require(data, "kind", field)
    params: Dict[str, Any] = data.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ProblemFormatError("params must be an object", f"{field}.params")

    def param(name: str, default: Optional[float] = None) -> float:
        if name not in params:
            if default is None:
                raise ProblemFormatError(f"Missing parameter '{name}'", f"{field}.params")
            return default
        return _number(params[name], f"{field}.params.{name}")

    try:
        if kind == "affine":
            return AffinePrimitive(param("slope", 1.0), param("intercept", 0.0))
        if kind == "identity":
            return AffinePrimitive(1.0, 0.0)
        if kind == "power":
            return PowerPrimitive(param("exponent"))
        if kind == "exponential":
            return ExponentialPrimitive(param("rate", 1.0))
        if kind == "logarithm":
            return LogarithmPrimitive(param("base", 2.718281828459045))
        if kind == "composed":
            return ComposedPrimitive(parse_primitive(_require(params, "outer", f"{field}.params"), f"{field}.params.outer"),
                                     parse_primitive(_require(params, "inner", f"{field}.params"), f"{field}.params.inner"))
        if kind == "reflected":
            return ReflectedPrimitive(parse_primitive(_require(params, "base", f"{field}.params"), f"{field}.params.base"))
    except ValueError as e:
        if isinstance(e, ProblemFormatError):
            raise
        raise ProblemFormatError(str(e), field)

    raise ProblemFormatError(f"Unknown primitive kind '{kind}'", f"{field}.kind")


def parse_generator(data: GeneratorDataType, field: str = "generator") -> GeneratorFn:
    """Parse and validate a generator object; invariant violations raise GeneratorInvariantError."""
    domain = parse_interval(_require(data, "domain", field), f"{field}.domain")
    raw_pieces = _require(data, "pieces", field)
    if not isinstance(raw_pieces, list) or not raw_pieces:
        raise ProblemFormatError("pieces must be a non-empty list", f"{field}.pieces")
    pieces = [parse_primitive(piece, f"{field}.pieces[{i}]") for i, piece in enumerate(raw_pieces)]
    breakpoints: List[float] = [_number(t, f"{field}.breakpoints[{i}]") for i, t in enumerate(data.get("breakpoints", []))]
    raw_jumps = data.get("jump_values")
    jump_values = None if raw_jumps is None else [_number(v, f"{field}.jump_values[{i}]") for i, v in enumerate(raw_jumps)]

    try:
        generator = build_generator(domain, pieces, breakpoints, jump_values)
    except GeneratorInvariantError as e:
        logger.error(f"Generator at '{field}' failed validation: {e}")
        raise

    logger.debug(f"Parsed generator at '{field}' with {len(pieces)} piece(s)")
    return generator
