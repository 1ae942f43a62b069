from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union
import logging
import math
import numpy as np

from generator_means.src.interval import Interval
from generator_means.src.primitives import ComposedPrimitive, Primitive, identity
from utils.errors import CompositionError, DomainError, GeneratorInvariantError, RangeError
from utils.helpers import format_extended_real

logger = logging.getLogger("Generator")

ArrayLike = Union[float, np.ndarray]

BISECTION_TOLERANCE = 1e-12
BREAKPOINT_TOLERANCE = 1e-12  # relative slack for the f_-(t) <= v <= f_+(t) checks


def bisect_increasing(func: Callable[[float], float], target: float, lo: float, hi: float,
                      tol: float = BISECTION_TOLERANCE, max_steps: int = 400) -> float:
    """Solve func(x) = target for an increasing func on (lo, hi) by bisection.

    Infinite bounds are replaced by a finite bracket found by doubling the
    distance from a finite starting point.
    """
    start = 0.0 if not (math.isfinite(lo) or math.isfinite(hi)) else (lo if math.isfinite(lo) else hi)
    if not math.isfinite(lo):
        distance = 1.0
        while func(start - distance) > target and distance < 1e300:
            distance *= 2.0
        lo = start - distance
    if not math.isfinite(hi):
        distance = 1.0
        while func(start + distance) < target and distance < 1e300:
            distance *= 2.0
        hi = start + distance

    for _ in range(max_steps):
        if hi - lo <= tol:
            break
        middle = 0.5 * lo + 0.5 * hi
        if func(middle) < target:
            lo = middle
        else:
            hi = middle

    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GeneratorViolation:
    invariant: str
    message: str
    breakpoint: Optional[int] = None
    piece: Optional[int] = None

    def to_json(self) -> Dict[str, Any]:
        return {"invariant": self.invariant, "message": self.message,
                "breakpoint": self.breakpoint, "piece": self.piece}


@dataclass(frozen=True)
class GeneratorReport:
    violations: Tuple[GeneratorViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Optional[GeneratorViolation]:
        return self.violations[0] if self.violations else None

    def to_json(self) -> Dict[str, Any]:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


@dataclass(frozen=True)
class GeneratorFn:
    """Strictly increasing, piecewise-primitive function on an open interval.

    Piece i acts on the open subinterval between breakpoints i-1 and i;
    jump_values[i] is the value at breakpoints[i]. Only structural
    consistency is enforced here; use `validate_generator` (or
    `build_generator`) for the monotonicity invariants.
    """
    domain: Interval
    pieces: Tuple[Primitive, ...]
    breakpoints: Tuple[float, ...] = ()
    jump_values: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise GeneratorInvariantError(
                f"Expected {len(self.breakpoints) + 1} pieces for {len(self.breakpoints)} breakpoints, got {len(self.pieces)}")
        if len(self.jump_values) != len(self.breakpoints):
            raise GeneratorInvariantError(
                f"Expected {len(self.breakpoints)} jump values, got {len(self.jump_values)}")
        for index, t in enumerate(self.breakpoints):
            if not (math.isfinite(t) and self.domain.contains(t)):
                raise GeneratorInvariantError(f"Breakpoint {index} = {t} is not interior to {self.domain}")
            if index and not self.breakpoints[index - 1] < t:
                raise GeneratorInvariantError(f"Breakpoints must be strictly increasing (index {index})")
        for index, v in enumerate(self.jump_values):
            if not math.isfinite(v):
                raise GeneratorInvariantError(f"Jump value {index} must be finite, got {v}")

    # Structure

    @cached_property
    def _bp(self) -> np.ndarray:
        return np.asarray(self.breakpoints, dtype=float)

    @cached_property
    def left_limits(self) -> np.ndarray:
        """f_-(t_i) at every breakpoint."""
        return np.asarray([float(self.pieces[i].value(t)) for i, t in enumerate(self.breakpoints)], dtype=float)

    @cached_property
    def right_limits(self) -> np.ndarray:
        """f_+(t_i) at every breakpoint."""
        return np.asarray([float(self.pieces[i + 1].value(t)) for i, t in enumerate(self.breakpoints)], dtype=float)

    def piece_interval(self, index: int) -> Interval:
        lo = self.domain.lo if index == 0 else self.breakpoints[index - 1]
        hi = self.domain.hi if index == len(self.breakpoints) else self.breakpoints[index]
        return Interval(lo, hi)

    @cached_property
    def range_hull(self) -> Interval:
        """conv(f(I)); the endpoints are limits and never attained."""
        lo = float(self.pieces[0].value(self.domain.lo))
        hi = float(self.pieces[-1].value(self.domain.hi))
        return Interval(lo, hi)

    @property
    def is_single_piece(self) -> bool:
        return not self.breakpoints

    def discontinuities(self) -> List[float]:
        """Breakpoints where f_-(t) < f_+(t); empty iff f is continuous."""
        return [t for t, left, right in zip(self.breakpoints, self.left_limits, self.right_limits) if left < right]

    @property
    def is_continuous(self) -> bool:
        return not self.discontinuities()

    def distance_to_jump(self, y: float) -> float:
        jumps = self.discontinuities()
        return min((abs(y - t) for t in jumps), default=math.inf)

    # Evaluation

    def _check_domain(self, arr: np.ndarray) -> None:
        inside = (arr > self.domain.lo) & (arr < self.domain.hi)
        if not np.all(inside):
            bad = arr[~inside] if arr.ndim else arr
            raise DomainError(f"Point(s) {np.ravel(bad)[:3].tolist()} outside generator domain {self.domain}")

    def _segments(self, arr: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._bp, arr, side="left")

    def _apply(self, arr: np.ndarray, method: str, at_breakpoint: Optional[Sequence[float]]) -> np.ndarray:
        if self.is_single_piece:
            return np.asarray(getattr(self.pieces[0], method)(arr), dtype=float)
        segments = self._segments(arr)
        out = np.empty_like(arr, dtype=float)
        for index, piece in enumerate(self.pieces):
            mask = segments == index
            if np.any(mask):
                out[mask] = getattr(piece, method)(arr[mask])
        if at_breakpoint is not None:
            for t, value in zip(self.breakpoints, at_breakpoint):
                out[arr == t] = value
        return out

    def values(self, x: ArrayLike) -> np.ndarray:
        """Vectorized evaluation without the domain check (nan outside natural domains)."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        return self._apply(arr, "value", self.jump_values).reshape(np.shape(x))

    def __call__(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        out = self.values(arr)
        return out if out.ndim else float(out)

    def left_limit(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        out = self._apply(np.atleast_1d(arr), "value", self.left_limits).reshape(arr.shape)
        return out if out.ndim else float(out)

    def right_limit(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        flat = np.atleast_1d(arr)
        out = self._apply(flat, "value", None)
        for index, t in enumerate(self.breakpoints):
            out[flat == t] = self.right_limits[index]
        out = out.reshape(arr.shape)
        return out if out.ndim else float(out)

    def eval_with_limits(self, x: float) -> Tuple[float, float, float]:
        """(f_-(x), f(x), f_+(x)); the two limits agree iff x is a continuity point."""
        return float(self.left_limit(x)), float(self(x)), float(self.right_limit(x))

    def derivative(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        out = self._apply(np.atleast_1d(arr), "derivative", None).reshape(arr.shape)
        return out if out.ndim else float(out)

    def second_derivative(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        out = self._apply(np.atleast_1d(arr), "second_derivative", None).reshape(arr.shape)
        return out if out.ndim else float(out)

    @cached_property
    def inverse(self) -> "GenInverse":
        return GenInverse(self, self.range_hull)

    # Transformations

    def restrict(self, sub: Interval) -> "GeneratorFn":
        """Restriction to an open subinterval of the domain."""
        if not self.domain.contains_interval(sub):
            raise DomainError(f"Cannot restrict generator on {self.domain} to {sub}")
        if sub == self.domain:
            return self
        keep = [i for i, t in enumerate(self.breakpoints) if sub.lo < t < sub.hi]
        first_piece = int(np.searchsorted(self._bp, sub.lo, side="right")) if self.breakpoints else 0
        pieces = self.pieces[first_piece:first_piece + len(keep) + 1]
        return GeneratorFn(sub, tuple(pieces),
                           tuple(self.breakpoints[i] for i in keep),
                           tuple(self.jump_values[i] for i in keep))

    def reflect(self) -> "GeneratorFn":
        """f*(x) := -f(-x) on -I; the generator of the reflected mean."""
        return GeneratorFn(self.domain.reflected(),
                           tuple(p.reflected() for p in reversed(self.pieces)),
                           tuple(-t for t in reversed(self.breakpoints)),
                           tuple(-v for v in reversed(self.jump_values)))

    def to_json(self) -> Dict[str, Any]:
        return {
            "domain": self.domain.to_json(),
            "pieces": [p.to_json() for p in self.pieces],
            "breakpoints": [format_extended_real(t) for t in self.breakpoints],
            "jump_values": [float(v) for v in self.jump_values],
        }


@dataclass(frozen=True)
class GenInverse:
    """The increasing, continuous left inverse of a strictly increasing generator."""
    source: GeneratorFn
    range_hull: Interval = field(repr=False)

    def values(self, u: ArrayLike) -> np.ndarray:
        """Vectorized inverse; nan for values outside the open range hull."""
        f = self.source
        flat = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.full_like(flat, np.nan, dtype=float)
        inside = (flat > self.range_hull.lo) & (flat < self.range_hull.hi)
        if not np.any(inside):
            return out.reshape(np.shape(u))

        # Gaps [f_-(t_i), f_+(t_i)] collapse to the breakpoint.
        in_gap = np.zeros_like(inside)
        for t, left, right in zip(f.breakpoints, f.left_limits, f.right_limits):
            gap = inside & (flat >= left) & (flat <= right)
            out[gap] = t
            in_gap |= gap

        todo = inside & ~in_gap
        segments = np.searchsorted(f.right_limits, flat, side="left") if f.breakpoints else np.zeros(flat.shape, dtype=int)
        for index, piece in enumerate(f.pieces):
            mask = todo & (segments == index)
            if not np.any(mask):
                continue
            bounds = f.piece_interval(index)
            x = np.asarray(piece.inverse(flat[mask]), dtype=float)
            broken = ~np.isfinite(x)
            if np.any(broken):
                logger.debug(f"Analytic inverse failed for {int(broken.sum())} value(s) on piece {index}; bisecting")
                x[broken] = [bisect_increasing(lambda s, p=piece: float(p.value(s)), float(target), bounds.lo, bounds.hi)
                             for target in flat[mask][broken]]
            # Outside a gap the answer is strictly off the breakpoint.
            lo = np.nextafter(bounds.lo, math.inf) if index > 0 else bounds.lo
            hi = np.nextafter(bounds.hi, -math.inf) if index < len(f.breakpoints) else bounds.hi
            out[mask] = np.clip(x, lo, hi)

        # Rounding must not push the answer onto an open domain endpoint.
        out = np.where(inside, np.clip(out, np.nextafter(f.domain.lo, math.inf), np.nextafter(f.domain.hi, -math.inf)), out)
        return out.reshape(np.shape(u))

    def __call__(self, u: ArrayLike) -> ArrayLike:
        arr = np.asarray(u, dtype=float)
        outside = ~((arr > self.range_hull.lo) & (arr < self.range_hull.hi))
        if np.any(outside):
            bad = arr[outside] if arr.ndim else arr
            raise RangeError(f"Value(s) {np.ravel(bad)[:3].tolist()} outside the range hull {self.range_hull}")
        out = self.values(arr)
        return out if out.ndim else float(out)


def _default_jump_values(domain: Interval, pieces: Sequence[Primitive], breakpoints: Sequence[float]) -> Tuple[float, ...]:
    values = []
    for index, t in enumerate(breakpoints):
        left = float(pieces[index].value(t))
        right = float(pieces[index + 1].value(t))
        values.append(0.5 * (left + right))
    return tuple(values)


def validate_generator(f: GeneratorFn, samples: int = 1000) -> GeneratorReport:
    """Check the GeneratorFn invariants analytically and on an n-point sample."""
    violations: List[GeneratorViolation] = []

    for index, piece in enumerate(f.pieces):
        bounds = f.piece_interval(index)
        try:
            natural = piece.natural_domain
        except ValueError as e:
            violations.append(GeneratorViolation("piece_domain", str(e), piece=index))
            continue
        if not natural.contains_interval(bounds):
            violations.append(GeneratorViolation(
                "piece_domain", f"Piece {index} ({piece.kind}) acts on {bounds} outside its natural domain {natural}", piece=index))
            continue
        xs = bounds.grid(max(8, samples // max(1, len(f.pieces))))
        slopes = np.asarray(piece.derivative(xs), dtype=float)
        if not np.all(slopes > 0):
            bad = float(xs[np.argmax(~(slopes > 0))])
            violations.append(GeneratorViolation(
                "piece_increasing", f"Piece {index} is not strictly increasing near x = {bad}", piece=index))

    if violations:
        return GeneratorReport(tuple(violations))

    for index, (t, v) in enumerate(zip(f.breakpoints, f.jump_values)):
        left, right = float(f.left_limits[index]), float(f.right_limits[index])
        slack = BREAKPOINT_TOLERANCE * (1.0 + abs(v))
        if left > v + slack:
            violations.append(GeneratorViolation(
                "jump_order", f"f_-({t}) = {left} > v = {v}", breakpoint=index))
        elif v > right + slack:
            violations.append(GeneratorViolation(
                "jump_order", f"f_+({t}) = {right} < v = {v}", breakpoint=index))
        elif left > right + slack:
            violations.append(GeneratorViolation(
                "jump_order", f"f_-({t}) = {left} > f_+({t}) = {right}", breakpoint=index))

    if violations:
        return GeneratorReport(tuple(violations))

    xs = np.unique(np.concatenate([f.domain.grid(samples), f._bp]))
    ys = f.values(xs)
    if not np.all(np.isfinite(ys)):
        bad = float(xs[np.argmax(~np.isfinite(ys))])
        violations.append(GeneratorViolation("finite_values", f"Non-finite value at x = {bad}"))
    else:
        steps = np.diff(ys)
        if not np.all(steps > 0):
            position = int(np.argmax(~(steps > 0)))
            violations.append(GeneratorViolation(
                "monotone_sample",
                f"f({xs[position + 1]}) = {ys[position + 1]} is not above f({xs[position]}) = {ys[position]}"))

    return GeneratorReport(tuple(violations))


def build_generator(domain: Interval, pieces: Sequence[Primitive], breakpoints: Sequence[float] = (),
                    jump_values: Optional[Sequence[float]] = None, validate: bool = True) -> GeneratorFn:
    """Validated construction; jump values default to the midpoint of each gap."""
    pieces = tuple(pieces)
    breakpoints = tuple(float(t) for t in breakpoints)
    if jump_values is None:
        if len(pieces) != len(breakpoints) + 1:
            raise GeneratorInvariantError(
                f"Expected {len(breakpoints) + 1} pieces for {len(breakpoints)} breakpoints, got {len(pieces)}")
        jump_values = _default_jump_values(domain, pieces, breakpoints)
    f = GeneratorFn(domain, pieces, breakpoints, tuple(float(v) for v in jump_values))
    if validate:
        report = validate_generator(f)
        if not report.ok:
            first = report.first
            raise GeneratorInvariantError(f"Invalid generator: {first.message if first else 'unknown violation'}", report)
    return f


def identity_generator(domain: Interval = Interval(-math.inf, math.inf)) -> GeneratorFn:
    return GeneratorFn(domain, (identity(),))


def compose(f: GeneratorFn, g: GeneratorFn) -> GeneratorFn:
    """f∘g; breakpoints are g's plus the g-preimages of f's breakpoints."""
    hull = g.range_hull
    if not f.domain.contains_interval(hull):
        raise CompositionError(f"Range hull {hull} of the inner generator is not inside the outer domain {f.domain}")

    origin: Dict[float, Optional[int]] = {t: None for t in g.breakpoints}
    for index, s in enumerate(f.breakpoints):
        if hull.lo < s < hull.hi:
            b = float(g.inverse(s))
            origin.setdefault(b, index)
    breakpoints = sorted(origin)

    pieces: List[Primitive] = []
    edges = [g.domain.lo] + breakpoints + [g.domain.hi]
    for lo, hi in zip(edges[:-1], edges[1:]):
        middle = Interval(lo, hi).midpoint
        inner = g.pieces[int(np.searchsorted(g._bp, middle, side="left"))]
        outer = f.pieces[int(np.searchsorted(f._bp, float(g(middle)), side="left"))]
        pieces.append(ComposedPrimitive(outer, inner))

    jump_values = []
    for b in breakpoints:
        f_index = origin[b]
        jump_values.append(float(f.jump_values[f_index]) if f_index is not None else float(f(float(g(b)))))

    composed = GeneratorFn(g.domain, tuple(pieces), tuple(breakpoints), tuple(jump_values))
    logger.debug(f"Composed generator with {len(breakpoints)} breakpoint(s)")
    return composed


def reflect(f: GeneratorFn) -> GeneratorFn:
    return f.reflect()


def discontinuities(f: GeneratorFn) -> List[float]:
    return f.discontinuities()


def eval_with_limits(f: GeneratorFn, x: float) -> Tuple[float, float, float]:
    return f.eval_with_limits(x)


def gen_inverse(f: GeneratorFn) -> GenInverse:
    return f.inverse
