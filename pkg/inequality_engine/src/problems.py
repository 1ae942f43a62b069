from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union
import logging
import math
import numpy as np

from generator_means.src.generator import GeneratorFn, build_generator, identity_generator
from generator_means.src.interval import Interval
from generator_means.src.primitives import PowerPrimitive
from inequality_engine.src.couplers import (
    Coupler,
    mean_coupler,
    product_coupler,
    sum_coupler,
)
from utils.errors import ArityError, DomainError, RangeError, UnsupportedError

logger = logging.getLogger("Problems")

ArrayLike = Union[float, np.ndarray]

POSITIVE_AXIS = Interval(0.0, math.inf)
BOX_CHECK_SAMPLES = 256


@dataclass(frozen=True)
class InequalityProblem:
    """M_0(φ(x_1), ..., φ(x_n)) ≤ Φ(M_1(x_{·1}), ..., M_k(x_{·k})) on the box I.

    generators[0] is f_0 on its full domain; generators[j] (j ≥ 1) is f_j
    restricted to box[j - 1]. Build instances with `build_problem`, which
    validates the domain chain.
    """
    k: int
    generators: Tuple[GeneratorFn, ...]
    phi: Coupler
    Phi: Coupler
    box: Tuple[Interval, ...]
    name: str = ""
    reference_points: Tuple[Tuple[float, ...], ...] = ()  # a known point family, replayed by `check`

    @property
    def f0(self) -> GeneratorFn:
        return self.generators[0]

    @property
    def fs(self) -> Tuple[GeneratorFn, ...]:
        return self.generators[1:]

    @property
    def same_couplers(self) -> bool:
        return self.phi == self.Phi

    @property
    def range_box(self) -> Tuple[Interval, ...]:
        """conv(f_j(I_j)) for j = 1..k."""
        return tuple(f.range_hull for f in self.fs)

    @property
    def continuous_inner(self) -> bool:
        return all(f.is_continuous for f in self.fs)

    def box_lo(self) -> np.ndarray:
        return np.asarray([interval.lo for interval in self.box], dtype=float)

    def box_hi(self) -> np.ndarray:
        return np.asarray([interval.hi for interval in self.box], dtype=float)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """Coordinate-wise compactification of box points (last axis = coordinate)."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.asarray(self.box[j].to_unit(x[..., j]), dtype=float) for j in range(self.k)], axis=-1)

    def from_unit(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.stack([np.asarray(self.box[j].from_unit(s[..., j]), dtype=float) for j in range(self.k)], axis=-1)

    def sample_box(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.from_unit(rng.uniform(0.0, 1.0, (count, self.k)))

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "k": self.k,
            "generators": [f.to_json() for f in self.generators],
            "phi": self.phi.to_json(),
            "Phi": self.Phi.to_json(),
            "box": [interval.to_json() for interval in self.box],
        }
        if self.name:
            data["name"] = self.name
        if self.reference_points:
            data["reference_points"] = [list(row) for row in self.reference_points]
        return data


def build_problem(generators: Sequence[GeneratorFn], phi: Coupler, Phi: Coupler,
                  box: Optional[Sequence[Interval]] = None, name: str = "",
                  reference_points: Sequence[Sequence[float]] = ()) -> InequalityProblem:
    if len(generators) < 2:
        raise ArityError(f"A problem needs f_0 and at least one f_j, got {len(generators)} generator(s)")
    k = len(generators) - 1
    if phi.arity != k or Phi.arity != k:
        raise ArityError(f"Couplers must have arity {k}, got phi={phi.arity}, Phi={Phi.arity}")
    if box is None:
        box = [f.domain for f in generators[1:]]
    box = tuple(box)
    if len(box) != k:
        raise ArityError(f"Box has dimension {len(box)}, expected {k}")
    for j, (f, interval) in enumerate(zip(generators[1:], box), start=1):
        if not f.domain.contains_interval(interval):
            raise DomainError(f"Box interval {interval} is not inside the domain {f.domain} of f_{j}")
    phi.check_box(box)
    Phi.check_box(box)

    f0 = generators[0]
    image = phi.image(box)
    if not f0.domain.contains_interval(image):
        raise DomainError(f"phi maps the box onto {image}, which leaves the domain {f0.domain} of f_0")
    restricted = (f0,) + tuple(f.restrict(interval) for f, interval in zip(generators[1:], box))
    reference = tuple(tuple(float(v) for v in row) for row in reference_points)
    for row in reference:
        if len(row) != k or not all(interval.contains(v) for interval, v in zip(box, row)):
            raise DomainError(f"Reference point {list(row)} is not a point of the box {list(box)}")
    problem = InequalityProblem(k, restricted, phi, Phi, box, name, reference)

    rng = np.random.default_rng(0)
    values = np.asarray(phi(problem.sample_box(rng, BOX_CHECK_SAMPLES)), dtype=float)
    if not np.all(f0.domain.contains(values)):
        raise DomainError(f"phi leaves the domain {f0.domain} of f_0 on sampled box points")
    logger.debug(f"Built problem '{name}' with k={k}, phi={phi.kind}, Phi={Phi.kind}")
    return problem


# Transfer function

def psi_values(p: InequalityProblem, u: np.ndarray) -> np.ndarray:
    """Vectorized Ψ without checks; nan where u leaves the range hulls."""
    u = np.asarray(u, dtype=float)
    x = np.stack([f.inverse.values(u[..., j]) for j, f in enumerate(p.fs)], axis=-1)
    y = np.asarray(p.phi(x), dtype=float)
    inside = p.f0.domain.contains(y)
    values = p.f0.values(np.where(inside, y, p.f0.domain.midpoint))
    return np.where(inside, values, np.nan)


def psi_eval(p: InequalityProblem, u: ArrayLike) -> ArrayLike:
    """Ψ(u) = f_0(φ(f_1^(-1)(u_1), ..., f_k^(-1)(u_k)))."""
    if not p.continuous_inner:
        jumps = {j: f.discontinuities() for j, f in enumerate(p.fs, start=1) if not f.is_continuous}
        raise UnsupportedError(f"Psi needs continuous f_1..f_k; jumps at {jumps}")
    arr = np.asarray(u, dtype=float)
    if arr.shape[-1:] != (p.k,):
        raise ArityError(f"Psi takes {p.k} coordinates, got shape {arr.shape}")
    for j, hull in enumerate(p.range_box):
        if not np.all(hull.contains(arr[..., j])):
            raise RangeError(f"Coordinate {j + 1} of {arr.tolist()} is outside the range hull {hull}")
    out = psi_values(p, arr)
    return out if np.ndim(out) else float(out)


# Structural prechecks

@dataclass(frozen=True)
class GammaReport:
    status: str  # dense | unknown
    reason: str
    coordinate: Optional[int] = None

    @property
    def dense(self) -> bool:
        return self.status == "dense"

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status, "reason": self.reason}
        if self.coordinate is not None:
            data["coordinate"] = self.coordinate
        return data


def gamma_density(p: InequalityProblem) -> GammaReport:
    """Is Γ = {t : Φ(t) is a continuity point of f_0} dense in the box?"""
    if p.f0.is_continuous:
        return GammaReport("dense", "f_0 is continuous, so every box point is in Gamma")
    # f_0 has finitely many jumps; moving one strictly monotone coordinate leaves them.
    for j in range(p.k):
        if p.Phi.strictly_increasing_in(j):
            return GammaReport("dense", f"Phi is strictly increasing in coordinate {j + 1}", j + 1)
    return GammaReport("unknown", "f_0 is discontinuous and Phi is strictly increasing in no coordinate")


@dataclass(frozen=True)
class PrecheckReport:
    status: str  # consistent | must_fail | not_applicable
    reason: str
    generator: Optional[int] = None
    jump: Optional[float] = None

    @property
    def must_fail(self) -> bool:
        return self.status == "must_fail"

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"status": self.status, "reason": self.reason}
        if self.generator is not None:
            data["witness"] = {"j": self.generator, "t": self.jump}
        return data


def continuity_precheck(p: InequalityProblem) -> PrecheckReport:
    """With φ = Φ separately strictly increasing, the inequality forces continuity."""
    if not p.same_couplers:
        return PrecheckReport("not_applicable", "phi and Phi differ")
    if not p.phi.strictly_increasing:
        return PrecheckReport("not_applicable", "phi is not separately strictly increasing")
    if p.k == 1:
        return PrecheckReport("not_applicable", "a single coordinate leaves no room to move the other means")
    for j, f in enumerate(p.fs, start=1):
        jumps = f.discontinuities()
        if jumps:
            return PrecheckReport("must_fail", f"f_{j} jumps at {jumps[0]:.12g} inside the box", j, jumps[0])
    image = p.phi.image(p.box)
    for t in p.f0.discontinuities():
        if image.contains(t):
            return PrecheckReport("must_fail", f"f_0 jumps at {t:.12g} inside phi(I) = {image}", 0, t)
    return PrecheckReport("consistent", "all generators are continuous where the inequality reaches them")


# Builders for the classical families

def power_generator(exponent: float, domain: Interval = POSITIVE_AXIS) -> GeneratorFn:
    return build_generator(POSITIVE_AXIS, [PowerPrimitive(exponent)]).restrict(domain)


def _positive_box(k: int, box: Optional[Sequence[Interval]]) -> Tuple[Interval, ...]:
    return tuple(box) if box is not None else (POSITIVE_AXIS,) * k


def minkowski_problem(p: float, k: int = 2, box: Optional[Sequence[Interval]] = None) -> InequalityProblem:
    """M_p(x + y) ≤ M_p(x) + M_p(y) for power means in k summands."""
    f = power_generator(p)
    return build_problem([f] * (k + 1), sum_coupler(k), sum_coupler(k), _positive_box(k, box), f"minkowski_p{p:g}")


def holder_problem(exponents: Sequence[float], box: Optional[Sequence[Interval]] = None,
                   outer: Optional[float] = None) -> InequalityProblem:
    """M_0(x_1 ··· x_k) ≤ M_1(x_1) ··· M_k(x_k); M_0 arithmetic unless `outer` is given."""
    k = len(exponents)
    f0 = identity_generator(POSITIVE_AXIS) if outer is None else power_generator(outer)
    fs = [power_generator(e) for e in exponents]
    name = "holder_" + "_".join(f"{e:g}" for e in exponents)
    return build_problem([f0] + fs, product_coupler(k), product_coupler(k), _positive_box(k, box), name)


def jensen_problem(f: GeneratorFn, box: Optional[Sequence[Interval]] = None, name: str = "jensen") -> InequalityProblem:
    """M_f((x + y) / 2) ≤ (M_f(x) + M_f(y)) / 2, the Jensen convexity of the mean M_f."""
    box = tuple(box) if box is not None else (f.domain, f.domain)
    return build_problem([f, f, f], mean_coupler(2), mean_coupler(2), box, name)


def reflect_problem(p: InequalityProblem) -> InequalityProblem:
    """Instance whose inequality holds iff the reverse inequality of `p` holds."""
    generators = [p.f0.reflect()] + [f.reflect() for f in p.fs]
    box = [interval.reflected() for interval in p.box]
    name = f"reflected_{p.name}" if p.name else "reflected"
    return build_problem(generators, p.phi.reflected(), p.Phi.reflected(), box, name)

