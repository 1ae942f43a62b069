from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Union
import math
import numpy as np

from generator_means.src.interval import Interval

ArrayLike = Union[float, np.ndarray]


def _out(value: np.ndarray) -> ArrayLike:
    return value if value.ndim else float(value)


class Primitive(ABC):
    """A continuous, strictly increasing analytic function with an exact inverse.

    All methods accept floats or numpy arrays. Values outside the natural
    domain (or range, for `inverse`) come back as nan or ±inf instead of raising;
    generators check their domains before calling in.
    """
    kind: ClassVar[str] = ""

    @property
    @abstractmethod
    def natural_domain(self) -> Interval: ...

    @abstractmethod
    def _value(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _derivative(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _second_derivative(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _inverse(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def params(self) -> Dict[str, Any]: ...

    def value(self, x: ArrayLike) -> ArrayLike:
        with np.errstate(all="ignore"):
            return _out(self._value(np.asarray(x, dtype=float)))

    def derivative(self, x: ArrayLike) -> ArrayLike:
        with np.errstate(all="ignore"):
            return _out(self._derivative(np.asarray(x, dtype=float)))

    def second_derivative(self, x: ArrayLike) -> ArrayLike:
        with np.errstate(all="ignore"):
            return _out(self._second_derivative(np.asarray(x, dtype=float)))

    def inverse(self, u: ArrayLike) -> ArrayLike:
        with np.errstate(all="ignore"):
            return _out(self._inverse(np.asarray(u, dtype=float)))

    def range_on(self, interval: Interval) -> Interval:
        """Image of an open subinterval of the natural domain (limits at the ends)."""
        return Interval(float(self.value(interval.lo)), float(self.value(interval.hi)))

    def reflected(self) -> "Primitive":
        return ReflectedPrimitive(self)

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": self.params()}


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"Primitive parameter {name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class AffinePrimitive(Primitive):
    slope: float
    intercept: float = 0.0
    kind: ClassVar[str] = "affine"

    def __post_init__(self) -> None:
        _require_finite("slope", self.slope)
        _require_finite("intercept", self.intercept)
        if self.slope <= 0:
            raise ValueError(f"Affine slope must be positive, got {self.slope}")

    @property
    def natural_domain(self) -> Interval:
        return Interval(-math.inf, math.inf)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return self.slope * x + self.intercept

    def _derivative(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(x, self.slope)

    def _second_derivative(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(x)

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        return (u - self.intercept) / self.slope

    def params(self) -> Dict[str, Any]:
        return {"slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class PowerPrimitive(Primitive):
    """sign(p) * x**p on (0, inf); the sign keeps negative exponents increasing."""
    exponent: float
    kind: ClassVar[str] = "power"

    def __post_init__(self) -> None:
        _require_finite("exponent", self.exponent)
        if self.exponent == 0:
            raise ValueError("Power exponent must be non-zero")

    @property
    def sign(self) -> float:
        return 1.0 if self.exponent > 0 else -1.0

    @property
    def natural_domain(self) -> Interval:
        return Interval(0.0, math.inf)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return np.where(x >= 0, self.sign * np.power(x, self.exponent), np.nan)

    def _derivative(self, x: np.ndarray) -> np.ndarray:
        return abs(self.exponent) * np.power(x, self.exponent - 1.0)

    def _second_derivative(self, x: np.ndarray) -> np.ndarray:
        p = self.exponent
        return abs(p) * (p - 1.0) * np.power(x, p - 2.0)

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        base = self.sign * u
        return np.where(base >= 0, np.power(base, 1.0 / self.exponent), np.nan)

    def params(self) -> Dict[str, Any]:
        return {"exponent": self.exponent}


@dataclass(frozen=True)
class ExponentialPrimitive(Primitive):
    """sign(c) * exp(c * x) on the whole line."""
    rate: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self) -> None:
        _require_finite("rate", self.rate)
        if self.rate == 0:
            raise ValueError("Exponential rate must be non-zero")

    @property
    def sign(self) -> float:
        return 1.0 if self.rate > 0 else -1.0

    @property
    def natural_domain(self) -> Interval:
        return Interval(-math.inf, math.inf)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return self.sign * np.exp(self.rate * x)

    def _derivative(self, x: np.ndarray) -> np.ndarray:
        return abs(self.rate) * np.exp(self.rate * x)

    def _second_derivative(self, x: np.ndarray) -> np.ndarray:
        return abs(self.rate) * self.rate * np.exp(self.rate * x)

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        return np.log(self.sign * u) / self.rate

    def params(self) -> Dict[str, Any]:
        return {"rate": self.rate}


@dataclass(frozen=True)
class LogarithmPrimitive(Primitive):
    base: float = math.e
    kind: ClassVar[str] = "logarithm"

    def __post_init__(self) -> None:
        _require_finite("base", self.base)
        if self.base <= 1:
            raise ValueError(f"Logarithm base must exceed 1, got {self.base}")

    @property
    def natural_domain(self) -> Interval:
        return Interval(0.0, math.inf)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return np.where(x >= 0, np.log(x), np.nan) / math.log(self.base)

    def _derivative(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (x * math.log(self.base))

    def _second_derivative(self, x: np.ndarray) -> np.ndarray:
        return -1.0 / (x * x * math.log(self.base))

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        return np.power(self.base, u)

    def params(self) -> Dict[str, Any]:
        return {"base": self.base}


@dataclass(frozen=True)
class ComposedPrimitive(Primitive):
    """outer(inner(x)); kept as a node, never simplified."""
    outer: Primitive
    inner: Primitive
    kind: ClassVar[str] = "composed"

    @property
    def natural_domain(self) -> Interval:
        inner_domain = self.inner.natural_domain
        inner_range = self.inner.range_on(inner_domain)
        reachable = inner_range.intersection(self.outer.natural_domain)
        if reachable is None:
            raise ValueError("Composed primitive has an empty natural domain")
        lo = inner_domain.lo if reachable.lo <= inner_range.lo else float(self.inner.inverse(reachable.lo))
        hi = inner_domain.hi if reachable.hi >= inner_range.hi else float(self.inner.inverse(reachable.hi))
        return Interval(lo, hi)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return self.outer._value(self.inner._value(x))

    def _derivative(self, x: np.ndarray) -> np.ndarray:
        return self.outer._derivative(self.inner._value(x)) * self.inner._derivative(x)

    def _second_derivative(self, x: np.ndarray) -> np.ndarray:
        g = self.inner._value(x)
        dg = self.inner._derivative(x)
        return self.outer._second_derivative(g) * dg * dg + self.outer._derivative(g) * self.inner._second_derivative(x)

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        return self.inner._inverse(self.outer._inverse(u))

    def params(self) -> Dict[str, Any]:
        return {"outer": self.outer.to_json(), "inner": self.inner.to_json()}


@dataclass(frozen=True)
class ReflectedPrimitive(Primitive):
    """-base(-x) on the reflected natural domain."""
    base: Primitive
    kind: ClassVar[str] = "reflected"

    @property
    def natural_domain(self) -> Interval:
        return self.base.natural_domain.reflected()

    def _value(self, x: np.ndarray) -> np.ndarray:
        return -self.base._value(-x)

    def _derivative(self, x: np.ndarray) -> np.ndarray:
        return self.base._derivative(-x)

    def _second_derivative(self, x: np.ndarray) -> np.ndarray:
        return -self.base._second_derivative(-x)

    def _inverse(self, u: np.ndarray) -> np.ndarray:
        return -self.base._inverse(-u)

    def reflected(self) -> Primitive:
        return self.base

    def params(self) -> Dict[str, Any]:
        return {"base": self.base.to_json()}


def identity() -> Primitive:
    return AffinePrimitive(1.0, 0.0)
