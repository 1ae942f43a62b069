import sys
from typing import List, Literal, Optional, TypedDict

if sys.version_info >= (3, 11):
    from typing import NotRequired
else:
    from typing_extensions import NotRequired

from generator_means.means_types import ExtendedRealJson, GeneratorDataType

class CouplerDataType(TypedDict):
    kind: str  # sum | product | affine | power_sum | arithmetic_mean | reflected
    c0: NotRequired[float]
    c: NotRequired[List[float]]
    r: NotRequired[float]
    base: NotRequired["CouplerDataType"]

class ProblemDataType(TypedDict):
    k: int
    generators: List[GeneratorDataType]
    phi: CouplerDataType
    Phi: CouplerDataType
    box: NotRequired[List[List[ExtendedRealJson]]]
    name: NotRequired[str]
    reference_points: NotRequired[List[List[float]]]

class EngineSettingsDataType(TypedDict):
    seed: int
    falsify_budget: int
    falsify_restarts: int
    hill_climb_steps: int
    grid_size: int
    sample_size: int
    cutting_plane_rounds: int
    concavity_pairs: int
    hessian_grid: int
    violation_tolerance: float
    certificate_tolerance: float
    concavity_tolerance: float
    hessian_tolerance: float
    e1_tolerance: float
    max_workers: int

class CertificateDataType(TypedDict):
    grid: List[List[float]]
    coeffs: List[List[float]]
    residual: float
    rounds: NotRequired[int]

# "lambda" is a Python keyword, hence the functional form
CounterexampleDataType = TypedDict("CounterexampleDataType", {
    "points": List[List[float]],
    "lambda": List[float],
    "lhs": float,
    "rhs": float,
    "violation": float,
    "source": str,
})

class RunConfigDataType(TypedDict):
    command: Literal["eval", "check", "certify", "falsify", "report"]
    problem_path: Optional[str]
    seed: int
    output: Literal["json", "text"]
    out_path: Optional[str]
    settings: EngineSettingsDataType
    verbose: bool
