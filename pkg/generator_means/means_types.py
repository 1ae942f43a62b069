import sys
from typing import Any, Dict, List, TypedDict, Union

if sys.version_info >= (3, 11):
    from typing import NotRequired
else:
    from typing_extensions import NotRequired

ExtendedRealJson = Union[float, int, str]  # numbers, or "inf" / "-inf"

class PieceDataType(TypedDict):
    kind: str  # affine | power | exponential | logarithm | composed | reflected
    params: Dict[str, Any]

class GeneratorDataType(TypedDict):
    domain: List[ExtendedRealJson]
    pieces: List[PieceDataType]
    breakpoints: NotRequired[List[float]]
    jump_values: NotRequired[List[float]]
