"""
Output formats shared by the management commands and the JSON controllers.

Rates and values are computed in nats and converted to bits only here.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import pandas as pd

from services.errors import ParseError
from services.info_theory import RatePair, to_bits
from services.kkt import KktPoint
from services.solver import RegionBoundary, Solution

logger = logging.getLogger(__name__)

UNITS = ('nats', 'bits')
FLOAT_FORMAT = '%.12g'
SOLUTION_FIELDS = ('p1', 'p2', 'rate1', 'rate2', 'value', 'unit',
                   'location', 'corner', 'method', 'p2_tolerance')


@dataclass(frozen=True)
class SolutionRecord:
    """A Solution as printed: flat fields, information in the chosen unit."""
    p1: float
    p2: float
    rate1: float
    rate2: float
    value: float
    unit: str
    location: str
    corner: str
    method: str
    p2_tolerance: Optional[float]


def check_unit(unit: str) -> str:
    if unit not in UNITS:
        raise ParseError(f"unit must be one of {UNITS}, got {unit!r}")
    return unit


def _convert(value: float, unit: str) -> float:
    return float(to_bits(value)) if unit == 'bits' else float(value)


def solution_record(sol: Solution, unit: str = 'nats') -> SolutionRecord:
    check_unit(unit)
    return SolutionRecord(
        p1=sol.input.p1,
        p2=sol.input.p2,
        rate1=_convert(sol.rates.r1, unit),
        rate2=_convert(sol.rates.r2, unit),
        value=_convert(sol.value, unit),
        unit=unit,
        location=sol.location.value,
        corner=sol.corner,
        method=sol.method.value,
        p2_tolerance=sol.p2_tolerance,
    )


def json_float(value):
    """Floats cut to FLOAT_FORMAT significant digits; other values pass through."""
    if isinstance(value, float):
        return float(FLOAT_FORMAT % value)
    return value


def record_to_dict(record: SolutionRecord) -> dict:
    data = asdict(record)
    return {name: json_float(data[name]) for name in SOLUTION_FIELDS}


def dumps_record(record: SolutionRecord) -> str:
    return json.dumps(record_to_dict(record), indent=2) + '\n'


def loads_record(text: str) -> SolutionRecord:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"solution is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or list(data) != list(SOLUTION_FIELDS):
        raise ParseError(f"solution must carry exactly the fields {SOLUTION_FIELDS}")
    check_unit(data['unit'])
    return SolutionRecord(**data)


def kkt_points_to_list(points: Sequence[KktPoint], unit: str = 'nats') -> List[dict]:
    check_unit(unit)
    return [
        {
            'p1': json_float(p.input.p1),
            'p2': json_float(p.input.p2),
            'value': json_float(_convert(p.value, unit)),
            'unit': unit,
            'residual': json_float(p.residual),
            'kind': p.kind.value,
            'on_boundary': p.on_boundary,
        }
        for p in points
    ]


def region_frame(boundary: RegionBoundary, unit: str = 'nats') -> pd.DataFrame:
    check_unit(unit)
    frame = boundary.to_frame()
    if unit == 'bits':
        frame[['r1', 'r2']] = to_bits(frame[['r1', 'r2']])
    return frame


def outline_frame(outline: Sequence[RatePair], unit: str = 'nats') -> pd.DataFrame:
    check_unit(unit)
    frame = pd.DataFrame([(p.r1, p.r2) for p in outline], columns=['r1', 'r2'])
    if unit == 'bits':
        frame = to_bits(frame)
    return frame


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def frame_to_records(frame: pd.DataFrame) -> List[dict]:
    return [{key: json_float(float(v)) for key, v in row.items()} for row in frame.to_dict(orient='records')]
