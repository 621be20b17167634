"""
JSON endpoints for solve, region and kkt.

Query parameters mirror the management command flags. Parse problems answer
400, domain and degenerate-channel problems 422.
"""
import logging

from django.conf import settings
from django.http import JsonResponse
from django.views.decorators.http import require_GET

from services.errors import CapacityError, ParseError
from services.info_theory import parse_channel, parse_weights
from services.kkt import find_kkt_points
from services.serializers import (
    check_unit,
    frame_to_records,
    kkt_points_to_list,
    record_to_dict,
    region_frame,
    solution_record,
)
from services.solver import region_boundary, solve

logger = logging.getLogger(__name__)


def _param(request, name, cast=str, default=None):
    raw = request.GET.get(name)
    if raw is None:
        if default is None:
            raise ParseError(f"missing query parameter '{name}'")
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ParseError(f"invalid value for '{name}': {raw!r}") from exc


def _error(exc: CapacityError) -> JsonResponse:
    status = 400 if isinstance(exc, ParseError) else 422
    logger.info("capacity_request_rejected", extra={'status': status, 'error': str(exc)})
    return JsonResponse({'error': str(exc), 'kind': type(exc).__name__}, status=status)


@require_GET
def solve_view(request):
    """GET /solve/?channel=a,b,c,d&weights=w1,w2[&eps&grid&unit]"""
    try:
        channel = parse_channel(_param(request, 'channel'))
        weights = parse_weights(_param(request, 'weights'))
        unit = check_unit(_param(request, 'unit', default='nats'))
        solution = solve(channel, weights,
                         _param(request, 'grid', int, settings.CAPACITY_GRID),
                         _param(request, 'eps', float, settings.CAPACITY_EPS))
    except CapacityError as exc:
        return _error(exc)
    return JsonResponse(record_to_dict(solution_record(solution, unit)))


@require_GET
def region_view(request):
    """GET /region/?channel=a,b,c,d[&sweep&grid&eps&unit]"""
    try:
        channel = parse_channel(_param(request, 'channel'))
        unit = check_unit(_param(request, 'unit', default='nats'))
        boundary = region_boundary(channel,
                                   num_weights=_param(request, 'sweep', int, settings.REGION_SWEEP),
                                   eps=_param(request, 'eps', float, settings.CAPACITY_EPS),
                                   grid_n=_param(request, 'grid', int, settings.CAPACITY_GRID))
    except CapacityError as exc:
        return _error(exc)
    return JsonResponse({'rows': frame_to_records(region_frame(boundary, unit))})


@require_GET
def kkt_view(request):
    """GET /kkt/?channel=a,b,c,d&weights=w1,w2[&grid&unit]"""
    try:
        channel = parse_channel(_param(request, 'channel'))
        weights = parse_weights(_param(request, 'weights'))
        unit = check_unit(_param(request, 'unit', default='nats'))
        points = find_kkt_points(channel, weights, _param(request, 'grid', int, settings.KKT_SEED_GRID))
    except CapacityError as exc:
        return _error(exc)
    return JsonResponse({'points': kkt_points_to_list(points, unit)})
