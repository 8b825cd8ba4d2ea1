"""
Read-only JSON API over recorded runs, plus geometry constants on demand.
"""
import math

from django.http import JsonResponse

from .exceptions import ProjaveError

# Page size for /data/runs/
RUN_LIST_LIMIT = 100


def json_response(data, status=200):
    """JsonResponse with the API's cache header."""
    response = JsonResponse(data, status=status)
    response['Cache-Control'] = 'public, max-age=60'
    return response


def _clean(value):
    # NaN is not valid JSON
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _run_summary(run):
    return {
        'id': run.pk,
        'command': run.command,
        'seed': run.seed,
        'passed': run.passed,
        'rows': run.row_count,
        'failed': run.failed_count,
        'library_version': run.library_version,
        'wall_clock_seconds': run.wall_clock_seconds,
        'last_drift_count': run.last_drift_count,
        'created_at': run.created_at.isoformat(),
    }


# ============================================================
# Endpoints
# ============================================================

def api_runs(request):
    """Most recent runs, newest first; ?command= filters by subcommand."""
    from .models import VerificationRun
    runs = VerificationRun.objects.all()
    command = request.GET.get('command')
    if command:
        runs = runs.filter(command=command)
    return json_response({'data': [_run_summary(run) for run in runs[:RUN_LIST_LIMIT]]})


def api_run_detail(request, run_id):
    """Header and rows of one run."""
    from .models import VerificationRun
    run = VerificationRun.objects.filter(pk=run_id).first()
    if not run:
        return json_response({'error': 'Run not found'}, status=404)
    rows = [{key: _clean(value) for key, value in row.items()} for row in run.report_rows()]
    return json_response({'run': _run_summary(run), 'header': run.header, 'rows': rows})


def api_constants(request):
    """omega_n, q_{n,p}, c_{n,p} and a_{n,p} for ?n=&p=."""
    from .geometry import classical_constant, q_coefficient, sharp_constant, unit_ball_volume
    try:
        n = int(request.GET.get('n', ''))
        p = float(request.GET.get('p', ''))
    except ValueError:
        return json_response({'error': "query parameters 'n' (integer) and 'p' (number) are required"},
                             status=400)
    try:
        data = {
            'n': n,
            'p': p,
            'omega': unit_ball_volume(n),
            'q': q_coefficient(n, p),
            'sharp_constant': sharp_constant(n, p),
            'classical_constant': classical_constant(n, p),
        }
    except ProjaveError as e:
        return json_response({'error': str(e)}, status=400)
    return json_response({'data': data})
