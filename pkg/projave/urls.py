"""
URL routes for projave: read-only JSON API.
"""
from django.urls import path
from . import api_views

urlpatterns = [
    path('data/runs/', api_views.api_runs, name='api_runs'),
    path('data/runs/<int:run_id>/', api_views.api_run_detail, name='api_run_detail'),
    path('data/constants/', api_views.api_constants, name='api_constants'),
]
