"""
URL configuration for projave.
Routes: admin, read-only run API
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', include('projave.urls')),
]
