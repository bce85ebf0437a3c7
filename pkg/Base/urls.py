"""
URL configuration for Base project.

The planning API of the `scar` app is mounted under /api/.
"""

from django.urls import path, include

urlpatterns = [
    path("api/", include("scar.urls")),
]
