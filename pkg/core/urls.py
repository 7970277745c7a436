"""
URL configuration for the viotrack project.

Experiments are driven from management commands; the admin lists the
stored experiment runs.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path("admin/", admin.site.urls),
]
