"""
URL configuration for the binmac project.

Only the capacity endpoints of the ``core`` app are routed; there is no admin
site because the project keeps no database.
"""
from django.urls import path, include

urlpatterns = [
    path('', include('core.urls')),
]
