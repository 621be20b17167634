"""
ASGI config for the binmac project.

Exposes the JSON capacity endpoints as ``application``.
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'binmac.settings')

application = get_asgi_application()
