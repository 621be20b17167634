"""
WSGI config for the binmac project.

Exposes the JSON capacity endpoints as ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'binmac.settings')

application = get_wsgi_application()
