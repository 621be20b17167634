import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "binmac.settings")
django.setup()
