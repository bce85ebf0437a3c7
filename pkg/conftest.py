import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "Base.settings")
django.setup()
