"""
Django settings for Base project.

The project hosts the SCAR replenishment scheduler: the `scar` app carries the
scheduling engine, the simulator, the experiment commands and a small planning
API. There is no database; everything runs in memory.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    "DJANGO_SECRET_KEY",
    "django-insecure-scar-7q!v2m^k1w3e0x#r9t8y6u5i4o3p2a1s0d9f8g7h6j5",
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get("DJANGO_DEBUG", "1") == "1"

ALLOWED_HOSTS = [
    '*',
]
CORS_ALLOW_ALL_ORIGINS = True

# Application definition

INSTALLED_APPS = [
    'scar',
    'rest_framework',
    'corsheaders',
]

MIDDLEWARE = [
    "corsheaders.middleware.CorsMiddleware",
    "django.middleware.security.SecurityMiddleware",
    "django.middleware.common.CommonMiddleware",
]

ROOT_URLCONF = "Base.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.request",
            ],
        },
    },
]

WSGI_APPLICATION = "Base.wsgi.application"


# No persistence: scenarios come from files or request bodies, results go to
# CSV/JSON files.
DATABASES = {}

REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'UNAUTHENTICATED_USER': None,
    'EXCEPTION_HANDLER': 'scar.utils.exceptions.custom_exception_handler',
}


# ============================================================================
# SCAR engine
# ============================================================================

SCAR = {
    "DEFAULT_SCENARIO": os.environ.get(
        "SCAR_DEFAULT_SCENARIO", str(BASE_DIR / "scenarios" / "default.json")
    ),
    "MC_SAMPLES": int(os.environ.get("SCAR_MC_SAMPLES", 10000)),
    "WORKERS": int(os.environ.get("SCAR_WORKERS", 1)),
    # Horizon sets per number of user agents (4 under-, 5 fully-, 6 over-utilised)
    "DEFAULT_HORIZONS": {
        4: [5, 7, 12],
        5: [7, 8, 9],
        6: [7, 8, 9],
    },
    "DEFAULT_REPEATS": 40,
    "BRUTE_FORCE_LIMIT": 10**6,
}


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "scar": {
            "handlers": ["console"],
            "level": os.environ.get("SCAR_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True
