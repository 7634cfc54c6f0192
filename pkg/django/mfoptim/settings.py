"""
Django settings for the mfoptim project.

Environment variables:
    LATENTBO_OUTPUT_DIR     default output directory of the commands
    LATENTBO_BROKER_URL     celery broker; empty runs repetitions in-process
    LATENTBO_CONFIG_SCHEMA  XML Schema used to validate configuration files
    LATENTBO_LOG_LEVEL      level of the latentbo loggers (default INFO)
    LATENTBO_SLOW_TESTS     non-empty enables the long running tests

This file is part of LatentBO.

License:
    Copyright 2026 The LatentBO Project

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
"""

import os

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
REPOSITORY_ROOT = os.path.dirname(os.path.dirname(PROJECT_ROOT))

DEBUG = False

SECRET_KEY = os.environ.get('LATENTBO_SECRET_KEY', 'latentbo-has-no-web-surface')

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'latentbo',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

USE_TZ = True

TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'

LATENTBO_OUTPUT_DIR = os.environ.get('LATENTBO_OUTPUT_DIR', 'latentbo-output')

LATENTBO_CONFIG_SCHEMA = os.environ.get('LATENTBO_CONFIG_SCHEMA',
    os.path.join(REPOSITORY_ROOT, 'docs', 'config.xsd'))

# Non-empty enables the long running tests.
LATENTBO_SLOW_TESTS = os.environ.get('LATENTBO_SLOW_TESTS', '')

CELERY_BROKER_URL = os.environ.get('LATENTBO_BROKER_URL', '')
CELERY_RESULT_BACKEND = os.environ.get('LATENTBO_RESULT_BACKEND', CELERY_BROKER_URL)
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_ALWAYS_EAGER = not CELERY_BROKER_URL

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'latentbo': {
            'handlers': ['console'],
            'level': os.environ.get('LATENTBO_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
