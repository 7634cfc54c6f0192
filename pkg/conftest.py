"""
Configure django before the latentbo tests are collected, as
`python manage.py test latentbo` would.
"""

import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'mfoptim.settings')
django.setup()
