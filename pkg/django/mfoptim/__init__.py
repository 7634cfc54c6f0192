"""
The mfoptim django project: settings and the celery application that
hosts the latentbo app.

This file is part of LatentBO.
"""

from mfoptim.workers import app as celery_app

__all__ = ('celery_app',)
