"""
Define latentbo.management as a Python package.

This file is part of LatentBO.
"""
