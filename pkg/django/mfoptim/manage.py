#!/usr/bin/env python
"""
Command line utility for the mfoptim project:

    python manage.py fit DATASET --sidecar SIDECAR
    python manage.py benchmark --problem borehole --reps 20
    python manage.py rrmse --family wing
    python manage.py test latentbo

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
import sys

if __name__ == '__main__':
    here = os.path.dirname(os.path.abspath(__file__))
    # latentbo lives next to this file, the mfoptim package one level up.
    for path in (os.path.dirname(here), here):
        if path not in sys.path:
            sys.path.insert(0, path)

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'mfoptim.settings')

    from django.core.management import execute_from_command_line
    execute_from_command_line(sys.argv)
