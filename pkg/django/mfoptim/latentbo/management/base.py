"""
Common plumbing of the LatentBO management commands: logging setup and
the layering of configuration files, manifests and flags.

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

import logging

from django.core.management.base import BaseCommand, CommandError

from latentbo import ConfigError
from latentbo.config import RunConfig

logger = logging.getLogger('latentbo')

# Command line option -> RunConfig field.
FLAG_FIELDS = {
    'problem': 'problem',
    'family': 'problem',
    'reps': 'repetitions',
    'budget': 'budget',
    'stall_window': 'stall_window',
    'max_iterations': 'max_iterations',
    'epsilon': 'epsilon',
    'coverage_v': 'coverage_v',
    'restarts': 'restarts',
    'workers': 'workers',
    'seed': 'seed',
    'strategy': 'strategy',
    'oracle_points': 'oracle_points',
    'output': 'output',
    'penalty_data': 'penalty_data',
    'sidecar': 'sidecar',
}


class LatentBOCommand(BaseCommand):
    """
    A management command configured by an optional XML document,
    optionally a replayed manifest, and flags (flags win).
    """

    def add_common_arguments(self, parser):
        parser.add_argument('-c', '--config', dest='config', metavar='CONFIG',
            help='Use configuration file CONFIG.')
        parser.add_argument('--seed', dest='seed', type=int, help='Base random seed.')
        parser.add_argument('-o', '--output', dest='output',
            help='Output directory (default: LATENTBO_OUTPUT_DIR).')

    def add_emulator_arguments(self, parser):
        parser.add_argument('--epsilon', dest='epsilon', type=float,
            help='Weight of the interval score penalty (0 disables it).')
        parser.add_argument('--coverage-v', dest='coverage_v', type=float,
            help='The interval score covers the central (1-v) interval.')
        parser.add_argument('--restarts', dest='restarts', type=int,
            help='Number of hyperparameter search restarts.')

    def setup_logging(self, verbosity):
        """
        Setup the logging facility.
        """
        if verbosity > 1:
            logger.setLevel(logging.DEBUG)
        elif verbosity > 0:
            logger.setLevel(logging.INFO)
        else:
            logger.setLevel(logging.WARNING)

    def load_config(self, options, manifest=None):
        """
        Layer defaults, the XML configuration, a manifest and the flags.

        @raise CommandError: The configuration is missing or invalid.
        """
        try:
            config = RunConfig()
            if options.get('config'):
                config = RunConfig.from_file(options['config'], base=config)
            if manifest:
                config = RunConfig.from_manifest(manifest, base=config)

            flags = {}
            for option, field in FLAG_FIELDS.items():
                if options.get(option) is not None:
                    flags[field] = options[option]
            config.apply_overrides(flags)
            return config.validate()
        except ConfigError as ex:
            raise CommandError(str(ex))
