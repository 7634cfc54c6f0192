"""
Write the relative RMSE table of a benchmark family's low-fidelity
variants against its high-fidelity variant.

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

from django.core.management.base import CommandError

from latentbo.benchmarks import RRMSE_POINTS, UnknownFamilyError, get_family, rrmse_table
from latentbo.management.base import LatentBOCommand
from latentbo.tasks import ManifestFile, RRMSEFile, ensure_dir


class Command(LatentBOCommand):
    help = 'Writes the relative RMSE of every low-fidelity variant of a benchmark family.'

    def add_arguments(self, parser):
        self.add_common_arguments(parser)
        parser.add_argument('-f', '--family', dest='family', help='Benchmark family: borehole, wing or toy1d.')
        parser.add_argument('-n', '--n-points', dest='n_points', type=int, default=RRMSE_POINTS,
            help='Number of Sobol points (default %d).' % RRMSE_POINTS)

    def handle(self, *args, **options):
        self.setup_logging(int(options.get('verbosity', 1)))
        config = self.load_config(options)
        n_points = options.get('n_points') or RRMSE_POINTS

        if not config.problem:
            raise CommandError('A benchmark family is required: use --family.')
        try:
            family = get_family(config.problem)
        except UnknownFamilyError as ex:
            raise CommandError(str(ex))
        if n_points < 2:
            raise CommandError('The relative RMSE needs at least two points.')

        output_dir = config.output_dir()
        ensure_dir(output_dir)
        path = RRMSEFile.get_file_name(output_dir, family.name)
        RRMSEFile.write(rrmse_table(family, n_points, config.seed), n_points, config.seed, path)
        ManifestFile.write(os.path.join(output_dir, 'manifest-rrmse-%s.json' % family.name), 'rrmse', config,
            [config.seed], [path], n_points=n_points)

        for variant, value in RRMSEFile.read(path):
            self.stdout.write('%s %s: %.4f\n' % (family.name, variant, value))
