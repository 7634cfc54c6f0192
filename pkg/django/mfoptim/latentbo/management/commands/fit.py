"""
Fit a latent-map emulator to a multi-fidelity dataset and write its
report: hyperparameters, per-source noise variances, fidelity-manifold
coordinates and the in-sample interval score.

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

import json
import logging
import os

from django.core.management.base import CommandError

from latentbo.emulator import EncodingError, TrainingError, fit
from latentbo.management.base import LatentBOCommand
from latentbo.tasks import DatasetError, DatasetFile, FitReport, ManifestFile, ensure_dir

logger = logging.getLogger(__name__)


class Command(LatentBOCommand):
    """
    Fit an emulator to a dataset.
    """
    help = 'Fits a multi-fidelity emulator to a dataset and reports its noise and latent estimates.'

    def add_arguments(self, parser):
        parser.add_argument('dataset', nargs='?', help='Comma separated dataset file.')
        self.add_common_arguments(parser)
        self.add_emulator_arguments(parser)
        parser.add_argument('--sidecar', dest='sidecar', help='JSON sidecar describing the dataset.')
        parser.add_argument('--penalty-data', dest='penalty_data', choices=('in_sample', 'loo'),
            help='Predictions scored by the interval score penalty.')
        parser.add_argument('--shared-nugget', dest='shared_nugget', action='store_true', default=None,
            help='Estimate one nugget for all sources.')

    def handle(self, *args, **options):
        """
        Perform the command.
        """
        self.setup_logging(int(options.get('verbosity', 1)))
        config = self.load_config(options)
        if options.get('dataset'):
            config.dataset = options['dataset']
        if options.get('shared_nugget'):
            config.shared_nugget = True
        if not config.dataset:
            raise CommandError('A dataset is required: pass a path or use a configuration file.')

        try:
            dataset = DatasetFile.read(config.dataset, config.sidecar)
        except DatasetError as ex:
            raise CommandError('%s: %s' % (config.dataset, ex))

        try:
            model = fit(dataset.data, config.emulator_options(dataset.bounds))
        except (TrainingError, EncodingError) as ex:
            diagnostics = getattr(ex, 'diagnostics', [])
            for message in diagnostics:
                logger.info(message)
            raise CommandError('Training failed: %s' % ex)

        output_dir = config.output_dir()
        ensure_dir(output_dir)
        report_path = os.path.join(output_dir, 'report.json')
        latent_path = os.path.join(output_dir, 'latent.csv')
        FitReport.write(FitReport.build(model, dataset), report_path)
        FitReport.write_latent(model, dataset.source_names, latent_path)
        ManifestFile.write(os.path.join(output_dir, 'manifest.json'), 'fit', config, [config.seed],
            [report_path, latent_path])

        with open(report_path) as handle:
            report = json.load(handle)
        self.stdout.write('Fitted %s samples; interval score %.6g\n' %
            (sum(report['samples'].values()), report['interval_score']))
        for name in report['sources']:
            z = report['latent_coordinates'][name]
            self.stdout.write('  %-12s n=%-5d noise variance %.6g  latent (%s)\n' % (name, report['samples'][name],
                report['noise_variances'][name], ', '.join('%.4f' % v for v in z)))
