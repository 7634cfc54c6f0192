"""
Run a multi-fidelity optimization study on a benchmark family.

Every repetition is an independent campaign seeded base+0, base+1, ...
Histories, the convergence summary and a manifest are written to the
output directory; the summary printed at the end is read back from them.

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

import csv
import logging
import os

from django.core.management.base import CommandError

from latentbo.benchmarks import DomainError, UnknownFamilyError, get_family
from latentbo.loop import STRATEGIES
from latentbo.management.base import LatentBOCommand
from latentbo.tasks import ManifestFile, run_study

logger = logging.getLogger(__name__)


class Command(LatentBOCommand):
    """
    Run a benchmark study.
    """
    help = 'Runs repeated multi-fidelity optimization campaigns on a benchmark family.'

    def add_arguments(self, parser):
        self.add_common_arguments(parser)
        self.add_emulator_arguments(parser)
        parser.add_argument('-p', '--problem', dest='problem', help='Benchmark family: borehole, wing or toy1d.')
        parser.add_argument('-r', '--reps', dest='reps', type=int, help='Number of repetitions (default 20).')
        parser.add_argument('-b', '--budget', dest='budget', type=float, help='Maximum sampling cost per campaign.')
        parser.add_argument('--stall-window', dest='stall_window', type=int,
            help='Stop after this many iterations without improvement (default 50).')
        parser.add_argument('--max-iterations', dest='max_iterations', type=int,
            help='Iteration cap per campaign (default 1000).')
        parser.add_argument('-w', '--workers', dest='workers', type=int, help='Repetitions run concurrently.')
        parser.add_argument('-s', '--strategy', dest='strategy', choices=STRATEGIES,
            help='Campaign strategy (default mfbo_uq).')
        parser.add_argument('--oracle-points', dest='oracle_points', type=int,
            help='Compute the true optimum over this many points and write hits.csv.')
        parser.add_argument('-m', '--manifest', dest='manifest', help='Replay the configuration of a manifest.')

    def handle(self, *args, **options):
        """
        Perform the command.
        """
        self.setup_logging(int(options.get('verbosity', 1)))
        config = self.load_config(options, options.get('manifest'))

        if not config.problem:
            raise CommandError('A benchmark family is required: use --problem or a configuration file.')
        try:
            get_family(config.problem)
        except UnknownFamilyError as ex:
            raise CommandError(str(ex))

        output_dir = config.output_dir()
        try:
            manifest, outcomes = run_study(config, output_dir)
        except (ValueError, DomainError) as ex:
            raise CommandError('The study could not run: %s' % ex)

        self.report(output_dir, manifest)

        failed = [outcome for outcome in outcomes if outcome['stop_reason'] == 'error']
        if failed:
            raise CommandError('%d of %d repetitions failed; partial artifacts are in %s.' %
                (len(failed), len(outcomes), output_dir))

    def report(self, output_dir, manifest):
        """
        Print a summary read back from the written files.
        """
        manifest = ManifestFile.read(os.path.join(output_dir, 'manifest.json'))
        self.stdout.write('Wrote %d artifacts to %s\n' % (len(manifest['artifacts']) + 1, output_dir))

        reasons = manifest.get('stop_reasons', [])
        for reason in sorted(set(reasons)):
            self.stdout.write('  %d repetition(s) stopped on %s\n' % (reasons.count(reason), reason))

        with open(os.path.join(output_dir, 'summary.csv'), newline='') as handle:
            rows = list(csv.DictReader(handle))
        if rows:
            last = rows[-1]
            self.stdout.write('Best HF at cost %s: median %s (min %s, max %s) over %s repetition(s)\n' %
                (last['cost'], last['median'], last['min'], last['max'], last['n_reps']))

        if 'optimum' in manifest:
            with open(os.path.join(output_dir, 'hits.csv'), newline='') as handle:
                hits = list(csv.DictReader(handle))
            inside = sum(int(row['in_band']) for row in hits)
            self.stdout.write('True optimum %s; %d of %d repetition(s) ended within %s of it\n' %
                (manifest['optimum'], inside, len(hits), manifest['band']))
