"""
Files and background work for LatentBO: dataset ingestion, campaign
histories, convergence summaries, RRMSE tables, fit reports, manifests
and the celery task that runs one repetition of a study.

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
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from celery import group, shared_task
from django.conf import settings

import latentbo
from latentbo.benchmarks import make_problem, true_optimum
from latentbo.config import RunConfig
from latentbo.emulator import MFData
from latentbo.loop import InitializationError, run

logger = logging.getLogger(__name__)

SOURCE_COLUMN = 'source'
OUTPUT_COLUMN = 'y'


class DatasetError(ValueError):
    """
    Raised for a dataset file that cannot be parsed. The message names
    the offending line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = 'line %d: %s' % (line, message)
        ValueError.__init__(self, message)
        self.line = line


def _number(value):
    return repr(float(value))


def ensure_dir(path):
    if path and not os.path.isdir(path):
        os.makedirs(path)


class Dataset(object):
    """
    A parsed dataset: the training data and the labels behind its indices.
    """

    def __init__(self, data, source_names, levels, hf_index=0, bounds=None):
        self.data = data
        self.source_names = source_names
        self.levels = levels
        self.hf_index = hf_index
        self.bounds = bounds


class DatasetFile():
    """
    Multi-fidelity datasets are comma separated files with a header row.
    Columns named x_1.. are continuous inputs, t_1.. categorical labels,
    'source' names the data source and 'y' holds the output.

    An optional JSON sidecar declares the source order ("sources"), the
    high-fidelity source ("hf"), categorical levels ("levels") and
    continuous bounds ("bounds"). Without it, sources and levels are
    indexed in the order they first appear.
    """

    @staticmethod
    def read_sidecar(path):
        if path is None:
            return {}
        try:
            with open(path) as handle:
                sidecar = json.load(handle)
        except (IOError, OSError) as ex:
            raise DatasetError('The sidecar "%s" could not be read: %s' % (path, ex))
        except ValueError as ex:
            raise DatasetError('The sidecar "%s" is not valid JSON: %s' % (path, ex))
        if not isinstance(sidecar, dict):
            raise DatasetError('The sidecar "%s" must hold a JSON object.' % path)
        return sidecar

    @staticmethod
    def read(path, sidecar=None):
        """
        Parse a dataset file.

        @param path: The comma separated file.
        @keyword sidecar: Optional path of the JSON sidecar.
        @return: A Dataset.
        """
        meta = DatasetFile.read_sidecar(sidecar)
        names = list(meta.get('sources') or [])
        declared_sources = bool(names)

        try:
            handle = open(path, newline='')
        except (IOError, OSError) as ex:
            raise DatasetError('The dataset "%s" could not be read: %s' % (path, ex))

        with handle:
            reader = csv.reader(handle)
            try:
                header = [column.strip() for column in next(reader)]
            except StopIteration:
                raise DatasetError('The dataset is empty.', line=1)

            if SOURCE_COLUMN not in header or OUTPUT_COLUMN not in header:
                raise DatasetError('The header needs "source" and "y" columns.', line=1)
            x_columns = [k for k, column in enumerate(header) if column.startswith('x_')]
            t_columns = [k for k, column in enumerate(header) if column.startswith('t_')]
            source_column = header.index(SOURCE_COLUMN)
            output_column = header.index(OUTPUT_COLUMN)

            levels = [list(values) for values in meta.get('levels') or [[] for _ in t_columns]]
            declared_levels = bool(meta.get('levels'))
            if len(levels) != len(t_columns):
                raise DatasetError('The sidecar declares levels for %d categorical columns, the file has %d.' %
                    (len(levels), len(t_columns)))

            X, T, S, y = [], [], [], []
            for row in reader:
                line = reader.line_num
                if not row or all(not field.strip() for field in row):
                    continue
                if len(row) != len(header):
                    raise DatasetError('expected %d fields, got %d.' % (len(header), len(row)), line=line)

                try:
                    X.append([float(row[k]) for k in x_columns])
                    value = float(row[output_column])
                except ValueError as ex:
                    raise DatasetError('not a number (%s).' % ex, line=line)
                if not np.isfinite(value) or not np.all(np.isfinite(X[-1])):
                    raise DatasetError('values must be finite.', line=line)
                y.append(value)

                label = row[source_column].strip()
                if label not in names:
                    if declared_sources:
                        raise DatasetError('unknown source "%s".' % label, line=line)
                    names.append(label)
                S.append(names.index(label))

                codes = []
                for k, column in enumerate(t_columns):
                    label = row[column].strip()
                    if label not in levels[k]:
                        if declared_levels:
                            raise DatasetError('unknown level "%s" of %s.' % (label, header[column]), line=line)
                        levels[k].append(label)
                    codes.append(levels[k].index(label))
                T.append(codes)

        if not y:
            raise DatasetError('The dataset has no rows.', line=2)

        hf = meta.get('hf', 0)
        hf_index = names.index(hf) if isinstance(hf, str) else int(hf)
        if not 0 <= hf_index < len(names):
            raise DatasetError('The high-fidelity source "%s" is not in the dataset.' % hf)

        bounds = meta.get('bounds')
        if bounds is not None:
            bounds = np.asarray(bounds, dtype=float)
            if bounds.shape != (len(x_columns), 2):
                raise DatasetError('The sidecar bounds must be %d (lower, upper) pairs.' % len(x_columns))
            bounds = (bounds[:, 0], bounds[:, 1])

        data = MFData(np.array(X).reshape(len(y), len(x_columns)), np.array(T, dtype=int).reshape(len(y), len(t_columns)),
            S, y, len(names), [len(values) for values in levels])
        logger.info('Read %d samples of %d sources from %s.', data.n, data.n_sources, path)
        return Dataset(data, names, levels, hf_index, bounds)


class HistoryFile():
    """
    Campaign histories: one comma separated row per evaluation (the
    initial design as iteration 0) and a JSON record of the run.
    """

    @staticmethod
    def get_file_name(output_dir, repetition, extension='csv'):
        return os.path.join(output_dir, 'history-rep%03d.%s' % (repetition, extension))

    @staticmethod
    def header(dx, dt):
        return (['iteration', 'source', 'cost_step', 'cost_cumulative'] +
            ['x_%d' % (k + 1) for k in range(dx)] + ['t_%d' % (k + 1) for k in range(dt)] +
            ['y_observed', 'y_best_hf'])

    @staticmethod
    def write(history, path, dx, dt):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(HistoryFile.header(dx, dt))
            for record in history.all_records():
                writer.writerow([record.iteration, record.source, _number(record.cost_step),
                    _number(record.cost_cumulative)] + [_number(v) for v in record.point.continuous] +
                    [int(v) for v in record.point.categorical] + [_number(record.y), _number(record.y_best_hf)])

    @staticmethod
    def write_json(path, history, config, seed):
        record = {
            'version': latentbo.__version__,
            'config': config.to_dict(),
            'seed': seed,
            'strategy': history.strategy,
            'sources': history.names,
            'hf_index': history.hf_index,
            'init_cost': history.init_cost,
            'iterations': history.n_iterations,
            'stop_reason': history.stop_reason,
            'error': history.error,
            'wall_time': history.wall_time,
        }
        with open(path, 'w') as handle:
            json.dump(record, handle, indent=2, sort_keys=True)

    @staticmethod
    def read_trace(path):
        """
        Read the convergence trace of a history file.

        @return: (costs, best) arrays: the cost after initialization and
            after each iteration, with the best high-fidelity output then.
        """
        costs, best = [], []
        with open(path, newline='') as handle:
            for row in csv.DictReader(handle):
                cost, value = float(row['cost_cumulative']), float(row['y_best_hf'])
                if int(row['iteration']) == 0 and costs:
                    costs[-1], best[-1] = cost, value
                else:
                    costs.append(cost)
                    best.append(value)
        return np.array(costs), np.array(best)


class ConvergenceSummary():
    """
    Aggregate convergence of a study over the union of all repetitions'
    cost points, each trace held constant between its own points.
    """

    @staticmethod
    def compute(traces):
        """
        @param traces: A list of (costs, best) pairs.
        @return: A list of (cost, n_reps, min, median, max, mean) rows.
        """
        traces = [(np.asarray(c, dtype=float), np.asarray(b, dtype=float)) for c, b in traces if len(c)]
        if not traces:
            return []
        grid = np.unique(np.concatenate([c for c, _ in traces]))

        values = np.full((len(traces), len(grid)), np.nan)
        for k, (costs, best) in enumerate(traces):
            position = np.searchsorted(costs, grid, side='right') - 1
            started = position >= 0
            values[k, started] = best[position[started]]

        rows = []
        for i, cost in enumerate(grid):
            column = values[:, i]
            column = column[~np.isnan(column)]
            rows.append((cost, len(column), column.min(), np.median(column), column.max(), column.mean()))
        return rows

    @staticmethod
    def write(rows, path):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['cost', 'n_reps', 'min', 'median', 'max', 'mean'])
            for cost, count, low, median, high, mean in rows:
                writer.writerow([_number(cost), count, _number(low), _number(median), _number(high), _number(mean)])


class HitsFile():
    """
    Per repetition: the cost at which the incumbent first came within a
    band around the true optimum, and whether it ended inside it.
    """

    @staticmethod
    def compute(trace, optimum, band):
        costs, best = trace
        inside = np.abs(best - optimum) <= band
        first = costs[np.argmax(inside)] if np.any(inside) else None
        return first, best[-1], bool(inside[-1]) if len(inside) else False

    @staticmethod
    def write(rows, optimum, band, path):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['repetition', 'seed', 'optimum', 'band', 'first_hit_cost', 'final_best', 'in_band'])
            for repetition, seed, first, final, inside in rows:
                writer.writerow([repetition, seed, _number(optimum), _number(band),
                    '' if first is None else _number(first), _number(final), int(inside)])


class RRMSEFile():
    """
    Relative RMSE tables: variant, rrmse, n_points, seed.
    """

    @staticmethod
    def get_file_name(output_dir, family):
        return os.path.join(output_dir, 'rrmse-%s.csv' % family)

    @staticmethod
    def write(rows, n_points, seed, path):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['variant', 'rrmse', 'n_points', 'seed'])
            for variant, value in rows:
                writer.writerow([variant, _number(value), n_points, seed])

    @staticmethod
    def read(path):
        with open(path, newline='') as handle:
            return [(row['variant'], float(row['rrmse'])) for row in csv.DictReader(handle)]


class FitReport():
    """
    The report of a fitted emulator: hyperparameters, per-source noise
    variances, fidelity-manifold coordinates and the in-sample interval
    score.
    """

    @staticmethod
    def build(model, dataset):
        hyper = model.hyper
        names = dataset.source_names
        counts = model.source_data.source_counts() if model.source_data is not None else []
        return {
            'version': latentbo.__version__,
            'sources': names,
            'hf_source': names[dataset.hf_index],
            'samples': dict((name, int(count)) for name, count in zip(names, counts)),
            'hyperparameters': {
                'beta': hyper.beta,
                'sigma2': hyper.sigma2,
                'omega': hyper.omega.tolist(),
                'A_fidelity': hyper.A_fidelity.tolist(),
                'A_design': None if hyper.A_design is None else hyper.A_design.tolist(),
                'delta': hyper.delta.tolist(),
            },
            'noise_variances': dict(zip(names, model.noise_variances().tolist())),
            'latent_coordinates': dict(zip(names, model.latent_coordinates().tolist())),
            'interval_score': model.interval_score(),
            'objective': model.objective,
        }

    @staticmethod
    def write(report, path):
        with open(path, 'w') as handle:
            json.dump(report, handle, indent=2, sort_keys=True)

    @staticmethod
    def write_latent(model, names, path):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            coordinates = model.latent_coordinates()
            writer.writerow(['source'] + ['z_%d' % (k + 1) for k in range(coordinates.shape[1])])
            for name, row in zip(names, coordinates):
                writer.writerow([name] + [_number(v) for v in row])


class ManifestFile():
    """
    Every command leaves a manifest: the configuration echo, the seeds,
    the artifacts written and the library version. Replaying the
    configuration reproduces the artifacts.
    """

    @staticmethod
    def write(path, command, config, seeds, artifacts, **extra):
        manifest = {
            'version': latentbo.__version__,
            'command': command,
            'config': config.to_dict(),
            'seeds': list(seeds),
            'artifacts': sorted(os.path.basename(a) for a in artifacts),
        }
        manifest.update(extra)
        with open(path, 'w') as handle:
            json.dump(manifest, handle, indent=2, sort_keys=True)
        return manifest

    @staticmethod
    def read(path):
        with open(path) as handle:
            return json.load(handle)


def execute_repetition(config_values, repetition, seed, output_dir):
    """
    Run one campaign and write its history files.

    @return: A dict describing the outcome.
    """
    config = RunConfig.from_dict(config_values)
    problem = make_problem(config.problem, config.problem_overrides())
    loop_config = config.loop_config(seed, bounds=(problem.domain.lower, problem.domain.upper))

    csv_path = HistoryFile.get_file_name(output_dir, repetition)
    json_path = HistoryFile.get_file_name(output_dir, repetition, 'json')
    try:
        history = run(problem, loop_config)
    except InitializationError as ex:
        logger.error('Repetition %d (seed %d) could not start: %s', repetition, seed, ex)
        with open(json_path, 'w') as handle:
            json.dump({'version': latentbo.__version__, 'config': config.to_dict(), 'seed': seed,
                'stop_reason': 'error', 'error': str(ex)}, handle, indent=2, sort_keys=True)
        return {'repetition': repetition, 'seed': seed, 'history': None, 'record': json_path,
            'stop_reason': 'error', 'error': str(ex)}

    HistoryFile.write(history, csv_path, problem.domain.dx, problem.domain.dt)
    HistoryFile.write_json(json_path, history, config, seed)
    return {'repetition': repetition, 'seed': seed, 'history': csv_path, 'record': json_path,
        'stop_reason': history.stop_reason, 'error': history.error}


@shared_task
def run_repetition(config_values, repetition, seed, output_dir):
    """
    Celery entry point of one repetition.
    """
    return execute_repetition(config_values, repetition, seed, output_dir)


def _execute(args):
    return execute_repetition(*args)


def run_study(config, output_dir):
    """
    Run every repetition of a study, then write the convergence summary,
    optional hits table and the manifest.

    @return: (manifest dict, list of outcome dicts).
    """
    ensure_dir(output_dir)
    values = config.to_dict()
    jobs = [(values, k, seed, output_dir) for k, seed in enumerate(config.repetition_seeds())]

    if config.workers > 1 and getattr(settings, 'CELERY_BROKER_URL', None):
        logger.info('Dispatching %d repetitions to celery.', len(jobs))
        outcomes = group(run_repetition.s(*job) for job in jobs).apply_async().get()
    elif config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_execute, jobs))
    else:
        outcomes = [_execute(job) for job in jobs]
    outcomes = sorted(outcomes, key=lambda outcome: outcome['repetition'])

    artifacts = []
    traces = []
    for outcome in outcomes:
        artifacts.append(outcome['record'])
        if outcome['history']:
            artifacts.append(outcome['history'])
            traces.append(HistoryFile.read_trace(outcome['history']))

    summary_path = os.path.join(output_dir, 'summary.csv')
    ConvergenceSummary.write(ConvergenceSummary.compute(traces), summary_path)
    artifacts.append(summary_path)

    extra = {'stop_reasons': [outcome['stop_reason'] for outcome in outcomes]}
    if config.oracle_points:
        problem = make_problem(config.problem, config.problem_overrides())
        _, optimum = true_optimum(config.problem, config.oracle_points, seed=config.seed)
        band = 2.0 * np.sqrt(problem.noise_var[problem.hf_index])
        rows = []
        for outcome in outcomes:
            if outcome['history']:
                trace = HistoryFile.read_trace(outcome['history'])
                rows.append((outcome['repetition'], outcome['seed']) + HitsFile.compute(trace, optimum, band))
        hits_path = os.path.join(output_dir, 'hits.csv')
        HitsFile.write(rows, optimum, band, hits_path)
        artifacts.append(hits_path)
        extra.update(optimum=optimum, band=band)

    manifest = ManifestFile.write(os.path.join(output_dir, 'manifest.json'), 'benchmark', config,
        config.repetition_seeds(), artifacts, **extra)
    return manifest, outcomes
