"""
Run configuration for LatentBO.

A RunConfig gathers everything a study needs. Values are layered:
built-in defaults, then the XML configuration document, then a replayed
manifest, then command line flags.

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

import copy
import json
import logging

from django.conf import settings

from latentbo import ConfigError, StoredConfig
from latentbo.acquisition import SearchConfig
from latentbo.emulator import PENALTY_DATA, EmulatorOptions
from latentbo.loop import STRATEGIES, LoopConfig

logger = logging.getLogger(__name__)

DEFAULTS = {
    'problem': None,
    'dataset': None,
    'sidecar': None,
    'budget': None,
    'stall_window': 50,
    'repetitions': 20,
    'seed': 0,
    'max_iterations': 1000,
    'strategy': 'mfbo_uq',
    'workers': 1,
    'output': None,
    'oracle_points': None,
    'epsilon': 0.08,
    'coverage_v': 0.05,
    'restarts': 16,
    'maxiter': 200,
    'penalty_data': 'in_sample',
    'literal_noise_term': False,
    'literal_prior_sign': False,
    'shared_nugget': False,
    'starts': 64,
    'polish': 8,
    'categorical_limit': 4096,
    'categorical_samples': 1024,
    'grid_points': None,
    'sources': None,
    'source_overrides': {},
}

# XML attribute -> (RunConfig field, converter), per configuration node.
RUN_ATTRIBUTES = {
    'problem': ('problem', str),
    'budget': ('budget', float),
    'stallWindow': ('stall_window', int),
    'repetitions': ('repetitions', int),
    'seed': ('seed', int),
    'maxIterations': ('max_iterations', int),
    'strategy': ('strategy', str),
    'workers': ('workers', int),
    'output': ('output', str),
    'oraclePoints': ('oracle_points', int),
}

EMULATOR_ATTRIBUTES = {
    'epsilon': ('epsilon', float),
    'coverage': ('coverage_v', float),
    'restarts': ('restarts', int),
    'maxIterations': ('maxiter', int),
    'penaltyData': ('penalty_data', str),
    'nuggetTerm': ('literal_noise_term', lambda value: value == 'literal'),
    'priorSign': ('literal_prior_sign', lambda value: value == 'literal'),
    'sharedNugget': ('shared_nugget', lambda value: value in ('true', '1')),
}

SEARCH_ATTRIBUTES = {
    'starts': ('starts', int),
    'polish': ('polish', int),
    'categoricalLimit': ('categorical_limit', int),
    'categoricalSamples': ('categorical_samples', int),
    'gridPoints': ('grid_points', int),
}

SOURCE_ATTRIBUTES = {
    'cost': ('costs', float),
    'init': ('n_init', int),
    'noise': ('noise', float),
}


class RunConfig(object):
    """
    The configuration of a fit, a campaign study or an RRMSE table.
    """

    def __init__(self, **values):
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError('Unknown configuration keys: %s.' % ', '.join(sorted(unknown)))
        for key, default in DEFAULTS.items():
            setattr(self, key, copy.deepcopy(values.get(key, default)))

    def validate(self):
        """
        Check the invariants of the configuration.

        @raise ConfigError: The first violated invariant.
        """
        if self.budget is not None and self.budget <= 0:
            raise ConfigError('The budget must be positive.')
        if self.repetitions < 1:
            raise ConfigError('At least one repetition is needed.')
        if self.stall_window < 1:
            raise ConfigError('The stall window must be at least one iteration.')
        if self.epsilon < 0:
            raise ConfigError('epsilon must be non-negative.')
        if not 0.0 < self.coverage_v < 1.0:
            raise ConfigError('The coverage parameter must lie in (0, 1).')
        if self.restarts < 1:
            raise ConfigError('At least one restart is needed.')
        if self.workers < 1:
            raise ConfigError('At least one worker is needed.')
        if self.strategy not in STRATEGIES:
            raise ConfigError('Unknown strategy "%s"; choose from %s.' % (self.strategy, ', '.join(STRATEGIES)))
        if self.penalty_data not in PENALTY_DATA:
            raise ConfigError('Unknown penalty data "%s".' % self.penalty_data)
        if self.oracle_points is not None and self.oracle_points < 1:
            raise ConfigError('The oracle needs at least one point.')
        return self

    def apply_overrides(self, overrides):
        """
        Overwrite fields with the values that are not None.
        """
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in DEFAULTS:
                raise ConfigError('Unknown configuration key "%s".' % key)
            setattr(self, key, copy.deepcopy(value))
        return self

    def to_dict(self):
        return dict((key, copy.deepcopy(getattr(self, key))) for key in sorted(DEFAULTS))

    @classmethod
    def from_dict(cls, values):
        return cls(**values)

    @classmethod
    def from_stored(cls, stored, base=None):
        """
        Layer a validated StoredConfig over base (or the defaults).
        """
        config = base or cls()
        if stored.data is None:
            raise ConfigError('The configuration document has not been validated.')

        for node, attributes in ((stored.get_run(), RUN_ATTRIBUTES),
                (stored.get_emulator(), EMULATOR_ATTRIBUTES),
                (stored.get_search(), SEARCH_ATTRIBUTES)):
            if node is None:
                continue
            for attribute, (key, convert) in attributes.items():
                value = node.get(attribute)
                if value is not None:
                    try:
                        setattr(config, key, convert(value))
                    except ValueError:
                        raise ConfigError('Attribute %s="%s" of %s is not valid.' % (attribute, value, node.tag))

        sources = stored.filter_sources() or []
        if sources:
            config.sources = [node.get('variant') for node in sources]
        for node in sources:
            for attribute, (key, convert) in SOURCE_ATTRIBUTES.items():
                value = node.get(attribute)
                if value is not None:
                    config.source_overrides.setdefault(key, {})[node.get('variant')] = convert(value)

        if stored.has_dataset():
            dataset = stored.get_dataset()
            config.dataset = dataset.get('path')
            config.sidecar = dataset.get('sidecar')
        return config

    @classmethod
    def from_file(cls, path, schema=None, base=None):
        """
        Read and validate an XML configuration document.
        """
        schema = schema or getattr(settings, 'LATENTBO_CONFIG_SCHEMA', None)
        stored = StoredConfig(path, schema)
        if not stored.validate():
            raise ConfigError('The configuration file "%s" is not valid; rerun with -v 2 for details.' % path)
        return cls.from_stored(stored, base)

    @classmethod
    def from_manifest(cls, path, base=None):
        """
        Replay the configuration echoed in a manifest.
        """
        try:
            with open(path) as handle:
                manifest = json.load(handle)
        except (IOError, OSError, ValueError) as ex:
            raise ConfigError('The manifest "%s" could not be read: %s' % (path, ex))
        if 'config' not in manifest:
            raise ConfigError('The manifest "%s" has no configuration.' % path)

        config = base or cls()
        return config.apply_overrides(manifest['config'])

    def output_dir(self):
        return self.output or getattr(settings, 'LATENTBO_OUTPUT_DIR', None) or 'latentbo-output'

    def emulator_options(self, bounds=None):
        return EmulatorOptions(epsilon=self.epsilon, coverage_v=self.coverage_v, restarts=self.restarts,
            maxiter=self.maxiter, shared_nugget=self.shared_nugget, literal_prior_sign=self.literal_prior_sign,
            literal_noise_term=self.literal_noise_term, penalty_data=self.penalty_data, bounds=bounds,
            seed=self.seed)

    def search_config(self):
        return SearchConfig(starts=self.starts, polish=self.polish, categorical_limit=self.categorical_limit,
            categorical_samples=self.categorical_samples, grid_points=self.grid_points, seed=self.seed)

    def problem_overrides(self):
        """
        @return: The overrides handed to benchmarks.make_problem.
        """
        overrides = dict((key, dict(values)) for key, values in self.source_overrides.items())
        if self.sources:
            overrides['sources'] = list(self.sources)
        if self.budget is not None:
            overrides['budget'] = self.budget
        return overrides

    def loop_config(self, seed, bounds=None):
        """
        The LoopConfig of the repetition with the given seed.
        """
        return LoopConfig(budget=self.budget, stall_window=self.stall_window, max_iterations=self.max_iterations,
            seed=seed, strategy=self.strategy, emulator=self.emulator_options(bounds),
            search=self.search_config())

    def repetition_seeds(self):
        return [self.seed + k for k in range(self.repetitions)]
