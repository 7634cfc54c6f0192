"""
The Bayesian optimization campaign.

A campaign initializes every source with a Sobol design, then repeats
fit, propose, evaluate and append until the budget is spent, the
high-fidelity incumbent stalls, or the iteration cap is hit.

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
import time

import numpy as np

from latentbo.acquisition import BestObserved, ProposalError, SearchConfig, propose
from latentbo.emulator import EmulatorOptions, MFData, MixedInput, TrainingError, fit
from latentbo.mathkit import SobolStream

logger = logging.getLogger(__name__)

SENSES = ('minimize', 'maximize')

STRATEGIES = ('mfbo_uq', 'mfbo', 'sfbo')

STOP_BUDGET = 'budget'
STOP_STALL = 'stall'
STOP_MAX_ITERATIONS = 'max-iterations'
STOP_ERROR = 'error'

# Sobol skip offsets are drawn from [1, MAX_SKIP).
MAX_SKIP = 1024


class InitializationError(RuntimeError):
    """
    Raised when the initial design cannot be evaluated.
    """

    def __init__(self, message, source=None):
        RuntimeError.__init__(self, message)
        self.source = source


class MFProblem(object):
    """
    A multi-fidelity optimization problem: ds evaluators, their costs,
    the high-fidelity index, the design domain and the optimization
    sense. Each source may carry additive Gaussian noise.
    """

    def __init__(self, sources, costs, hf_index, domain, sense='minimize', noise_var=None, names=None,
            n_init=None, budget=None, family=None):
        """
        @param sources: Callables taking a MixedInput and returning a scalar.
        @param costs: Sampling cost of each source.
        @param hf_index: Index of the high-fidelity source.
        @param domain: The acquisition.Domain of the design variables.
        @keyword sense: 'minimize' or 'maximize'.
        @keyword noise_var: Variance of the noise added to each source.
        @keyword names: A label for each source.
        @keyword n_init: Default initial sample count of each source.
        @keyword budget: Default maximum cost of a campaign.
        @keyword family: Name of the benchmark family, if any.
        """
        self.sources = list(sources)
        n = len(self.sources)
        self.costs = np.asarray(costs, dtype=float).reshape(-1)
        self.hf_index = int(hf_index)
        self.domain = domain
        self.sense = sense
        self.noise_var = np.zeros(n) if noise_var is None else np.asarray(noise_var, dtype=float).reshape(-1)
        self.names = list(names) if names is not None else ['source%d' % j for j in range(n)]
        self.n_init = None if n_init is None else [int(c) for c in n_init]
        self.budget = None if budget is None else float(budget)
        self.family = family

        if n < 1:
            raise ValueError('A problem needs at least one source.')
        if len(self.costs) != n or len(self.noise_var) != n or len(self.names) != n:
            raise ValueError('Costs, noise variances and names must have one entry per source.')
        if np.any(self.costs <= 0):
            raise ValueError('Sampling costs must be positive.')
        if np.any(self.noise_var < 0):
            raise ValueError('Noise variances must be non-negative.')
        if not 0 <= self.hf_index < n:
            raise ValueError('The high-fidelity index must be one of the %d sources.' % n)
        if self.sense not in SENSES:
            raise ValueError('The sense must be minimize or maximize, not "%s".' % sense)
        if self.n_init is not None and len(self.n_init) != n:
            raise ValueError('n_init must have one entry per source.')

    @property
    def n_sources(self):
        return len(self.sources)

    @property
    def sign(self):
        """
        Multiplier that turns outputs into the canonical maximization sense.
        """
        return -1.0 if self.sense == 'minimize' else 1.0

    def canonical(self, y):
        return self.sign * np.asarray(y, dtype=float)

    def evaluate(self, j, point, seed=0, counter=0):
        """
        Evaluate source j, adding its noise. The noise draw depends only
        on (seed, j, counter).
        """
        y = float(self.sources[j](point))
        if self.noise_var[j] > 0:
            rng = np.random.default_rng([int(seed), int(j), int(counter)])
            y += rng.normal(0.0, np.sqrt(self.noise_var[j]))
        return y

    def restrict(self, indices):
        """
        @return: A problem with only the listed sources; the high-fidelity
            source must be among them.
        """
        indices = list(indices)
        if self.hf_index not in indices:
            raise ValueError('The high-fidelity source cannot be dropped.')
        return MFProblem([self.sources[j] for j in indices], self.costs[indices], indices.index(self.hf_index),
            self.domain, self.sense, self.noise_var[indices], [self.names[j] for j in indices],
            None if self.n_init is None else [self.n_init[j] for j in indices], self.budget, self.family)


class LoopConfig(object):
    """
    Settings of one campaign.
    """

    def __init__(self, budget=None, stall_window=50, max_iterations=1000, seed=0, strategy='mfbo_uq',
            emulator=None, search=None, n_init=None):
        self.budget = None if budget is None else float(budget)
        self.stall_window = int(stall_window)
        self.max_iterations = int(max_iterations)
        self.seed = int(seed)
        self.strategy = strategy
        self.emulator = emulator or EmulatorOptions()
        self.search = search or SearchConfig()
        self.n_init = n_init

        if self.budget is not None and self.budget <= 0:
            raise ValueError('The budget must be positive.')
        if self.stall_window < 1:
            raise ValueError('The stall window must be at least one iteration.')
        if self.strategy not in STRATEGIES:
            raise ValueError('Unknown strategy "%s"; choose from %s.' % (strategy, ', '.join(STRATEGIES)))


class HistoryRecord(object):
    """
    One evaluation: its iteration (0 for the initial design), source,
    input, observed output, cost and the best high-fidelity output so far.
    """

    def __init__(self, iteration, source, point, y, cost_step, cost_cumulative, y_best_hf, improved=False):
        self.iteration = iteration
        self.source = source
        self.point = point
        self.y = y
        self.cost_step = cost_step
        self.cost_cumulative = cost_cumulative
        self.y_best_hf = y_best_hf
        self.improved = improved


class BOHistory(object):
    """
    Everything a campaign did, in order.
    """

    def __init__(self, names, hf_index, sense, seed=0, strategy='mfbo_uq'):
        self.names = list(names)
        self.hf_index = hf_index
        self.sense = sense
        self.seed = seed
        self.strategy = strategy
        self.initial_records = []
        self.records = []
        self.init_cost = 0.0
        self.stop_reason = None
        self.error = None
        self.wall_time = 0.0

    @property
    def n_iterations(self):
        return len(self.records)

    @property
    def cumulative_cost(self):
        if self.records:
            return self.records[-1].cost_cumulative
        return self.init_cost

    @property
    def best_hf(self):
        if self.records:
            return self.records[-1].y_best_hf
        if self.initial_records:
            return self.initial_records[-1].y_best_hf
        return None

    def all_records(self):
        return self.initial_records + self.records

    def trailing_stall(self):
        """
        Number of iterations since the last improvement of the incumbent.
        """
        count = 0
        for record in reversed(self.records):
            if record.improved:
                break
            count += 1
        return count

    def convergence(self):
        """
        @return: (costs, best) arrays: the initial cost followed by one
            point per iteration.
        """
        costs = [self.init_cost] + [r.cost_cumulative for r in self.records]
        best = [self.initial_records[-1].y_best_hf if self.initial_records else np.nan]
        best += [r.y_best_hf for r in self.records]
        return np.array(costs), np.array(best, dtype=float)


def _levels(index, cardinalities):
    levels = []
    for cardinality in cardinalities:
        levels.append(index % cardinality)
        index //= cardinality
    return levels


def initial_design(problem, j, count, seed):
    """
    The initial inputs of source j: a Sobol design with a source
    specific skip and cycled categorical levels.

    @return: A list of MixedInput.
    """
    domain = problem.domain
    if count <= 0:
        return []

    if domain.dx:
        skip = int(np.random.default_rng([int(seed), int(j)]).integers(1, MAX_SKIP))
        unit = SobolStream(domain.dx, skip=skip).draw(count)
        X = domain.to_problem(unit)
    else:
        X = np.zeros((count, 0))

    n_combinations = domain.n_combinations
    return [MixedInput(X[i], _levels(i % n_combinations, domain.cardinalities)) for i in range(count)]


def initialize(problem, n_init=None, seed=0):
    """
    Evaluate the initial design of every source.

    @param problem: An MFProblem.
    @keyword n_init: Initial sample count of each source; defaults to the
        problem's.
    @keyword seed: Seed of the skip offsets and the noise.
    @return: (MFData with outputs in problem units, total cost).
    """
    counts = list(n_init if n_init is not None else (problem.n_init or []))
    if len(counts) != problem.n_sources:
        raise InitializationError('Need one initial sample count per source, got %d for %d.' %
            (len(counts), problem.n_sources))
    if any(c < 0 for c in counts) or sum(counts) < 1:
        raise InitializationError('At least one source needs initial samples.')

    domain = problem.domain
    data = MFData(np.zeros((0, domain.dx)), np.zeros((0, domain.dt), dtype=int), [], [],
        problem.n_sources, domain.cardinalities)
    for j, count in enumerate(counts):
        for counter, point in enumerate(initial_design(problem, j, count, seed)):
            try:
                y = problem.evaluate(j, point, seed, counter)
            except Exception as ex:
                raise InitializationError('Source %d (%s) failed on its initial design: %s' %
                    (j, problem.names[j], ex), source=j)
            if not np.isfinite(y):
                raise InitializationError('Source %d (%s) returned %r on its initial design.' %
                    (j, problem.names[j], y), source=j)
            data.append(point, j, y)

    cost = float(np.dot(counts, problem.costs))
    logger.info('Initialized %d samples at a cost of %g.', data.n, cost)
    return data, cost


def check_stop(history, config):
    """
    @return: 'budget', 'stall', 'max-iterations' or None.
    """
    if config.budget is not None and history.cumulative_cost >= config.budget:
        return STOP_BUDGET
    if history.trailing_stall() >= config.stall_window:
        return STOP_STALL
    if history.n_iterations >= config.max_iterations:
        return STOP_MAX_ITERATIONS
    return None


def strategy_settings(strategy, options):
    """
    @return: (emulator options, HF acquisition, high-fidelity only) for a
        named campaign strategy.
    """
    if strategy == 'mfbo':
        return options.copy(shared_nugget=True, epsilon=0.0), 'improvement', False
    if strategy == 'sfbo':
        return options, 'ei', True
    return options, 'improvement', False


def iteration_seeds(seed, iteration):
    """
    The emulator and search seeds of one iteration.
    """
    state = np.random.SeedSequence([int(seed), int(iteration)]).generate_state(2)
    return int(state[0]), int(state[1])


def run(problem, config):
    """
    Run one campaign.

    @param problem: An MFProblem.
    @param config: A LoopConfig.
    @return: A BOHistory. A training or proposal failure ends the
        campaign with stop_reason 'error'; the data gathered so far is kept.
    """
    started = time.perf_counter()
    options, hf_acquisition, hf_only = strategy_settings(config.strategy, config.emulator)
    n_init = config.n_init if config.n_init is not None else problem.n_init
    if hf_only:
        n_init = [n_init[problem.hf_index]] if n_init is not None else None
        problem = problem.restrict([problem.hf_index])

    budget = config.budget if config.budget is not None else problem.budget
    config = LoopConfig(budget, config.stall_window, config.max_iterations, config.seed, config.strategy,
        options, config.search, n_init)

    if n_init is None or n_init[problem.hf_index] < 1:
        raise InitializationError('The high-fidelity source needs at least one initial sample.',
            source=problem.hf_index)

    history = BOHistory(problem.names, problem.hf_index, problem.sense, config.seed, config.strategy)
    data, history.init_cost = initialize(problem, n_init, config.seed)
    if budget is not None and history.init_cost > budget:
        logger.warning('The initial design costs %g, more than the budget of %g.', history.init_cost, budget)

    counters = list(data.source_counts())
    best = BestObserved(problem.n_sources, problem.hf_index)
    canonical = problem.canonical(data.y)
    for i in range(data.n):
        best.update(data.S[i], canonical[i])
        history.initial_records.append(HistoryRecord(0, int(data.S[i]), MixedInput(data.X[i], data.T[i]),
            float(data.y[i]), float(problem.costs[data.S[i]]), history.init_cost,
            problem.sign * best.hf_best))

    warm_start = None
    iteration = 0
    while True:
        reason = check_stop(history, config)
        if reason:
            history.stop_reason = reason
            break

        iteration += 1
        emulator_seed, search_seed = iteration_seeds(config.seed, iteration)
        try:
            model = fit(data.with_outputs(problem.canonical(data.y)), options.copy(seed=emulator_seed),
                warm_start=warm_start)
            proposal = propose(model, best, problem.costs, problem.domain,
                config.search.copy(seed=search_seed), hf_acquisition)
        except (TrainingError, ProposalError) as ex:
            logger.error('Iteration %d failed: %s', iteration, ex)
            history.stop_reason = STOP_ERROR
            history.error = str(ex)
            break
        warm_start = model.vector

        j = proposal.source
        step = float(problem.costs[j])
        if budget is not None and history.cumulative_cost + step > budget:
            logger.info('Proposal from %s would exceed the budget.', problem.names[j])
            history.stop_reason = STOP_BUDGET
            break

        try:
            y = problem.evaluate(j, proposal.point, config.seed, counters[j])
        except Exception as ex:
            logger.error('Source %s failed at iteration %d: %s', problem.names[j], iteration, ex)
            history.stop_reason = STOP_ERROR
            history.error = str(ex)
            break
        counters[j] += 1

        data.append(proposal.point, j, y)
        improved = j == problem.hf_index and best.update(j, problem.sign * y)
        if j != problem.hf_index:
            best.update(j, problem.sign * y)

        history.records.append(HistoryRecord(iteration, j, proposal.point, y, step,
            history.cumulative_cost + step, problem.sign * best.hf_best, improved))
        logger.debug('Iteration %d: sampled %s, y = %g, best HF = %g.', iteration, problem.names[j], y,
            problem.sign * best.hf_best)

    history.wall_time = time.perf_counter() - started
    logger.info('Campaign stopped after %d iterations (%s) at a cost of %g.', history.n_iterations,
        history.stop_reason, history.cumulative_cost)
    return history
