"""
Cost-aware acquisition for multi-fidelity optimization.

Low-fidelity sources are scored by the exploration part of expected
improvement, the high-fidelity source by plain improvement (or by full
expected improvement for single-fidelity campaigns). Each source's
value is divided by its sampling cost, and the (point, source) pair
with the largest scaled value is proposed.

All values are in the canonical maximization sense: outputs of
minimization problems are negated before they reach the emulator.

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

import itertools
import logging

import numpy as np
from scipy import optimize

from latentbo.emulator import MixedInput
from latentbo.mathkit import DimensionError, sobol_points, std_normal_cdf, std_normal_pdf

logger = logging.getLogger(__name__)

# Relative tolerance for ties and for incumbent improvements.
TIE_TOLERANCE = 1e-12

HF_ACQUISITIONS = ('improvement', 'ei')


class ProposalError(RuntimeError):
    """
    Raised when no source produced a finite acquisition value.
    """

    def __init__(self, message, diagnostics=None):
        RuntimeError.__init__(self, message)
        self.diagnostics = diagnostics or {}


class Domain(object):
    """
    The design domain: bounds of the continuous variables and the number
    of levels of each categorical variable.
    """

    def __init__(self, lower, upper, cardinalities=()):
        self.lower = np.asarray(lower, dtype=float).reshape(-1)
        self.upper = np.asarray(upper, dtype=float).reshape(-1)
        self.cardinalities = tuple(int(c) for c in cardinalities)

        if len(self.lower) != len(self.upper):
            raise DimensionError('Lower and upper bounds differ in length.')
        if np.any(self.upper < self.lower):
            raise ValueError('Upper bounds must not be below lower bounds.')
        if any(c < 1 for c in self.cardinalities):
            raise ValueError('Every categorical variable needs at least one level.')
        if self.dx + self.dt < 1:
            raise DimensionError('The domain has no variables.')

    @property
    def dx(self):
        return len(self.lower)

    @property
    def dt(self):
        return len(self.cardinalities)

    @property
    def n_combinations(self):
        return int(np.prod(self.cardinalities)) if self.cardinalities else 1

    def to_problem(self, U):
        """
        Map points of the unit hypercube onto the continuous bounds.
        """
        return self.lower + np.asarray(U, dtype=float) * (self.upper - self.lower)

    def to_unit(self, X):
        span = self.upper - self.lower
        return (np.asarray(X, dtype=float) - self.lower) / np.where(span > 0, span, 1.0)

    def combinations(self, limit=4096, samples=1024, rng=None):
        """
        The categorical level combinations searched by the inner
        optimization: all of them when there are at most limit, otherwise
        samples uniform draws.

        @return: An (m, dt) integer array.
        """
        if not self.cardinalities:
            return np.zeros((1, 0), dtype=int)
        if self.n_combinations <= limit:
            return np.array(list(itertools.product(*[range(c) for c in self.cardinalities])), dtype=int)

        rng = rng or np.random.default_rng(0)
        return np.column_stack([rng.integers(0, c, samples) for c in self.cardinalities])


class SearchConfig(object):
    """
    Settings of the inner (auxiliary) optimization.
    """

    def __init__(self, starts=64, polish=8, categorical_limit=4096, categorical_samples=1024,
            grid_points=None, duplicate_tol=1e-9, seed=0, maxiter=100):
        """
        @keyword starts: Sobol starting points per source.
        @keyword polish: How many of the best starts get a quasi-Newton polish.
        @keyword categorical_limit: Enumerate categorical combinations up to this count.
        @keyword categorical_samples: Combinations drawn when there are more.
        @keyword grid_points: When set, search a dense grid of this many points
            per continuous dimension instead (at most two dimensions).
        @keyword duplicate_tol: Distance in unit space below which a candidate
            duplicates an existing sample of the same source.
        @keyword seed: Seed of the start rotation and categorical sampling.
        @keyword maxiter: Iteration cap of each polish.
        """
        self.starts = int(starts)
        self.polish = int(polish)
        self.categorical_limit = int(categorical_limit)
        self.categorical_samples = int(categorical_samples)
        self.grid_points = None if grid_points is None else int(grid_points)
        self.duplicate_tol = float(duplicate_tol)
        self.seed = seed
        self.maxiter = int(maxiter)

        if self.starts < 1:
            raise ValueError('The inner search needs at least one start.')
        if self.grid_points is not None and self.grid_points < 2:
            raise ValueError('A search grid needs at least two points per dimension.')

    def copy(self, **changes):
        values = dict(self.__dict__)
        values.update(changes)
        return SearchConfig(**values)


class BestObserved(object):
    """
    The best observed output of each source, in the canonical
    maximization sense. Never worsens.
    """

    def __init__(self, n_sources, hf_index=0):
        self.per_source_best = np.full(int(n_sources), -np.inf)
        self.hf_index = int(hf_index)

        if not 0 <= self.hf_index < n_sources:
            raise ValueError('The high-fidelity index must be one of the %d sources.' % n_sources)

    @classmethod
    def from_data(cls, data, hf_index=0):
        best = cls(data.n_sources, hf_index)
        for j, y in zip(data.S, data.y):
            best.update(j, y)
        return best

    @property
    def hf_best(self):
        return self.per_source_best[self.hf_index]

    def update(self, j, y):
        """
        Record an observation of source j.

        @return: True when it improves the source's best beyond the tie
            tolerance.
        """
        current = self.per_source_best[j]
        if not np.isfinite(y):
            return False
        if np.isfinite(current) and y <= current + TIE_TOLERANCE * max(abs(current), 1.0):
            return False
        self.per_source_best[j] = y
        return True

    def copy(self):
        other = BestObserved(len(self.per_source_best), self.hf_index)
        other.per_source_best = self.per_source_best.copy()
        return other


class Candidate(object):
    """
    The winner of one source's inner optimization.
    """

    def __init__(self, source, point, value, diagnostic=None):
        self.source = source
        self.point = point
        self.value = value
        self.diagnostic = diagnostic

    def __repr__(self):
        return 'Candidate(source=%d, value=%g)' % (self.source, self.value)


class Proposal(object):
    """
    The next (point, source) to evaluate.
    """

    def __init__(self, point, source, raw_value, cost, per_source_candidates):
        self.point = point
        self.source = source
        self.raw_value = float(raw_value)
        self.scaled_value = self.raw_value / cost
        self.per_source_candidates = per_source_candidates

    def __repr__(self):
        return 'Proposal(source=%d, raw=%g, scaled=%g, point=%r)' % (self.source, self.raw_value,
            self.scaled_value, self.point)


def lf_values(mean, std, y_star):
    """
    Vectorized exploration value: std * phi((y* - mean) / std), zero where
    std is zero.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    values = np.zeros(np.broadcast(mean, std).shape)
    positive = std > 0
    if np.isfinite(y_star):
        z = (y_star - mean[positive]) / std[positive]
        values[positive] = std[positive] * std_normal_pdf(z)
    return values


def hf_values(mean, y_star):
    return np.asarray(mean, dtype=float) - y_star


def ei_values(mean, std, y_star):
    """
    Vectorized expected improvement over y*.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    gain = mean - y_star
    values = np.maximum(gain, 0.0)
    positive = std > 0
    z = gain[positive] / std[positive]
    values[positive] = gain[positive] * std_normal_cdf(z) + std[positive] * std_normal_pdf(z)
    return values


def _moments(model, u, j, noise=True):
    prediction = model.predict(u, j, noise=noise)
    return prediction.mean, np.sqrt(prediction.variance)


def af_lf(model, u, j, y_star_j):
    """
    The exploration part of expected improvement for a low-fidelity source.

    @param model: A TrainedEmulator.
    @param u: A MixedInput.
    @param j: The source index.
    @param y_star_j: The best observed output of source j.
    @return: A non-negative value.
    """
    mean, std = _moments(model, u, j)
    return float(lf_values(np.array([mean]), np.array([std]), y_star_j)[0])


def af_hf(model, u, y_star_l, hf_index=0):
    """
    Improvement of the predicted high-fidelity mean over the incumbent.
    """
    mean, _ = _moments(model, u, hf_index)
    return float(mean - y_star_l)


def af_ei(model, u, j, y_star):
    """
    Expected improvement of source j over y*, using the noise-free
    predictive variance.
    """
    mean, std = _moments(model, u, j, noise=False)
    return float(ei_values(np.array([mean]), np.array([std]), y_star)[0])


def composite_argmax(raw_values, costs):
    """
    Pick the source maximizing raw value over cost. Ties within the
    relative tolerance go to the cheaper source, then the lower index.

    @return: The winning source index, or None when no value is finite.
    """
    raw_values = np.asarray(raw_values, dtype=float)
    costs = np.asarray(costs, dtype=float)
    if np.any(costs <= 0):
        raise ValueError('Sampling costs must be positive.')

    scaled = raw_values / costs
    finite = np.isfinite(scaled)
    if not np.any(finite):
        return None

    best = np.max(scaled[finite])
    tolerance = TIE_TOLERANCE * max(abs(best), np.finfo(float).tiny)
    tied = [j for j in range(len(scaled)) if finite[j] and scaled[j] >= best - tolerance]
    return min(tied, key=lambda j: (costs[j], j))


class _SourceObjective(object):
    """
    The acquisition surface of one source over unit-space continuous
    coordinates and categorical combinations.
    """

    def __init__(self, model, domain, source, y_star, kind):
        self.model = model
        self.domain = domain
        self.source = source
        self.y_star = y_star
        self.kind = kind

    def values(self, U, T):
        X = self.domain.to_problem(U)
        noise = self.kind != 'ei'
        mean, variance = self.model.predict_arrays(X, T, self.source, noise=noise)
        if self.kind == 'improvement':
            return hf_values(mean, self.y_star)
        std = np.sqrt(variance)
        if self.kind == 'ei':
            return ei_values(mean, std, self.y_star)
        return lf_values(mean, std, self.y_star)


def _grid(dx, points):
    if dx > 2:
        raise DimensionError('Grid search supports at most two continuous dimensions, not %d.' % dx)
    axis = np.linspace(0.0, 1.0, points)
    return np.array(list(itertools.product(axis, repeat=dx))).reshape(-1, dx)


def _search_source(objective, search_cfg, combos, existing, rng):
    """
    Maximize one source's acquisition value.

    @return: A list of (value, unit point, levels) sorted best first.
    """
    domain = objective.domain
    dx = domain.dx

    if dx == 0:
        starts = np.zeros((1, 0))
    elif search_cfg.grid_points is not None:
        starts = _grid(dx, search_cfg.grid_points)
    else:
        shift = rng.random(dx)
        starts = np.mod(sobol_points(dx, search_cfg.starts) + shift, 1.0)

    n_starts, n_combos = starts.shape[0], combos.shape[0]
    U = np.repeat(starts, n_combos, axis=0)
    T = np.tile(combos, (n_starts, 1))
    values = objective.values(U, T)
    values = np.where(np.isfinite(values), values, -np.inf)

    order = np.argsort(-values, kind='stable')
    candidates = [(values[k], U[k], T[k]) for k in order]

    if dx > 0 and search_cfg.grid_points is None and search_cfg.polish > 0:
        polished = []
        for value, u0, levels in candidates[:search_cfg.polish]:
            if not np.isfinite(value):
                continue
            levels_row = levels.reshape(1, -1)

            def negative(u):
                result = objective.values(u.reshape(1, -1), levels_row)[0]
                return -result if np.isfinite(result) else np.inf

            result = optimize.minimize(negative, u0, method='L-BFGS-B', bounds=[(0.0, 1.0)] * dx,
                options={'maxiter': search_cfg.maxiter})
            if np.isfinite(result.fun) and -result.fun > value:
                polished.append((-float(result.fun), np.clip(result.x, 0.0, 1.0), levels))
        candidates = sorted(polished + candidates, key=lambda item: -item[0])

    if existing is None or len(existing[0]) == 0:
        return candidates

    X_unit, T_existing = existing
    kept = []
    for value, u, levels in candidates:
        same_levels = np.all(T_existing == levels, axis=1) if T_existing.shape[1] else np.ones(len(X_unit), dtype=bool)
        distances = np.sqrt(np.sum((X_unit[same_levels] - u) ** 2, axis=1)) if dx else np.zeros(np.sum(same_levels))
        if np.any(distances <= search_cfg.duplicate_tol):
            continue
        kept.append((value, u, levels))
    if not kept and candidates:
        logger.warning('Every candidate of source %d duplicates an existing sample; keeping the best.',
            objective.source)
        return candidates
    return kept


def propose(model, best, costs, domain, search_cfg=None, hf_acquisition='improvement'):
    """
    Propose the next (point, source) pair.

    @param model: A TrainedEmulator trained on canonical (maximization) outputs.
    @param best: The BestObserved incumbents.
    @param costs: The sampling cost of each source.
    @param domain: The design Domain.
    @keyword search_cfg: A SearchConfig.
    @keyword hf_acquisition: 'improvement', or 'ei' for single-fidelity campaigns.
    @return: A Proposal.
    """
    search_cfg = search_cfg or SearchConfig()
    costs = np.asarray(costs, dtype=float)
    if np.any(costs <= 0):
        raise ValueError('Sampling costs must be positive.')
    if len(costs) != model.n_sources:
        raise DimensionError('Got %d costs for %d sources.' % (len(costs), model.n_sources))
    if hf_acquisition not in HF_ACQUISITIONS:
        raise ValueError('Unknown high-fidelity acquisition "%s".' % hf_acquisition)

    rng = np.random.default_rng(search_cfg.seed)
    combos = domain.combinations(search_cfg.categorical_limit, search_cfg.categorical_samples, rng)

    data = model.source_data
    candidates = []
    raw_values = np.full(len(costs), -np.inf)
    diagnostics = {}
    for j in range(len(costs)):
        if j == best.hf_index:
            kind = hf_acquisition
        else:
            kind = 'lf'
        objective = _SourceObjective(model, domain, j, best.per_source_best[j], kind)

        existing = None
        if data is not None:
            mask = data.S == j
            existing = (domain.to_unit(data.X[mask]), data.T[mask])

        ranked = _search_source(objective, search_cfg, combos, existing, rng)
        if not ranked or not np.isfinite(ranked[0][0]):
            diagnostics[j] = 'no finite acquisition value'
            logger.warning('Source %d has no finite acquisition value and is skipped.', j)
            candidates.append(Candidate(j, None, -np.inf, diagnostics[j]))
            continue

        value, u, levels = ranked[0]
        point = MixedInput(domain.to_problem(u), levels)
        raw_values[j] = value
        candidates.append(Candidate(j, point, float(value)))
        logger.debug('Source %d: best %s value %g.', j, kind, value)

    winner = composite_argmax(np.where(np.isfinite(raw_values), raw_values, np.nan), costs)
    if winner is None:
        raise ProposalError('No source produced a finite acquisition value.', diagnostics)

    return Proposal(candidates[winner].point, winner, raw_values[winner], costs[winner], candidates)
