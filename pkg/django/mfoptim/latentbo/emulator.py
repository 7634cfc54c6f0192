"""
The latent-map Gaussian process emulator.

Every data source is treated as one more categorical input. Categorical
levels (the source indicator included) are one-hot encoded and mapped
by learned matrices onto a two dimensional latent manifold, whose
distances enter the Gaussian kernel next to the continuous inputs. Each
source carries its own nugget, and training minimizes the MAP objective
penalized by the interval score of the in-sample predictions.

All quantities are computed on standardized data: continuous inputs
scaled to [0,1], outputs centered and scaled to unit variance. The
TrainedEmulator converts back to problem units at its boundary.

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
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist
from scipy.stats import lognorm, norm

from latentbo.mathkit import (ConditioningError, DimensionError, central_difference, log_det,
    psd_factorize, psd_solve, sq_exp_distance, sq_exp_distance_matrix)

logger = logging.getLogger(__name__)

LATENT_DIMENSION = 2

OMEGA_BOUNDS = (-10.0, 6.0)
LOG_SIGMA2_BOUNDS = (-15.0, 15.0)
LOG_DELTA_BOUNDS = (np.log(1e-10), np.log(10.0))

# Prior parameters (location, scale).
OMEGA_PRIOR = (-3.0, 3.0)
BETA_PRIOR = (0.0, 1.0)
A_PRIOR = (0.0, 3.0)
SIGMA_PRIOR_SCALE = 3.0
HORSESHOE_SCALE = 0.01

FD_STEP = 1e-6

# Objective value reported for hyperparameters that cannot be factorized.
FAILED_OBJECTIVE = 1e10

PENALTY_DATA = ('in_sample', 'loo')


class EncodingError(ValueError):
    """
    Raised when a categorical level lies outside its declared cardinality.
    """
    pass


class TrainingError(RuntimeError):
    """
    Raised when no restart of the hyperparameter search produced a
    finite objective.
    """

    def __init__(self, message, diagnostics=None):
        RuntimeError.__init__(self, message)
        self.diagnostics = diagnostics or []


class MixedInput(object):
    """
    A design point: continuous coordinates in problem units and the level
    indices of the categorical variables.
    """

    def __init__(self, continuous=(), categorical=()):
        self.continuous = np.asarray(continuous, dtype=float).reshape(-1)
        self.categorical = np.asarray(categorical, dtype=int).reshape(-1)

        if len(self.continuous) + len(self.categorical) < 1:
            raise DimensionError('A design point needs at least one coordinate.')

    def __repr__(self):
        return 'MixedInput(%s, %s)' % (list(self.continuous), list(self.categorical))


class AugmentedInput(object):
    """
    A design point tagged with the (zero-based) index of its data source.
    """

    def __init__(self, point, source):
        self.point = point
        self.source = int(source)

    def __repr__(self):
        return 'AugmentedInput(%r, source=%d)' % (self.point, self.source)


def _rows(values, n, dtype):
    values = np.asarray(values, dtype=dtype)
    if values.ndim == 2 and values.shape[0] == n:
        return values
    return values.reshape(n, -1)


class MFData(object):
    """
    Multi-fidelity training data held as arrays: continuous inputs X,
    categorical levels T, source indices S and outputs y.

    Ingestion is single-owner: append() mutates in place.
    """

    def __init__(self, X, T, S, y, n_sources, cardinalities=()):
        """
        @param X: An (n, dx) array of continuous inputs.
        @param T: An (n, dt) array of categorical level indices.
        @param S: A length n array of source indices.
        @param y: A length n array of outputs.
        @param n_sources: The number of declared sources, ds.
        @keyword cardinalities: The number of levels of each categorical variable.
        """
        self.y = np.asarray(y, dtype=float).reshape(-1)
        n = len(self.y)
        self.X = _rows(X, n, float)
        self.T = _rows(T, n, int)
        self.S = np.asarray(S, dtype=int).reshape(-1)
        self.n_sources = int(n_sources)
        self.cardinalities = tuple(int(c) for c in cardinalities)

        if len(self.S) != n:
            raise DimensionError('Got %d source indices for %d outputs.' % (len(self.S), n))
        if self.T.shape[1] != len(self.cardinalities):
            raise DimensionError('Got %d categorical columns for %d cardinalities.' %
                (self.T.shape[1], len(self.cardinalities)))
        if n > 0 and (self.S.min() < 0 or self.S.max() >= self.n_sources):
            raise EncodingError('Source indices must lie in 0..%d.' % (self.n_sources - 1))
        for k, cardinality in enumerate(self.cardinalities):
            if n > 0 and (self.T[:, k].min() < 0 or self.T[:, k].max() >= cardinality):
                raise EncodingError('Levels of categorical variable %d must lie in 0..%d.' % (k, cardinality - 1))

    @classmethod
    def from_records(cls, records, n_sources, cardinalities=()):
        """
        Build data from a list of (AugmentedInput, y) pairs.
        """
        records = list(records)
        dx = len(records[0][0].point.continuous) if records else 0
        X = np.array([u.point.continuous for u, _ in records], dtype=float).reshape(len(records), dx)
        T = np.array([u.point.categorical for u, _ in records], dtype=int).reshape(len(records), len(cardinalities))
        S = [u.source for u, _ in records]
        y = [value for _, value in records]
        return cls(X, T, S, y, n_sources, cardinalities)

    @property
    def n(self):
        return len(self.y)

    @property
    def dx(self):
        return self.X.shape[1]

    @property
    def dt(self):
        return self.T.shape[1]

    def inputs(self):
        """
        @return: The training inputs as a list of AugmentedInput.
        """
        return [AugmentedInput(MixedInput(self.X[i], self.T[i]), self.S[i]) for i in range(self.n)]

    def source_counts(self):
        return np.bincount(self.S, minlength=self.n_sources)

    def append(self, point, source, y):
        """
        Add one observation.
        """
        self.X = np.vstack([self.X, point.continuous.reshape(1, -1)])
        self.T = np.vstack([self.T, point.categorical.reshape(1, -1)])
        self.S = np.append(self.S, int(source))
        self.y = np.append(self.y, float(y))

    def with_outputs(self, y):
        """
        @return: A copy of this data with the outputs replaced.
        """
        return MFData(self.X.copy(), self.T.copy(), self.S.copy(), y, self.n_sources, self.cardinalities)

    def subset(self, mask):
        return MFData(self.X[mask], self.T[mask], self.S[mask], self.y[mask], self.n_sources, self.cardinalities)


class Scaling(object):
    """
    The affine maps between problem units and the standardized space the
    emulator works in.
    """

    def __init__(self, lower, upper, y_mean=0.0, y_std=1.0):
        self.lower = np.asarray(lower, dtype=float).reshape(-1)
        self.upper = np.asarray(upper, dtype=float).reshape(-1)
        span = self.upper - self.lower
        self.span = np.where(span > 0, span, 1.0)
        self.y_mean = float(y_mean)
        self.y_std = float(y_std) if y_std > 0 else 1.0

    @classmethod
    def identity(cls, dx):
        return cls(np.zeros(dx), np.ones(dx))

    @classmethod
    def from_data(cls, data, bounds=None):
        """
        Min-max scale the continuous inputs (over the training data, or
        over explicit bounds) and standardize the pooled outputs.
        """
        if bounds is not None:
            lower, upper = bounds
        elif data.n > 0:
            lower, upper = data.X.min(axis=0), data.X.max(axis=0)
        else:
            lower, upper = np.zeros(data.dx), np.ones(data.dx)
        y_std = data.y.std() if data.n > 1 else 1.0
        return cls(lower, upper, data.y.mean() if data.n else 0.0, y_std)

    def scale_x(self, X):
        return (np.asarray(X, dtype=float) - self.lower) / self.span

    def unscale_x(self, X):
        return self.lower + np.asarray(X, dtype=float) * self.span

    def transform(self, data):
        """
        @return: A standardized copy of data.
        """
        return MFData(self.scale_x(data.X), data.T.copy(), data.S.copy(),
            (data.y - self.y_mean) / self.y_std, data.n_sources, data.cardinalities)

    def mean_out(self, mean):
        return self.y_mean + self.y_std * mean

    def variance_out(self, variance):
        return self.y_std ** 2 * variance


class Hyperparameters(object):
    """
    Everything the MAP estimation produces: beta, sigma2, omega, the
    fidelity and design latent maps and the nugget vector.
    """

    def __init__(self, beta, sigma2, omega, A_fidelity, delta, A_design=None, cardinalities=()):
        self.beta = float(beta)
        self.sigma2 = float(sigma2)
        self.omega = np.asarray(omega, dtype=float).reshape(-1)
        self.A_fidelity = np.atleast_2d(np.asarray(A_fidelity, dtype=float))
        self.delta = np.asarray(delta, dtype=float).reshape(-1)
        self.cardinalities = tuple(int(c) for c in cardinalities)
        self.A_design = None if A_design is None else np.atleast_2d(np.asarray(A_design, dtype=float))

        if self.sigma2 <= 0:
            raise ValueError('The process variance must be positive.')
        if np.any(self.delta < 0):
            raise ValueError('Nuggets must be non-negative.')
        if len(self.delta) != self.A_fidelity.shape[0]:
            raise DimensionError('Need one nugget per source: %d nuggets, %d sources.' %
                (len(self.delta), self.A_fidelity.shape[0]))
        if self.cardinalities:
            if self.A_design is None or self.A_design.shape[0] != sum(self.cardinalities):
                raise DimensionError('The design map needs %d rows.' % sum(self.cardinalities))
        elif self.A_design is not None:
            raise DimensionError('A design map was given without categorical variables.')

    @property
    def n_sources(self):
        return self.A_fidelity.shape[0]

    @property
    def dx(self):
        return len(self.omega)


class EmulatorOptions(object):
    """
    Training options of the emulator.
    """

    def __init__(self, epsilon=0.08, coverage_v=0.05, restarts=16, maxiter=200,
            dz=LATENT_DIMENSION, shared_nugget=False, fixed_nugget=None,
            literal_prior_sign=False, literal_noise_term=False,
            penalty_data='in_sample', bounds=None, seed=0, workers=1):
        """
        @keyword epsilon: Weight of the interval score penalty; 0 disables it.
        @keyword coverage_v: The interval score is for the central (1-v) interval.
        @keyword restarts: Number of local searches, warm start included.
        @keyword maxiter: Iteration cap of each local search.
        @keyword dz: Latent manifold dimension.
        @keyword shared_nugget: One nugget for all sources.
        @keyword fixed_nugget: Hold every nugget at this value instead of estimating it.
        @keyword literal_prior_sign: Add the log prior instead of subtracting it.
        @keyword literal_noise_term: Add the bare nugget to the predictive
            variance instead of the scaled noise variance.
        @keyword penalty_data: 'in_sample' or 'loo' predictions for the penalty.
        @keyword bounds: Optional (lower, upper) used to scale continuous inputs.
        @keyword seed: Seed of the restart draws.
        @keyword workers: Restarts evaluated concurrently.
        """
        self.epsilon = float(epsilon)
        self.coverage_v = float(coverage_v)
        self.restarts = int(restarts)
        self.maxiter = int(maxiter)
        self.dz = int(dz)
        self.shared_nugget = bool(shared_nugget)
        self.fixed_nugget = fixed_nugget
        self.literal_prior_sign = bool(literal_prior_sign)
        self.literal_noise_term = bool(literal_noise_term)
        self.penalty_data = penalty_data
        self.bounds = bounds
        self.seed = seed
        self.workers = int(workers)

        if self.epsilon < 0:
            raise ValueError('epsilon must be non-negative.')
        if not 0.0 < self.coverage_v < 1.0:
            raise ValueError('The coverage parameter must lie in (0, 1).')
        if self.restarts < 1:
            raise ValueError('At least one restart is needed.')
        if self.penalty_data not in PENALTY_DATA:
            raise ValueError('Unknown penalty data "%s".' % self.penalty_data)

    def copy(self, **changes):
        values = dict(self.__dict__)
        values.update(changes)
        return EmulatorOptions(**values)


class ParameterLayout(object):
    """
    The flat, unconstrained parameter vector searched by the optimizer:
    omega, the fidelity map, the design map, log delta, beta and
    log sigma2, in that order.
    """

    def __init__(self, dx, n_sources, cardinalities=(), options=None):
        options = options or EmulatorOptions()
        self.dx = int(dx)
        self.n_sources = int(n_sources)
        self.cardinalities = tuple(cardinalities)
        self.dz = options.dz
        self.shared_nugget = options.shared_nugget
        self.fixed_nugget = options.fixed_nugget

        if self.fixed_nugget is not None:
            self.n_delta = 0
        elif self.shared_nugget:
            self.n_delta = 1
        else:
            self.n_delta = self.n_sources

        self.n_fidelity = self.n_sources * self.dz
        self.n_design = sum(self.cardinalities) * self.dz

        offset = 0
        self.omega = slice(offset, offset + self.dx)
        offset += self.dx
        self.fidelity = slice(offset, offset + self.n_fidelity)
        offset += self.n_fidelity
        self.design = slice(offset, offset + self.n_design)
        offset += self.n_design
        self.log_delta = slice(offset, offset + self.n_delta)
        offset += self.n_delta
        self.beta = offset
        self.log_sigma2 = offset + 1
        self.size = offset + 2

    def pack(self, hyper):
        vector = np.empty(self.size)
        vector[self.omega] = hyper.omega
        vector[self.fidelity] = hyper.A_fidelity.ravel()
        if self.n_design:
            vector[self.design] = hyper.A_design.ravel()
        if self.n_delta:
            delta = hyper.delta[:self.n_delta]
            vector[self.log_delta] = np.log(np.maximum(delta, np.exp(LOG_DELTA_BOUNDS[0])))
        vector[self.beta] = hyper.beta
        vector[self.log_sigma2] = np.log(hyper.sigma2)
        return vector

    def unpack(self, vector):
        vector = np.asarray(vector, dtype=float)
        if self.fixed_nugget is not None:
            delta = np.full(self.n_sources, float(self.fixed_nugget))
        else:
            delta = np.exp(vector[self.log_delta])
            if self.shared_nugget:
                delta = np.full(self.n_sources, delta[0])

        A_design = None
        if self.n_design:
            A_design = vector[self.design].reshape(sum(self.cardinalities), self.dz)

        return Hyperparameters(vector[self.beta], np.exp(vector[self.log_sigma2]),
            vector[self.omega], vector[self.fidelity].reshape(self.n_sources, self.dz),
            delta, A_design=A_design, cardinalities=self.cardinalities)

    def bounds(self):
        bounds = [OMEGA_BOUNDS] * self.dx
        bounds += [(None, None)] * (self.n_fidelity + self.n_design)
        bounds += [LOG_DELTA_BOUNDS] * self.n_delta
        bounds += [(None, None), LOG_SIGMA2_BOUNDS]
        return bounds

    def sample_prior(self, rng):
        """
        Draw a starting vector from the priors, clipped to the bounds.
        """
        vector = np.empty(self.size)
        vector[self.omega] = np.clip(rng.normal(OMEGA_PRIOR[0], OMEGA_PRIOR[1], self.dx), *OMEGA_BOUNDS)
        vector[self.fidelity] = rng.normal(A_PRIOR[0], A_PRIOR[1], self.n_fidelity)
        vector[self.design] = rng.normal(A_PRIOR[0], A_PRIOR[1], self.n_design)
        if self.n_delta:
            delta = np.abs(HORSESHOE_SCALE * rng.standard_cauchy(self.n_delta))
            vector[self.log_delta] = np.clip(np.log(np.maximum(delta, 1e-300)), *LOG_DELTA_BOUNDS)
        vector[self.beta] = rng.normal(BETA_PRIOR[0], BETA_PRIOR[1])
        vector[self.log_sigma2] = np.clip(2.0 * rng.normal(0.0, SIGMA_PRIOR_SCALE), *LOG_SIGMA2_BOUNDS)
        return vector

    def clip(self, vector):
        lower = np.array([b[0] if b[0] is not None else -np.inf for b in self.bounds()])
        upper = np.array([b[1] if b[1] is not None else np.inf for b in self.bounds()])
        return np.clip(vector, lower, upper)


def encode_prior(levels, cardinalities):
    """
    Grouped one-hot encoding of a combination of categorical levels.

    @param levels: One level index per categorical variable.
    @param cardinalities: The number of levels of each variable.
    @return: A binary vector of length sum(cardinalities).
    """
    levels = np.asarray(levels, dtype=int).reshape(-1)
    if len(levels) != len(cardinalities):
        raise DimensionError('Got %d levels for %d categorical variables.' % (len(levels), len(cardinalities)))

    zeta = np.zeros(int(sum(cardinalities)))
    offset = 0
    for level, cardinality in zip(levels, cardinalities):
        if level < 0 or level >= cardinality:
            raise EncodingError('Level %d is outside 0..%d.' % (level, cardinality - 1))
        zeta[offset + level] = 1.0
        offset += cardinality
    return zeta


def encode_priors(T, cardinalities):
    """
    Row-wise encode_prior over an (n, dt) array of levels.
    """
    T = np.asarray(T, dtype=int).reshape(-1, len(cardinalities))
    zeta = np.zeros((T.shape[0], int(sum(cardinalities))))
    offset = 0
    rows = np.arange(T.shape[0])
    for k, cardinality in enumerate(cardinalities):
        if T.shape[0] and (T[:, k].min() < 0 or T[:, k].max() >= cardinality):
            raise EncodingError('Levels of categorical variable %d must lie in 0..%d.' % (k, cardinality - 1))
        zeta[rows, offset + T[:, k]] = 1.0
        offset += cardinality
    return zeta


def latent_position(zeta, A):
    """
    Map a prior vector onto the latent manifold: z = zeta A.
    """
    zeta = np.asarray(zeta, dtype=float).reshape(-1)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != len(zeta):
        raise DimensionError('The map has %d rows, the prior vector %d entries.' % (A.shape[0], len(zeta)))
    return zeta.dot(A)


def latent_matrix(T, S, hyper):
    """
    Latent coordinates of many inputs; the fidelity manifold comes first,
    the design manifold (if any) is appended column-wise so that squared
    distances of the two manifolds add up.
    """
    S = np.asarray(S, dtype=int).reshape(-1)
    if S.size and (S.min() < 0 or S.max() >= hyper.n_sources):
        raise EncodingError('Source indices must lie in 0..%d.' % (hyper.n_sources - 1))
    Z = encode_priors(S.reshape(-1, 1), (hyper.n_sources,)).dot(hyper.A_fidelity)
    if hyper.cardinalities:
        Z = np.hstack([Z, encode_priors(T, hyper.cardinalities).dot(hyper.A_design)])
    return Z


def correlation(u, u_prime, hyper):
    """
    The kernel of two augmented inputs: the Gaussian correlation of the
    continuous coordinates times exp(-squared latent distance).
    """
    exponent = sq_exp_distance(u.point.continuous, u_prime.point.continuous, hyper.omega)

    z = latent_position(encode_prior([u.source], (hyper.n_sources,)), hyper.A_fidelity)
    z_prime = latent_position(encode_prior([u_prime.source], (hyper.n_sources,)), hyper.A_fidelity)
    exponent += float(np.sum((z - z_prime) ** 2))

    if hyper.cardinalities:
        z = latent_position(encode_prior(u.point.categorical, hyper.cardinalities), hyper.A_design)
        z_prime = latent_position(encode_prior(u_prime.point.categorical, hyper.cardinalities), hyper.A_design)
        exponent += float(np.sum((z - z_prime) ** 2))

    return float(np.exp(-exponent))


def correlation_matrix(Xa, Ta, Sa, Xb, Tb, Sb, hyper):
    """
    Pairwise correlations between two sets of inputs, as an (na, nb) array.
    """
    exponent = sq_exp_distance_matrix(Xa, Xb, hyper.omega)
    exponent += cdist(latent_matrix(Ta, Sa, hyper), latent_matrix(Tb, Sb, hyper), 'sqeuclidean')
    return np.exp(-exponent)


def assemble_R_delta(inputs, hyper):
    """
    Build R + N_delta for a list of augmented inputs.
    """
    data = MFData.from_records([(u, 0.0) for u in inputs], hyper.n_sources, hyper.cardinalities)
    return _R_delta(data, hyper)[1]


def _R_delta(data, hyper):
    R = correlation_matrix(data.X, data.T, data.S, data.X, data.T, data.S, hyper)
    return R, R + np.diag(hyper.delta[data.S])


def log_prior(hyper, options=None):
    """
    Sum of the independent log priors of the free parameters.
    """
    options = options or EmulatorOptions()
    total = np.sum(norm.logpdf(hyper.omega, *OMEGA_PRIOR))
    total += norm.logpdf(hyper.beta, *BETA_PRIOR)
    total += np.sum(norm.logpdf(hyper.A_fidelity, *A_PRIOR))
    if hyper.A_design is not None:
        total += np.sum(norm.logpdf(hyper.A_design, *A_PRIOR))
    total += lognorm.logpdf(np.sqrt(hyper.sigma2), SIGMA_PRIOR_SCALE)

    if options.fixed_nugget is None:
        delta = hyper.delta[:1] if options.shared_nugget else hyper.delta
        total += np.sum(horseshoe_log_density(delta))
    return float(total)


def horseshoe_log_density(delta, scale=HORSESHOE_SCALE):
    """
    Tight-bound surrogate of the half-horseshoe log density, up to a
    constant: log log(1 + 2 (scale / delta)^2).
    """
    delta = np.asarray(delta, dtype=float)
    return np.log(np.log1p(2.0 * (scale / delta) ** 2))


class _Posterior(object):
    """
    The factorized quantities of one (hyper, data) pair.
    """

    def __init__(self, hyper, data):
        self.hyper = hyper
        self.data = data
        self.R, R_delta = _R_delta(data, hyper)
        self.factor = psd_factorize(R_delta)
        self.residual = data.y - hyper.beta
        self.alpha = psd_solve(self.factor, self.residual)
        self.ones_solved = psd_solve(self.factor, np.ones(data.n))
        self.ones_quad = float(np.sum(self.ones_solved))

    def neg_log_likelihood(self):
        n = self.data.n
        return (0.5 * n * np.log(self.hyper.sigma2) + 0.5 * log_det(self.factor) +
            0.5 * float(self.residual.dot(self.alpha)) / self.hyper.sigma2)

    def moments(self, r, sources, literal_noise_term=False, noise=True):
        """
        Predictive mean and variance in standardized space.

        @param r: An (m, n) array of correlations to the training inputs.
        @param sources: The source index of each of the m queries.
        """
        hyper = self.hyper
        mean = hyper.beta + r.dot(self.alpha)
        solved = psd_solve(self.factor, r.T)
        quad = np.sum(r.T * solved, axis=0)
        g = 1.0 - r.dot(self.ones_solved)
        variance = hyper.sigma2 * (1.0 - quad + g ** 2 / self.ones_quad)
        if noise:
            nugget = hyper.delta[np.asarray(sources, dtype=int)]
            variance = variance + (nugget if literal_noise_term else hyper.sigma2 * nugget)
        return mean, variance

    def in_sample_moments(self, literal_noise_term=False):
        return self.moments(self.R, self.data.S, literal_noise_term)

    def loo_moments(self):
        inverse_diag = np.diag(psd_solve(self.factor, np.eye(self.data.n)))
        mean = self.data.y - self.alpha / inverse_diag
        variance = self.hyper.sigma2 / inverse_diag
        return mean, variance


def neg_log_posterior(hyper, data, options=None):
    """
    The MAP objective: negative log likelihood minus the log prior.

    @param hyper: The Hyperparameters.
    @param data: Standardized MFData.
    @keyword options: EmulatorOptions; controls the prior sign and which
        nugget priors count.
    @return: L_MAP.
    """
    options = options or EmulatorOptions()
    return _neg_log_posterior(_Posterior(hyper, data), options)


def _neg_log_posterior(posterior, options):
    prior = log_prior(posterior.hyper, options)
    if options.literal_prior_sign:
        return posterior.neg_log_likelihood() + prior
    return posterior.neg_log_likelihood() - prior


class Prediction(object):
    """
    Predictive mean and variance of one query.
    """

    def __init__(self, mean, variance):
        self.mean = float(mean)
        self.variance = float(variance)

    @property
    def std(self):
        return np.sqrt(self.variance)

    def __repr__(self):
        return 'Prediction(mean=%g, variance=%g)' % (self.mean, self.variance)


def interval_bounds(mean, variance, v):
    """
    The central (1-v) predictive interval of Gaussian predictions.
    """
    half_width = norm.ppf(1.0 - v / 2.0) * np.sqrt(np.maximum(variance, 0.0))
    return mean - half_width, mean + half_width


def interval_score_bounds(lower, upper, observations, v):
    """
    The negatively oriented interval score of explicit intervals,
    averaged over samples.
    """
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    y = np.asarray(observations, dtype=float).reshape(-1)
    if not (len(lower) == len(upper) == len(y)):
        raise DimensionError('Intervals and observations differ in length.')
    if not 0.0 < v < 1.0:
        raise ValueError('The coverage parameter must lie in (0, 1).')

    score = (upper - lower)
    score = score + (2.0 / v) * (lower - y) * (y < lower)
    score = score + (2.0 / v) * (y - upper) * (y > upper)
    return float(np.mean(score))


def interval_score(predictions, observations, v=0.05):
    """
    The interval score of a list of Prediction objects against observations.
    """
    predictions = list(predictions)
    if len(predictions) != len(np.atleast_1d(observations)):
        raise DimensionError('Got %d predictions for %d observations.' %
            (len(predictions), len(np.atleast_1d(observations))))
    mean = np.array([p.mean for p in predictions])
    variance = np.array([p.variance for p in predictions])
    lower, upper = interval_bounds(mean, variance, v)
    return interval_score_bounds(lower, upper, observations, v)


def penalized_objective(hyper, data, epsilon=0.08, options=None):
    """
    L_MAP + epsilon |L_MAP| IS_v, the interval score computed on the
    training points under the candidate hyperparameters.
    """
    options = options or EmulatorOptions(epsilon=epsilon)
    posterior = _Posterior(hyper, data)
    return _penalized(posterior, epsilon, options)


def _penalized(posterior, epsilon, options):
    value = _neg_log_posterior(posterior, options)
    if epsilon == 0:
        return value

    if options.penalty_data == 'loo':
        mean, variance = posterior.loo_moments()
    else:
        mean, variance = posterior.in_sample_moments(options.literal_noise_term)
    lower, upper = interval_bounds(mean, variance, options.coverage_v)
    score = interval_score_bounds(lower, upper, posterior.data.y, options.coverage_v)
    return value + epsilon * abs(value) * score


class TrainedEmulator(object):
    """
    An emulator conditioned on its training data. Prediction leaves the
    model unchanged apart from clamp_count, the tally of negative
    variances that were clamped to zero.
    """

    def __init__(self, hyper, data, scaling, options, source_data=None, vector=None, objective=None):
        """
        @param hyper: The Hyperparameters, in standardized space.
        @param data: The standardized training data.
        @param scaling: The Scaling used to standardize.
        @param options: The EmulatorOptions used in training.
        @keyword source_data: The training data in problem units.
        @keyword vector: The optimum parameter vector (for warm starts).
        @keyword objective: The objective value at the optimum.
        """
        self.hyper = hyper
        self.data = data
        self.scaling = scaling
        self.options = options
        self.source_data = source_data
        self.vector = vector
        self.objective = objective
        self.clamp_count = 0

        self._posterior = _Posterior(hyper, data)
        self.factor = self._posterior.factor
        self.cached_alpha = self._posterior.alpha

    @property
    def n_sources(self):
        return self.hyper.n_sources

    def predict_arrays(self, X, T, source, noise=True):
        """
        Vectorized prediction for one source.

        @param X: An (m, dx) array of continuous inputs in problem units.
        @param T: An (m, dt) array of categorical levels.
        @param source: The source index.
        @keyword noise: Include the source's noise term in the variance.
        @return: (mean, variance) arrays in problem units.
        """
        if source < 0 or source >= self.n_sources:
            raise EncodingError('Source %d is not one of the %d sources.' % (source, self.n_sources))

        if self.data.dx:
            X = np.asarray(X, dtype=float).reshape(-1, self.data.dx)
            m = X.shape[0]
            T = np.asarray(T, dtype=int).reshape(m, self.data.dt)
        else:
            T = np.asarray(T, dtype=int).reshape(-1, self.data.dt)
            m = T.shape[0]
            X = np.zeros((m, 0))
        Xs = self.scaling.scale_x(X)
        sources = np.full(m, int(source))

        r = correlation_matrix(Xs, T, sources, self.data.X, self.data.T, self.data.S, self.hyper)
        mean, variance = self._posterior.moments(r, sources, self.options.literal_noise_term, noise)

        negative = variance < 0
        if np.any(negative):
            self.clamp_count += int(np.sum(negative))
            logger.warning('Clamped %d negative predictive variances (smallest %g).',
                np.sum(negative), variance.min())
            variance = np.maximum(variance, 0.0)

        return self.scaling.mean_out(mean), self.scaling.variance_out(variance)

    def predict(self, u, source, noise=True):
        """
        @param u: A MixedInput in problem units.
        @param source: The source index.
        @return: A Prediction in problem units.
        """
        mean, variance = self.predict_arrays(u.continuous.reshape(1, -1), u.categorical.reshape(1, -1),
            source, noise)
        return Prediction(mean[0], variance[0])

    def noise_variances(self):
        """
        @return: The estimated noise variance of each source, in problem
            units squared.
        """
        return self.scaling.variance_out(self.hyper.sigma2 * self.hyper.delta)

    def latent_coordinates(self):
        """
        @return: An (ds, dz) array: each source's point on the fidelity manifold.
        """
        return self.hyper.A_fidelity.copy()

    def interval_score(self, v=None):
        """
        @return: The in-sample interval score, in problem units.
        """
        v = self.options.coverage_v if v is None else v
        mean, variance = self._posterior.in_sample_moments(self.options.literal_noise_term)
        lower, upper = interval_bounds(mean, np.maximum(variance, 0.0), v)
        return self.scaling.y_std * interval_score_bounds(lower, upper, self.data.y, v)


def predict(model, u, j):
    """
    Predict source j at the design point u.
    """
    return model.predict(u, j)


def condition(hyper, data, options=None, scaling=None, source_data=None):
    """
    Condition an emulator on fixed hyperparameters.

    @param hyper: Hyperparameters in the standardized space of scaling.
    @param data: Training data in problem units.
    @keyword scaling: Defaults to the identity (data is already standardized).
    """
    options = options or EmulatorOptions()
    scaling = scaling or Scaling.identity(data.dx)
    return TrainedEmulator(hyper, scaling.transform(data), scaling, options,
        source_data=source_data if source_data is not None else data)


def fit(data, options=None, warm_start=None):
    """
    Train an emulator by multi-start minimization of the penalized MAP
    objective.

    @param data: MFData in problem units.
    @keyword options: EmulatorOptions.
    @keyword warm_start: A parameter vector; the first restart starts there.
    @return: A TrainedEmulator.
    """
    options = options or EmulatorOptions()
    if not isinstance(data, MFData):
        raise TypeError('fit expects MFData; build it with MFData.from_records.')
    if data.n == 0:
        raise TrainingError('There is no training data.')

    if data.n < data.dx + 2:
        logger.warning('Training on %d samples in %d continuous dimensions; expect a poor fit.', data.n, data.dx)
    for j, count in enumerate(data.source_counts()):
        if count == 0:
            logger.warning('Source %d has no training samples.', j)
        elif count < 2:
            logger.warning('Source %d has a single training sample.', j)

    scaling = Scaling.from_data(data, options.bounds)
    standardized = scaling.transform(data)
    layout = ParameterLayout(data.dx, data.n_sources, data.cardinalities, options)

    def objective(vector):
        try:
            value = _penalized(_Posterior(layout.unpack(vector), standardized), options.epsilon, options)
        except (ConditioningError, ValueError, FloatingPointError):
            return FAILED_OBJECTIVE
        if not np.isfinite(value):
            return FAILED_OBJECTIVE
        return min(value, FAILED_OBJECTIVE)

    def gradient(vector):
        return central_difference(objective, vector, FD_STEP)

    rng = np.random.default_rng(options.seed)
    starts = [layout.sample_prior(rng) for _ in range(options.restarts)]
    if warm_start is not None and len(warm_start) == layout.size:
        starts[0] = layout.clip(np.asarray(warm_start, dtype=float))

    def local_search(start):
        index, x0 = start
        initial = objective(x0)
        if initial >= FAILED_OBJECTIVE:
            return index, None, 'restart %d: the starting point could not be factorized' % index
        result = optimize.minimize(objective, x0, method='L-BFGS-B', jac=gradient, bounds=layout.bounds(),
            options={'maxiter': options.maxiter})
        if result.fun >= FAILED_OBJECTIVE:
            return index, None, 'restart %d: %s' % (index, result.message)
        return index, result, None

    if options.workers > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            outcomes = list(pool.map(local_search, enumerate(starts)))
    else:
        outcomes = [local_search(start) for start in enumerate(starts)]

    diagnostics = [message for _, _, message in outcomes if message]
    results = [(result.fun, index, result) for index, result, _ in outcomes if result is not None]
    if not results:
        raise TrainingError('All %d restarts failed.' % options.restarts, diagnostics)

    best_value, best_index, best = min(results, key=lambda item: (item[0], item[1]))
    logger.debug('Best of %d restarts is %d with objective %g.', len(results), best_index, best_value)
    for message in diagnostics:
        logger.debug(message)

    hyper = layout.unpack(best.x)
    try:
        model = TrainedEmulator(hyper, standardized, scaling, options, source_data=data,
            vector=best.x.copy(), objective=float(best_value))
    except ConditioningError as ex:
        raise TrainingError('The optimum could not be factorized: %s' % ex, diagnostics)
    return model
