"""
Numerical primitives shared by the emulator, the acquisition search and the
benchmark harness.

The functions in latentbo.mathkit are small and pure: Gaussian kernel
distance terms, positive-definite factorizations with a jitter fallback,
Sobol streams and the standard normal density. Everything heavier is
built on top of these in latentbo.emulator.

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
import warnings

import numpy as np
from scipy import linalg
from scipy.linalg import lapack
from scipy.spatial.distance import cdist
from scipy.stats import norm, qmc

logger = logging.getLogger(__name__)

# Largest dimension a SobolStream will serve.
MAX_SOBOL_DIMENSION = 32

# Diagonal jitter ladder, as multiples of the mean diagonal.
JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class DimensionError(ValueError):
    """
    Raised when the vectors or matrices handed to a primitive disagree
    in shape.
    """
    pass


class UnsupportedDimensionError(DimensionError):
    """
    Raised when a Sobol stream is requested for more dimensions than the
    direction number table covers.
    """
    pass


class ConditioningError(ArithmeticError):
    """
    Raised when a matrix could not be factorized, even after the jitter
    ladder was exhausted.
    """

    def __init__(self, message, pivot=None, jitter=None):
        """
        @param message: A description of the failure.
        @keyword pivot: The zero-based index of the failing pivot.
        @keyword jitter: The last diagonal jitter that was tried.
        """
        ArithmeticError.__init__(self, message)
        self.pivot = pivot
        self.jitter = jitter


class SobolStream(object):
    """
    A single-owner cursor over an unscrambled (or Owen-scrambled, when
    seeded) Sobol sequence.

    Two streams created with the same dimension, skip and seed emit the
    same points. The direction numbers are the Joe-Kuo table bundled
    with scipy.
    """

    def __init__(self, dimension, skip=1, seed=None):
        """
        @param dimension: The dimension of the points, 1 to 32.
        @keyword skip: How many leading points to discard. The default
            skips the all-zeros point.
        @keyword seed: When given, the stream is scrambled with this seed.
        """
        if dimension < 1 or dimension > MAX_SOBOL_DIMENSION:
            raise UnsupportedDimensionError(
                'Sobol streams support 1 to %d dimensions, not %d.' %
                (MAX_SOBOL_DIMENSION, dimension))
        if skip < 0:
            raise ValueError('The skip count must be non-negative.')

        self.dimension = int(dimension)
        self.next_index = 0
        self._engine = qmc.Sobol(self.dimension, scramble=seed is not None,
            seed=seed)
        if skip > 0:
            self._engine.fast_forward(int(skip))
        self.next_index = int(skip)

    def draw(self, count):
        """
        Emit the next points of the stream.

        @param count: How many points to draw.
        @return: An array of shape (count, dimension) in [0,1).
        """
        if count <= 0:
            return np.empty((0, self.dimension))

        with warnings.catch_warnings():
            # Sobol balance only holds for powers of two; callers know.
            warnings.filterwarnings('ignore', message='.*balance properties.*')
            points = self._engine.random(int(count))

        self.next_index += int(count)
        return points


def sobol_points(d, n, skip=1, seed=None):
    """
    Generate n points of the d-dimensional Sobol sequence.

    @param d: The dimension.
    @param n: The number of points; zero yields an empty array.
    @keyword skip: Leading points to discard (1 drops the origin).
    @keyword seed: Optional scrambling seed.
    @return: An (n, d) array in the half-open unit hypercube.
    """
    return SobolStream(d, skip=skip, seed=seed).draw(n)


def sq_exp_distance(x, x_prime, omega):
    """
    The exponent of the Gaussian correlation function:
    sum_i 10^omega_i (x_i - x'_i)^2.

    @param x: A vector of length dx.
    @param x_prime: A vector of length dx.
    @param omega: The log10 scale exponents, length dx.
    @return: A non-negative scalar.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    x_prime = np.asarray(x_prime, dtype=float).reshape(-1)
    omega = np.asarray(omega, dtype=float).reshape(-1)

    if not (len(x) == len(x_prime) == len(omega)):
        raise DimensionError('Distance terms need equal lengths, got %d, %d and %d.' %
            (len(x), len(x_prime), len(omega)))

    return float(np.sum(10.0 ** omega * (x - x_prime) ** 2))


def sq_exp_distance_matrix(X, X_prime, omega):
    """
    Pairwise sq_exp_distance between the rows of two matrices.

    @param X: An (n, dx) array.
    @param X_prime: An (m, dx) array.
    @param omega: The log10 scale exponents, length dx.
    @return: An (n, m) array.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X_prime = np.atleast_2d(np.asarray(X_prime, dtype=float))
    omega = np.asarray(omega, dtype=float).reshape(-1)

    if X.shape[1] != len(omega) or X_prime.shape[1] != len(omega):
        raise DimensionError('Distance matrices need %d columns.' % len(omega))
    if len(omega) == 0:
        return np.zeros((X.shape[0], X_prime.shape[0]))

    weights = np.sqrt(10.0 ** omega)
    return cdist(X * weights, X_prime * weights, 'sqeuclidean')


class PSDFactor(object):
    """
    A lower Cholesky factor, together with the jitter that was needed to
    compute it. Immutable once built.
    """

    def __init__(self, lower, jitter=0.0):
        self.lower = lower
        self.jitter = jitter
        self.lower.setflags(write=False)

    @property
    def size(self):
        return self.lower.shape[0]


def psd_factorize(M):
    """
    Factorize a symmetric positive definite matrix.

    When the plain factorization fails, diagonal jitter is added
    following JITTER_LADDER (scaled by the mean diagonal) before giving
    up.

    @param M: A symmetric (n, n) matrix.
    @return: A PSDFactor.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError('Only square matrices can be factorized.')

    lower, info = lapack.dpotrf(M, lower=1, clean=1, overwrite_a=0)
    if info == 0:
        return PSDFactor(lower)
    if info < 0:
        raise ConditioningError('Illegal value in argument %d of the factorization.' % -info)

    pivot = info - 1
    scale = np.mean(np.diag(M))
    if not np.isfinite(scale) or scale <= 0:
        raise ConditioningError('Matrix diagonal is not positive.', pivot=pivot)

    identity = np.eye(M.shape[0])
    for step in JITTER_LADDER:
        jitter = step * scale
        lower, info = lapack.dpotrf(M + jitter * identity, lower=1, clean=1, overwrite_a=0)
        if info == 0:
            logger.warning('Factorized a %d x %d matrix with jitter %g.', M.shape[0], M.shape[0], jitter)
            return PSDFactor(lower, jitter)
        if info > 0:
            pivot = info - 1

    raise ConditioningError('Matrix is not positive definite, even with jitter; failed at pivot %d.' % pivot,
        pivot=pivot, jitter=JITTER_LADDER[-1] * scale)


def psd_solve(handle, b):
    """
    Solve M x = b given the factorization of M.

    @param handle: A PSDFactor.
    @param b: A vector or a matrix of right hand sides.
    @return: x, with the same shape as b.
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] != handle.size:
        raise DimensionError('Right hand side has %d rows, the factor %d.' % (b.shape[0], handle.size))
    return linalg.cho_solve((handle.lower, True), b, check_finite=False)


def log_det(handle):
    """
    @param handle: A PSDFactor.
    @return: log |M|.
    """
    return 2.0 * float(np.sum(np.log(np.diag(handle.lower))))


def std_normal_pdf(z):
    """
    The standard normal density; works on scalars and arrays.
    """
    return norm.pdf(z)


def std_normal_cdf(z):
    """
    The standard normal distribution function; works on scalars and arrays.
    """
    return norm.cdf(z)


def central_difference(f, x, step=1e-6):
    """
    Gradient of a scalar function by central differences with the same
    absolute step in every coordinate.

    @param f: A function of a 1-D array returning a scalar.
    @param x: The point.
    @keyword step: The absolute step.
    @return: The gradient, shaped like x.
    """
    x = np.asarray(x, dtype=float)
    if step <= 0:
        raise ValueError('The difference step must be positive.')
    gradient = np.empty_like(x)
    shifted = x.copy()
    for k in range(x.size):
        shifted[k] = x[k] + step
        upper = f(shifted)
        shifted[k] = x[k] - step
        lower = f(shifted)
        shifted[k] = x[k]
        gradient[k] = (upper - lower) / (2.0 * step)
    return gradient
