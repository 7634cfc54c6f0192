"""
Analytic multi-fidelity test families.

Borehole (one high-fidelity and four low-fidelity variants, 8 inputs),
Wing weight (one high-fidelity and three low-fidelity variants, 10
inputs, the dynamic pressure q carried as an inactive dimension) and a
one dimensional toy family whose low-fidelity sources are biased on
opposite halves of the domain.

Families are registered by name in FAMILIES; make_problem() turns one
into an MFProblem for the optimization loop.

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

import numpy as np
from scipy import optimize

from latentbo.acquisition import Domain
from latentbo.loop import MFProblem
from latentbo.mathkit import sobol_points

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 40000.0

RRMSE_POINTS = 10000

# Relative slack (of each variable's range) accepted outside the bounds.
DOMAIN_TOLERANCE = 1e-9

OVERRIDE_KEYS = ('budget', 'costs', 'n_init', 'noise', 'sources')


class DomainError(ValueError):
    """
    Raised when a benchmark is evaluated outside its declared domain.
    """
    pass


class UnknownFamilyError(KeyError):
    """
    Raised for a family or variant name that is not registered.
    """

    def __str__(self):
        return str(self.args[0]) if self.args else ''


BOREHOLE_VARIABLES = ('rw', 'r', 'Tu', 'Hu', 'Tl', 'Hl', 'L', 'Kw')
BOREHOLE_LOWER = np.array([0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0])
BOREHOLE_UPPER = np.array([0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0])

# Coefficients of Hu, Hl, the L Tu term, Tu/Tl, and the factor on r in the
# outer logarithm. The inner logarithm is always ln(r/rw).
BOREHOLE_VARIANTS = {
    'HF': dict(hu=1.0, hl=1.0, l=2.0, tl=1.0, r=1.0),
    'LF1': dict(hu=1.0, hl=0.8, l=1.0, tl=1.0, r=1.0),
    'LF2': dict(hu=1.0, hl=1.0, l=8.0, tl=0.75, r=1.0),
    'LF3': dict(hu=1.09, hl=1.0, l=3.0, tl=1.0, r=4.0),
    'LF4': dict(hu=1.05, hl=1.0, l=3.0, tl=1.0, r=2.0),
}

WING_VARIABLES = ('Sw', 'Wfw', 'A', 'Lambda', 'q', 'lambda', 'tc', 'Nz', 'Wdg', 'Wp')
WING_LOWER = np.array([150.0, 220.0, 6.0, -10.0, 16.0, 0.5, 0.08, 2.5, 1700.0, 0.025])
WING_UPPER = np.array([200.0, 300.0, 10.0, 10.0, 45.0, 1.0, 0.18, 6.0, 2500.0, 0.08])

# Exponent on Sw, and the additive payload term: Sw*Wp, Wp or nothing.
WING_VARIANTS = {
    'HF': dict(exponent=0.758, payload='area'),
    'LF1': dict(exponent=0.758, payload='plain'),
    'LF2': dict(exponent=0.8, payload='plain'),
    'LF3': dict(exponent=0.9, payload=None),
}

TOY_LOWER = np.array([0.0])
TOY_UPPER = np.array([10.0])


def borehole_formula(x, hu=1.0, hl=1.0, l=2.0, tl=1.0, r=1.0):
    """
    The parametrized Borehole water flow rate.

    @param x: An (n, 8) array, or one 8-vector.
    @return: An array of n values, or a scalar.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    rw, radius, Tu, Hu, Tl, Hl, L, Kw = [x[:, k] for k in range(8)]

    inner = np.log(radius / rw)
    outer = np.log(r * radius / rw)
    numerator = 2.0 * np.pi * Tu * (hu * Hu - hl * Hl)
    denominator = outer * (1.0 + l * L * Tu / (inner * rw ** 2 * Kw) + tl * Tu / Tl)
    values = numerator / denominator
    return float(values[0]) if single else values


def wing_formula(x, exponent=0.758, payload='area'):
    """
    The parametrized wing weight. The sweep angle is in degrees; the
    fifth variable (q) does not enter the formula.

    @param x: An (n, 10) array, or one 10-vector.
    @return: An array of n values, or a scalar.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    Sw, Wfw, A, sweep, _, taper, tc, Nz, Wdg, Wp = [x[:, k] for k in range(10)]

    cos_sweep = np.cos(np.deg2rad(sweep))
    values = (0.036 * Sw ** exponent * Wfw ** 0.0035 * (A / cos_sweep ** 2) ** 0.6 *
        taper ** 0.04 * (100.0 * tc / cos_sweep) ** -0.3 * (Nz * Wdg) ** 0.49)
    if payload == 'area':
        values = values + Sw * Wp
    elif payload == 'plain':
        values = values + Wp
    return float(values[0]) if single else values


def toy_formula(x, variant='HF'):
    """
    One dimensional multimodal function on [0, 10]. LF1 is biased for
    x > 5, LF2 for x < 5.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    t = np.atleast_2d(x)[:, 0]

    values = np.sin(1.5 * t) + 0.1 * (t - 6.0) ** 2
    if variant == 'LF1':
        values = values + 0.4 * np.maximum(t - 5.0, 0.0) ** 2
    elif variant == 'LF2':
        values = values + 0.3 * np.maximum(5.0 - t, 0.0) ** 2
    elif variant != 'HF':
        raise UnknownFamilyError('toy1d has no variant "%s".' % variant)
    return float(values[0]) if single else values


class SourceSpec(object):
    """
    One data source of a family.
    """

    def __init__(self, family, variant, cost, n_init, noise_var, function):
        self.family = family
        self.variant = variant
        self.cost = float(cost)
        self.n_init = int(n_init)
        self.noise_var = float(noise_var)
        self.function = function

        if self.cost <= 0:
            raise ValueError('The cost of %s/%s must be positive.' % (family, variant))
        if self.noise_var < 0:
            raise ValueError('The noise variance of %s/%s must be non-negative.' % (family, variant))

    def __call__(self, x):
        return self.function(x)

    def __repr__(self):
        return 'SourceSpec(%s/%s, cost=%g, n_init=%d, noise_var=%g)' % (self.family, self.variant,
            self.cost, self.n_init, self.noise_var)


class Family(object):
    """
    A registered benchmark family: variables, bounds, optimization sense,
    default budget and its sources in declaration order (HF first).
    """

    def __init__(self, name, variables, lower, upper, sources, sense='minimize', hf_variant='HF',
            budget=DEFAULT_BUDGET, info=''):
        self.name = name
        self.variables = tuple(variables)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.sources = list(sources)
        self.sense = sense
        self.hf_variant = hf_variant
        self.budget = float(budget)
        self.info = info

    @property
    def dim(self):
        return len(self.variables)

    @property
    def variants(self):
        return [spec.variant for spec in self.sources]

    @property
    def lf_variants(self):
        return [v for v in self.variants if v != self.hf_variant]

    def source(self, variant):
        for spec in self.sources:
            if spec.variant == variant:
                return spec
        raise UnknownFamilyError('%s has no variant "%s"; choose from %s.' %
            (self.name, variant, ', '.join(self.variants)))

    def check_input(self, x):
        """
        Raise DomainError unless every row of x lies inside the bounds.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise DomainError('%s takes %d variables, got %d.' % (self.name, self.dim, x.shape[1]))
        slack = DOMAIN_TOLERANCE * (self.upper - self.lower)
        outside = (x < self.lower - slack) | (x > self.upper + slack) | ~np.isfinite(x)
        if np.any(outside):
            row, column = np.argwhere(outside)[0]
            raise DomainError('%s variable %s = %g is outside [%g, %g].' % (self.name, self.variables[column],
                x[row, column], self.lower[column], self.upper[column]))

    def evaluate(self, variant, x):
        self.check_input(x)
        return self.source(variant)(x)


def _borehole_source(variant, cost, n_init, noise_var):
    coefficients = BOREHOLE_VARIANTS[variant]
    return SourceSpec('borehole', variant, cost, n_init, noise_var,
        lambda x: borehole_formula(x, **coefficients))


def _wing_source(variant, cost, n_init, noise_var):
    settings = WING_VARIANTS[variant]
    return SourceSpec('wing', variant, cost, n_init, noise_var,
        lambda x: wing_formula(x, **settings))


def _toy_source(variant, cost, n_init, noise_var):
    return SourceSpec('toy1d', variant, cost, n_init, noise_var, lambda x: toy_formula(x, variant))


FAMILIES = {
    'borehole': Family('borehole', BOREHOLE_VARIABLES, BOREHOLE_LOWER, BOREHOLE_UPPER, [
        _borehole_source('HF', 1000, 5, 16.0),
        _borehole_source('LF1', 100, 5, 0.0),
        _borehole_source('LF2', 10, 50, 0.0),
        _borehole_source('LF3', 100, 5, 0.0),
        _borehole_source('LF4', 10, 50, 0.0),
    ], info='8-dimensional Borehole flow rate with four biased low-fidelity variants'),
    'wing': Family('wing', WING_VARIABLES, WING_LOWER, WING_UPPER, [
        _wing_source('HF', 1000, 5, 9.0),
        _wing_source('LF1', 100, 5, 0.0),
        _wing_source('LF2', 10, 10, 0.0),
        _wing_source('LF3', 1, 50, 0.0),
    ], info='10-dimensional wing weight with three low-fidelity variants'),
    'toy1d': Family('toy1d', ('x',), TOY_LOWER, TOY_UPPER, [
        _toy_source('HF', 10, 4, 0.0),
        _toy_source('LF1', 1, 10, 0.0),
        _toy_source('LF2', 1, 10, 0.0),
    ], budget=200.0, info='1-dimensional toy with locally correlated low-fidelity sources'),
}


def get_family(name):
    try:
        return FAMILIES[name]
    except KeyError:
        raise UnknownFamilyError('Unknown family "%s"; choose from %s.' % (name, ', '.join(sorted(FAMILIES))))


def eval_borehole(variant, x):
    """
    Noiseless Borehole evaluation.

    @param variant: 'HF' or 'LF1'..'LF4'.
    @param x: One 8-vector (rw, r, Tu, Hu, Tl, Hl, L, Kw) or an (n, 8) array.
    """
    return FAMILIES['borehole'].evaluate(variant, x)


def eval_wing(variant, x):
    """
    Noiseless wing weight evaluation.

    @param variant: 'HF' or 'LF1'..'LF3'.
    @param x: One 10-vector (Sw, Wfw, A, Lambda, q, lambda, tc, Nz, Wdg, Wp)
        or an (n, 10) array.
    """
    return FAMILIES['wing'].evaluate(variant, x)


def relative_rmse(y_lf, y_hf):
    """
    Root mean squared difference, divided by the standard deviation of
    the high-fidelity outputs.
    """
    y_lf = np.asarray(y_lf, dtype=float).reshape(-1)
    y_hf = np.asarray(y_hf, dtype=float).reshape(-1)
    if len(y_lf) != len(y_hf):
        raise ValueError('Got %d low-fidelity and %d high-fidelity outputs.' % (len(y_lf), len(y_hf)))
    if len(y_hf) < 2:
        raise ValueError('The relative RMSE needs at least two points.')
    spread = np.std(y_hf)
    if spread == 0:
        raise ValueError('The high-fidelity outputs are constant.')
    return float(np.sqrt(np.mean((y_lf - y_hf) ** 2)) / spread)


def sample_domain(family, n_points, seed=0):
    """
    Scrambled Sobol points spread over a family's domain.
    """
    family = get_family(family) if isinstance(family, str) else family
    unit = sobol_points(family.dim, n_points, skip=0, seed=seed)
    return family.lower + unit * (family.upper - family.lower)


def rrmse(family, lf_variant, hf_variant='HF', n_points=RRMSE_POINTS, seed=0):
    """
    The relative RMSE of one variant against another over n_points
    noiseless domain points.
    """
    family = get_family(family) if isinstance(family, str) else family
    if n_points < 2:
        raise ValueError('The relative RMSE needs at least two points.')
    X = sample_domain(family, n_points, seed)
    return relative_rmse(family.source(lf_variant)(X), family.source(hf_variant)(X))


def rrmse_table(family, n_points=RRMSE_POINTS, seed=0):
    """
    @return: A list of (variant, rrmse) for every low-fidelity variant.
    """
    family = get_family(family) if isinstance(family, str) else family
    return [(variant, rrmse(family, variant, family.hf_variant, n_points, seed)) for variant in family.lf_variants]


def true_optimum(family, n_points=2 ** 16, seed=0, chunk=2 ** 15, polish=4):
    """
    The noiseless high-fidelity optimum, by brute force over a Sobol
    sample followed by a bounded quasi-Newton polish of the best points.

    @return: (x, value) in problem units and the family's sense.
    """
    family = get_family(family) if isinstance(family, str) else family
    sign = -1.0 if family.sense == 'maximize' else 1.0
    hf = family.source(family.hf_variant)

    unit = sobol_points(family.dim, n_points, skip=0, seed=seed)
    best_values, best_points = [], []
    for start in range(0, n_points, chunk):
        X = family.lower + unit[start:start + chunk] * (family.upper - family.lower)
        values = sign * hf(X)
        order = np.argsort(values)[:polish]
        best_values.extend(values[order])
        best_points.extend(X[order])

    order = np.argsort(best_values)[:polish]
    best_x, best_value = best_points[order[0]], best_values[order[0]]
    bounds = list(zip(family.lower, family.upper))
    for k in order:
        result = optimize.minimize(lambda x: sign * hf(x), best_points[k], method='L-BFGS-B', bounds=bounds)
        if np.isfinite(result.fun) and result.fun < best_value:
            best_x, best_value = np.clip(result.x, family.lower, family.upper), float(result.fun)

    logger.debug('True optimum of %s over %d points: %g.', family.name, n_points, sign * best_value)
    return np.asarray(best_x), float(sign * best_value)


def make_problem(family, overrides=None):
    """
    Assemble the MFProblem of a family.

    @param family: A registered family name.
    @keyword overrides: A dict with any of budget, costs, n_init, noise
        (each a dict of variant to value) and sources (the variants to
        keep, in order; the high-fidelity variant is always kept).
    @return: An MFProblem.
    """
    family = get_family(family)
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(OVERRIDE_KEYS)
    if unknown:
        raise ValueError('Unknown problem overrides: %s.' % ', '.join(sorted(unknown)))

    variants = list(overrides.get('sources') or family.variants)
    for variant in variants:
        family.source(variant)
    if family.hf_variant not in variants:
        variants.insert(0, family.hf_variant)

    costs = dict((v, family.source(v).cost) for v in variants)
    costs.update(overrides.get('costs') or {})
    n_init = dict((v, family.source(v).n_init) for v in variants)
    n_init.update(overrides.get('n_init') or {})
    noise = dict((v, family.source(v).noise_var) for v in variants)
    noise.update(overrides.get('noise') or {})
    for key in ('costs', 'n_init', 'noise'):
        for variant in overrides.get(key) or {}:
            family.source(variant)

    def evaluator(variant):
        spec = family.source(variant)

        def evaluate(point):
            x = point.continuous
            family.check_input(x)
            return spec(x)
        return evaluate

    return MFProblem(
        sources=[evaluator(v) for v in variants],
        costs=[costs[v] for v in variants],
        hf_index=variants.index(family.hf_variant),
        domain=Domain(family.lower, family.upper),
        sense=family.sense,
        noise_var=[noise[v] for v in variants],
        names=variants,
        n_init=[n_init[v] for v in variants],
        budget=overrides.get('budget', family.budget),
        family=family.name,
    )
