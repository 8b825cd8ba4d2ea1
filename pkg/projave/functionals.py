"""
Projection-averaged Sobolev functionals.

E_{i,p}(f) = ( mean over E in Gr(n, i) of ( q_{i,p} int ||grad f|E||^p )^(-n/p) )^(-1/n)

plus the zonoid-norm version E^mu_{i,p}, the BV functionals E_i and E^mu_i of
characteristic functions, sharpness ratios and the monotone chain reports.

Profiles are affine images of radial functions, so every inner integral is
|det A|^-1 * (radial integral) * (angular factor over the sphere). Radial
integrals use closed forms when the profile has them and Gauss-Legendre
otherwise; angular factors are exact for radial shapes, i = 1 and p = 2.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bodies import Ball, DiscreteSphereMeasure, Ellipsoid, Polytope, body_volume
from .exceptions import ConfigurationError, DegenerateInputError, DomainError, PreconditionError
from .geometry import (
    bv_sharp_constant, q_coefficient, sharp_constant, sobolev_conjugate, standard_frame,
    unit_sphere_area,
)
from .profiles import CharOfBody, Profile
from .quadrature import (
    Estimate, QuadratureSpec, RadialTail, Separable, grassmann_functional, integrate_radial,
    integrate_rn, paired_gap, sphere_average,
)

logger = logging.getLogger(__name__)

METHODS = ('auto', 'quadrature', 'monte-carlo')
# Relative slack for chains whose values agree up to rounding (radial profiles, balls).
ROUNDING_FLOOR = 1e-10


# ============================================================
# Radial and angular factors
# ============================================================

def radial_energy(f, p, spec, method='auto'):
    """int_0^inf |amplitude g'(r)|^p r^(n-1) dr."""
    closed = f.energy_closed_form(p) if method == 'auto' else None
    factor = abs(f.amplitude) ** p
    if closed is not None:
        return Estimate(factor * closed, 0.0, spec)
    estimate = integrate_radial(lambda r: np.abs(f.radial_derivative(r)) ** p, f.n, spec, f.breakpoints)
    return estimate.scaled(factor)


def radial_power(f, q, spec, method='auto'):
    """int_0^inf |amplitude g(r)|^q r^(n-1) dr."""
    closed = f.power_closed_form(q) if method == 'auto' else None
    factor = abs(f.amplitude) ** q
    if closed is not None:
        return Estimate(factor * closed, 0.0, spec)
    estimate = integrate_radial(lambda r: np.abs(f.radial(r)) ** q, f.n, spec, f.breakpoints)
    return estimate.scaled(factor)


def projected_moment(matrix, frame, p, spec):
    """
    Mean over the uniform sphere of ||(M u)|E||^p.
    Exact for M = cI (c^p q_{n,p}/q_{i,p}), for i = 1 (q_{n,p}||M^T b||^p)
    and for p = 2 (||F^T M||_F^2 / n); Monte Carlo otherwise.
    """
    matrix = np.asarray(matrix, dtype=float)
    n, i = frame.dim_ambient, frame.dim_sub
    c = matrix[0, 0]
    if np.all(matrix == c * np.eye(n)):
        return Estimate(abs(c) ** p * q_coefficient(n, p) / q_coefficient(i, p), 0.0, spec)
    basis = frame.basis
    if i == 1:
        return Estimate(q_coefficient(n, p) * np.linalg.norm(matrix.T @ basis[:, 0]) ** p, 0.0, spec)
    if p == 2:
        return Estimate(float(np.sum((basis.T @ matrix) ** 2)) / n, 0.0, spec)
    return sphere_average(lambda u: np.linalg.norm((u @ matrix.T) @ basis, axis=1) ** p, n, spec,
                          key=(frame.index,))


def affine_energy_factor(matrix, frame, p, spec):
    """int over S^{n-1} of ||(A^T u)|E||^p dsigma(u) for the profile matrix A."""
    n = frame.dim_ambient
    return projected_moment(np.asarray(matrix, dtype=float).T, frame, p, spec).scaled(unit_sphere_area(n))


def _require_gradient_profile(f):
    if isinstance(f, CharOfBody):
        raise ConfigurationError("characteristic functions have no L^p gradient; use the BV functionals")
    if not isinstance(f, Profile):
        raise ConfigurationError(f"not a profile: {type(f).__name__}")
    if f.amplitude == 0:
        raise DegenerateInputError("profile is identically zero")


def _check_ip(f, i, p):
    _require_gradient_profile(f)
    n = f.n
    if not 1 <= i <= n:
        raise DomainError(f"subspace dimension must lie in [1, {n}], got {i}")
    if not 1 <= p < n:
        raise DomainError(f"exponent p must satisfy 1 <= p < n = {n}, got {p}")
    return n


# ============================================================
# Norms and energies
# ============================================================

def lpstar_norm(f, spec, p=None, method='auto'):
    """
    ||f||_{p*}, p* = np/(n-p). Characteristic functions give |K|^(1/p*) (p = 1 by default).
    Closed forms are used when available; method='quadrature' forces the radial rule.
    """
    if isinstance(f, CharOfBody):
        q = sobolev_conjugate(f.n, 1.0 if p is None else p)
        return Estimate(body_volume(f.body) ** (1.0 / q), 0.0, spec)
    _require_gradient_profile(f)
    p = getattr(f, 'p', None) if p is None else p
    if p is None:
        raise DomainError(f"{f.kind} profiles need an explicit exponent p")
    n = f.n
    q = sobolev_conjugate(n, p)
    radial = radial_power(f, q, spec, method)
    return radial.scaled(unit_sphere_area(n) / f.determinant).power(1.0 / q)


def directional_energy(f, frame, p, spec, method='auto'):
    """
    int ||grad f(x)|E||^p dx.
    'auto' uses closed forms; 'quadrature' uses the separable radial x sphere rule;
    'monte-carlo' importance samples R^n under the profile's declared tail.
    """
    _require_gradient_profile(f)
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")
    n = f.n
    basis = frame.basis
    if method == 'monte-carlo':
        return integrate_rn(lambda x: np.linalg.norm(f.gradient(x) @ basis, axis=1) ** p,
                            n, spec, RadialTail(f.tail_exponent(p)))
    if method == 'quadrature':
        structure = Separable(
            radial=lambda r: abs(f.amplitude) ** p * np.abs(f.radial_derivative(r)) ** p,
            angular=lambda u: np.linalg.norm((u @ f.shape) @ basis, axis=1) ** p,
            breakpoints=f.breakpoints,
        )
        return integrate_rn(None, n, spec, structure, key=(frame.index,)).scaled(1.0 / f.determinant)
    radial = radial_energy(f, p, spec)
    angular = affine_energy_factor(f.shape, frame, p, spec)
    return radial.times(angular).scaled(1.0 / f.determinant)


def gradient_norm(f, p, spec):
    """||grad f||_p."""
    return directional_energy(f, standard_frame(f.n, f.n), p, spec).power(1.0 / p)


def grassmann_mean(f, i, p, spec, method='auto'):
    """Mean of (q_{i,p} int ||grad f|E||^p)^(-n/p) over Gr(n, i), with per-frame samples."""
    n = _check_ip(f, i, p)
    q = q_coefficient(i, p)
    return grassmann_functional(
        lambda frame: directional_energy(f, frame, p, spec, method).scaled(q), n, i, -n / p, spec)


def E_ip(f, i, p, spec, method='auto'):
    """E_{i,p}(f); at i = n this is q_{n,p}^(1/p) ||grad f||_p from a single frame."""
    return grassmann_mean(f, i, p, spec, method).power(-1.0 / f.n)


def _check_generator(mu, n, i):
    if not isinstance(mu, DiscreteSphereMeasure):
        raise ConfigurationError("zonoid functionals need a DiscreteSphereMeasure")
    if mu.n != n:
        raise DomainError(f"measure lives in R^{mu.n}, profile in R^{n}")
    if not 1 <= i <= n - 1:
        raise DomainError(f"zonoid subspace dimension must lie in [1, {n - 1}], got {i}")
    if not mu.even:
        raise PreconditionError("zonoid generator must be even")
    if not mu.spans_standard_subspace(i):
        raise PreconditionError(f"zonoid generator must span E_{i}")


def zonoid_mean(f, i, p, mu, spec):
    """
    Mean over Gr(n, i) of (sum_k w_k int |grad f . phi u_k|^p)^(-n/p) where
    int |grad f . v|^p dx = |det A|^-1 R n omega_n q_{n,p} ||A v||^p exactly.
    """
    n = _check_ip(f, i, p)
    _check_generator(mu, n, i)
    radial = radial_energy(f, p, spec)
    constant = unit_sphere_area(n) * q_coefficient(n, p) / f.determinant
    local = mu.directions[:, :i]

    def G(frame):
        directions = local @ frame.basis.T
        lengths = np.linalg.norm(directions @ f.shape.T, axis=1)
        return radial.scaled(constant * float(mu.weights @ lengths ** p))

    return grassmann_functional(G, n, i, -n / p, spec)


def E_ip_zonoid(f, i, p, mu, spec):
    """E^mu_{i,p}(f): the inner norm is h(phi Z^mu_p, grad f) = ||grad f|E||_{Z(E)°}."""
    return zonoid_mean(f, i, p, mu, spec).power(-1.0 / f.n)


def sobolev_ratio(f, i, p, spec, method='auto'):
    """E_{i,p}(f) / (c_{n,p} ||f||_{p*}); at least 1, equality for extremizers."""
    n = _check_ip(f, i, p)
    bound = lpstar_norm(f, spec, p, method).scaled(sharp_constant(n, p))
    return E_ip(f, i, p, spec, method).divided_by(bound)


def zonoid_sobolev_ratio(f, i, p, mu, spec):
    """E^mu_{i,p}(f) / (mu(S^{n-1})^(1/p) c_{n,p} ||f||_{p*})."""
    n = _check_ip(f, i, p)
    bound = lpstar_norm(f, spec, p).scaled(sharp_constant(n, p) * mu.total_mass ** (1.0 / p))
    return E_ip_zonoid(f, i, p, mu, spec).divided_by(bound)


# ============================================================
# BV functionals of characteristic functions
# ============================================================

def _surface_body(K):
    if isinstance(K, CharOfBody):
        K = K.body
    if not isinstance(K, (Ball, Ellipsoid, Polytope)):
        raise ConfigurationError(f"no surface data for a {type(K).__name__}")
    return K


def projected_surface_integral(K, frame, spec):
    """int ||u|E|| dS(K, u)."""
    n, i = frame.dim_ambient, frame.dim_sub
    if isinstance(K, Polytope):
        lengths = np.linalg.norm(K.normals @ frame.basis, axis=1)
        return Estimate(float(K.areas @ lengths), 0.0, spec)
    if isinstance(K, Ball):
        value = K.radius ** (n - 1) * unit_sphere_area(n) * q_coefficient(n, 1.0) / q_coefficient(i, 1.0)
        return Estimate(value, 0.0, spec)
    inverse_transpose = np.linalg.inv(K.matrix).T
    moment = projected_moment(inverse_transpose, frame, 1.0, spec)
    return moment.scaled(abs(K.determinant) * unit_sphere_area(n))


def bv_mean(K, i, spec):
    K = _surface_body(K)
    n = K.n
    if not 1 <= i <= n:
        raise DomainError(f"subspace dimension must lie in [1, {n}], got {i}")
    q = q_coefficient(i, 1.0)
    return grassmann_functional(lambda frame: projected_surface_integral(K, frame, spec).scaled(q),
                                n, i, -float(n), spec)


def E_i_bv(K, i, spec):
    """E_i(1_K) via int ||sigma|E|| d|D 1_K| = int ||u|E|| dS(K, u)."""
    K = _surface_body(K)
    return bv_mean(K, i, spec).power(-1.0 / K.n)


def bv_zonoid_mean(K, i, mu, spec):
    K = _surface_body(K)
    n = K.n
    _check_generator(mu, n, i)
    local = mu.directions[:, :i]
    q_n = q_coefficient(n, 1.0)

    def G(frame):
        directions = local @ frame.basis.T
        if isinstance(K, Polytope):
            value = mu.weights @ (np.abs(directions @ K.normals.T) @ K.areas)
        elif isinstance(K, Ball):
            value = K.radius ** (n - 1) * unit_sphere_area(n) * q_n * mu.total_mass
        else:
            lengths = np.linalg.norm(directions @ np.linalg.inv(K.matrix).T, axis=1)
            value = abs(K.determinant) * unit_sphere_area(n) * q_n * (mu.weights @ lengths)
        return float(value)

    return grassmann_functional(G, n, i, -float(n), spec)


def E_i_bv_zonoid(K, i, mu, spec):
    """E^mu_i(1_K) with the p = 1 zonoid norm h(phi Z^mu, u) in place of ||u|E||."""
    K = _surface_body(K)
    return bv_zonoid_mean(K, i, mu, spec).power(-1.0 / K.n)


def bv_ratio(K, i, spec):
    """E_i(1_K) / (2 omega_{n-1} omega_n^(-(1-1/n)) ||1_K||_{n/(n-1)}); equality for balls."""
    K = _surface_body(K)
    n = K.n
    bound = bv_sharp_constant(n) * body_volume(K) ** ((n - 1.0) / n)
    return E_i_bv(K, i, spec).scaled(1.0 / bound)


def zonoid_bv_ratio(K, i, mu, spec):
    K = _surface_body(K)
    n = K.n
    bound = bv_sharp_constant(n) * mu.total_mass * body_volume(K) ** ((n - 1.0) / n)
    return E_i_bv_zonoid(K, i, mu, spec).scaled(1.0 / bound)


# ============================================================
# Chain reports
# ============================================================

@dataclass
class FunctionalReport:
    """E_i values for i = 1..n, their sharpness ratios and pairwise chain gaps."""
    values: dict
    ratio: dict
    gaps: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    passed: bool = True
    seed: Optional[int] = None
    spec: Optional[QuadratureSpec] = None

    @property
    def spread(self):
        """Gap E_n - E_1 (strict for anisotropic inputs)."""
        n = max(self.values)
        for gap in self.gaps:
            if gap['lower'] == 1 and gap['upper'] == n:
                return gap['estimate']
        return None


def _chain(means, n, bound, spec, sigma):
    values = {i: mean.power(-1.0 / n) for i, mean in means.items()}
    ratio = {i: value.divided_by(bound) for i, value in values.items()}
    report = FunctionalReport(values=values, ratio=ratio, seed=spec.seed, spec=spec)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            gap = paired_gap(means[i], means[j], outer=-1.0 / n)
            floor = ROUNDING_FLOOR * max(abs(values[i].value), abs(values[j].value))
            ok = gap.value >= -sigma * gap.std_error - floor
            report.gaps.append({'lower': i, 'upper': j, 'estimate': gap, 'passed': ok})
            if not ok:
                report.passed = False
                report.diagnostics.append(
                    f"E_{j} - E_{i} = {gap.value:.6g} below -{sigma} SE ({gap.std_error:.3g}); "
                    f"E_{i} = {values[i].value:.6g}, E_{j} = {values[j].value:.6g}")
    if not report.passed:
        logger.warning(f"[Functionals] chain violated: {'; '.join(report.diagnostics)}")
    return report


def chain_report(f, p, spec, sigma=3.0, method='auto'):
    """E_{i,p}(f) for i = 1..n on one rotation stream, with every pairwise gap checked."""
    n = _check_ip(f, 1, p)
    means = {i: grassmann_mean(f, i, p, spec, method) for i in range(1, n + 1)}
    bound = lpstar_norm(f, spec, p, method).scaled(sharp_constant(n, p))
    return _chain(means, n, bound, spec, sigma)


def bv_chain_report(K, spec, sigma=3.0):
    """E_n(1_K) >= ... >= E_1(1_K) on one rotation stream."""
    K = _surface_body(K)
    n = K.n
    means = {i: bv_mean(K, i, spec) for i in range(1, n + 1)}
    bound = Estimate(bv_sharp_constant(n) * body_volume(K) ** ((n - 1.0) / n), 0.0, spec)
    return _chain(means, n, bound, spec, sigma)
