"""
Integration engines: compactified Gauss-Legendre for radial integrals,
antithetic Monte Carlo on the sphere, importance-sampled Monte Carlo on R^n
and Haar-frame averages on the Grassmannian.

Every Monte Carlo estimator draws from streams derived from spec.seed and the
batch index, and reduces in batch order, so a given spec always reproduces the
same bits whatever the batch evaluation order.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError, DegenerateInputError, DomainError, IntegrationError
from .geometry import (
    STREAM_GRASSMANN, STREAM_IMPORTANCE, STREAM_SPHERE, Frame, check_dimension,
    derive_generator, sample_rotations, sample_sphere, standard_frame, unit_sphere_area,
)

logger = logging.getLogger(__name__)


# ============================================================
# Spec and Estimate
# ============================================================

@dataclass(frozen=True)
class QuadratureSpec:
    seed: int
    radial_nodes: int = 64
    sphere_samples: int = 20000
    grassmann_samples: int = 2000
    target_rel_error: float = 1e-3
    batch_size: int = 4096

    def __post_init__(self):
        if self.seed is None or int(self.seed) != self.seed:
            raise ConfigurationError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must fit in 64 bits")
        for name in ('radial_nodes', 'sphere_samples', 'grassmann_samples', 'batch_size'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be an integer >= 1, got {value}")
        if not 0 < self.target_rel_error <= 0.1:
            raise ConfigurationError(
                f"target_rel_error must lie in (0, 0.1], got {self.target_rel_error}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data, seed=None):
        data = dict(data or {})
        if seed is not None:
            data['seed'] = seed
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown quadrature keys: {sorted(unknown)}")
        if data.get('seed') is None:
            raise ConfigurationError("a seed is mandatory")
        return cls(**data)


@dataclass(frozen=True)
class Estimate:
    """
    A value with its standard error. Deterministic rules store a refinement
    delta in std_error. `samples` keeps per-frame values for paired comparisons.
    """
    value: float
    std_error: float = 0.0
    spec: Optional[QuadratureSpec] = field(default=None, compare=False)
    samples: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    inner_error: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not self.std_error >= 0:
            raise DomainError(f"standard error must be non-negative, got {self.std_error}")

    @property
    def relative_error(self):
        return self.std_error / abs(self.value) if self.value else math.inf

    def power(self, exponent):
        value = self.value ** exponent
        factor = abs(exponent) * abs(self.value) ** (exponent - 1.0) if self.std_error else 0.0
        return Estimate(value, factor * self.std_error, self.spec)

    def scaled(self, factor):
        return Estimate(self.value * factor, abs(factor) * self.std_error, self.spec)

    def times(self, other):
        other = as_estimate(other)
        value = self.value * other.value
        return Estimate(value, abs(value) * math.hypot(_rel(self), _rel(other)), self.spec or other.spec)

    def divided_by(self, other):
        other = as_estimate(other)
        value = self.value / other.value
        return Estimate(value, abs(value) * math.hypot(_rel(self), _rel(other)), self.spec or other.spec)

    def minus(self, other):
        other = as_estimate(other)
        return Estimate(self.value - other.value, math.hypot(self.std_error, other.std_error),
                        self.spec or other.spec)


def _rel(estimate):
    if not estimate.std_error:
        return 0.0
    return estimate.std_error / abs(estimate.value)


def as_estimate(value):
    return value if isinstance(value, Estimate) else Estimate(float(value))


def _batches(total, batch_size):
    start, index = 0, 0
    while start < total:
        size = min(batch_size, total - start)
        yield index, size
        start += size
        index += 1


# ============================================================
# Radial Gauss-Legendre
# ============================================================

def _radial_rule(g, n, nodes, breakpoints):
    edges = [0.0] + sorted(b / (1.0 + b) for b in breakpoints if 0 < b < math.inf) + [1.0]
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        weights = 0.5 * (b - a) * w
        r = t / (1.0 - t)
        values = np.broadcast_to(np.asarray(g(r), dtype=float), r.shape)
        integrand = values * r ** (n - 1) / (1.0 - t) ** 2
        bad = ~np.isfinite(integrand)
        if bad.any():
            node = float(r[bad][0])
            raise IntegrationError(f"non-finite integrand at r = {node!r}", node=node)
        total += float(weights @ integrand)
    return total


def integrate_radial(g, n, spec, breakpoints=()):
    """
    int_0^inf g(r) r^(n-1) dr on the compactified variable r = t/(1-t).
    The value uses 2k nodes per piece; std_error holds |value(k) - value(2k)|.
    """
    n = check_dimension(n, minimum=1)
    coarse = _radial_rule(g, n, spec.radial_nodes, breakpoints)
    fine = _radial_rule(g, n, 2 * spec.radial_nodes, breakpoints)
    delta = abs(coarse - fine)
    logger.debug(f"[Quadrature] radial n={n} nodes={spec.radial_nodes} delta={delta:.3e}")
    return Estimate(fine, delta, spec)


# ============================================================
# Sphere Monte Carlo
# ============================================================

def antithetic_pairs(h, n, spec, stream=STREAM_SPHERE, key=()):
    """
    Evaluations (h(u), h(-u)) over ceil(sphere_samples / 2) uniform directions u.
    `key` extends the stream keys (the batch index stays last).
    """
    n = check_dimension(n, minimum=1)
    pair_count = (spec.sphere_samples + 1) // 2
    plus, minus = [], []
    for index, size in _batches(pair_count, spec.batch_size):
        u = sample_sphere(derive_generator(spec.seed, stream, *key, index), n, size)
        plus.append(np.broadcast_to(np.asarray(h(u), dtype=float), (size,)))
        minus.append(np.broadcast_to(np.asarray(h(-u), dtype=float), (size,)))
    return np.concatenate(plus), np.concatenate(minus)


def sphere_average(h, n, spec, stream=STREAM_SPHERE, key=()):
    """Mean of h over the uniform probability measure on S^{n-1}, antithetic (+u, -u) pairs."""
    plus, minus = antithetic_pairs(h, n, spec, stream, key)
    means = 0.5 * (plus + minus)
    if not np.all(np.isfinite(means)):
        raise IntegrationError("non-finite sphere integrand")
    if np.all(means == means[0]):
        return Estimate(float(means[0]), 0.0, spec)
    se = float(np.std(means, ddof=1) / math.sqrt(means.size)) if means.size > 1 else 0.0
    return Estimate(float(np.mean(means)), se, spec)


# ============================================================
# Integrals over R^n
# ============================================================

@dataclass(frozen=True)
class Separable:
    """F(x) = radial(||x||) * angular(x/||x||)."""
    radial: Callable
    angular: Callable = None
    breakpoints: tuple = ()


@dataclass(frozen=True)
class RadialTail:
    """F(x) = O(||x||^-exponent) with exponent > n."""
    exponent: float


def integrate_rn(F, n, spec, structure=None, key=()):
    """
    int_{R^n} F(x) dx. Separable integrands use the radial x sphere product
    rule; anything else needs a declared tail and is importance sampled with
    the Lomax radial proposal beta (1 + r)^(-beta - 1), beta = exponent - n.
    """
    n = check_dimension(n, minimum=1)
    area = unit_sphere_area(n)
    if isinstance(structure, Separable):
        radial = integrate_radial(structure.radial, n, spec, structure.breakpoints)
        if structure.angular is None:
            return radial.scaled(area)
        angular = sphere_average(structure.angular, n, spec, key=key)
        return radial.times(angular).scaled(area)
    if not isinstance(structure, RadialTail) or structure.exponent is None:
        raise ConfigurationError("non-separable integrands need a declared tail exponent")
    beta = float(structure.exponent) - n
    if beta <= 0:
        raise ConfigurationError(
            f"tail exponent {structure.exponent} does not make F integrable in R^{n}")
    values = []
    for index, size in _batches(spec.sphere_samples, spec.batch_size):
        rng = derive_generator(spec.seed, STREAM_IMPORTANCE, index)
        u = sample_sphere(rng, n, size)
        r = (1.0 - rng.random(size)) ** (-1.0 / beta) - 1.0
        density = beta * (1.0 + r) ** (-beta - 1.0)
        f = np.asarray(F(r[:, None] * u), dtype=float)
        weights = area * f * r ** (n - 1) / density
        if not np.all(np.isfinite(weights)):
            raise IntegrationError("non-finite importance weight")
        values.append(weights)
    values = np.concatenate(values)
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return Estimate(float(np.mean(values)), se, spec)


# ============================================================
# Grassmannian averages
# ============================================================

def rotation_stream(n, spec):
    """Haar rotations (index, n x n array) for spec; identical for every subspace dimension."""
    for index, size in _batches(spec.grassmann_samples, spec.batch_size):
        block = sample_rotations(derive_generator(spec.seed, STREAM_GRASSMANN, index), n, size)
        offset = index * spec.batch_size
        for k in range(size):
            yield offset + k, block[k]


def _evaluate(G, frame, exponent, index):
    result = G(frame)
    inner_rel = 0.0
    if isinstance(result, Estimate):
        inner_rel = result.relative_error if result.std_error else 0.0
        result = result.value
    if not result > 0:
        raise DegenerateInputError(
            f"integrand is {result!r} on frame {index}; expected a positive value", index=index)
    return result ** exponent, inner_rel


def grassmann_functional(G, n, i, exponent, spec):
    """
    Mean of G(E)^exponent over Haar frames E in Gr(n, i); the outer power is
    left to the caller. Frames are prefixes of one shared rotation stream, so
    calls with the same spec and different i use common random numbers.
    """
    n = check_dimension(n, minimum=1)
    if not 1 <= i <= n:
        raise DomainError(f"subspace dimension must lie in [1, {n}], got {i}")
    if i == n:
        value, inner_rel = _evaluate(G, standard_frame(n, n), exponent, 0)
        inner = abs(exponent) * value * inner_rel
        return Estimate(value, inner, spec, samples=np.array([value]), inner_error=inner)
    values = np.empty(spec.grassmann_samples)
    inner_rel = np.empty(spec.grassmann_samples)
    for index, rotation in rotation_stream(n, spec):
        values[index], inner_rel[index] = _evaluate(G, Frame(rotation[:, :i], index), exponent, index)
    inner = float(abs(exponent) * np.mean(values * inner_rel))
    if np.all(values == values[0]):
        return Estimate(float(values[0]), inner, spec, samples=values, inner_error=inner)
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    logger.debug(f"[Quadrature] grassmann n={n} i={i} samples={values.size} se={se:.3e}")
    return Estimate(float(np.mean(values)), math.hypot(se, inner), spec,
                    samples=values, inner_error=inner)


def paired_gap(lower, upper, outer=1.0):
    """
    Estimate of upper.value^outer - lower.value^outer for two Grassmannian means
    drawn from one rotation stream; the standard error comes from per-frame
    linearized differences, which is where common random numbers pay off.
    """
    slope_lower = outer * lower.value ** (outer - 1.0)
    slope_upper = outer * upper.value ** (outer - 1.0)
    a = lower.samples if lower.samples is not None else np.array([lower.value])
    b = upper.samples if upper.samples is not None else np.array([upper.value])
    size = max(a.size, b.size)
    if a.size not in (1, size) or b.size not in (1, size):
        raise DomainError("paired estimates must come from streams of equal length")
    diff = slope_upper * np.broadcast_to(b, (size,)) - slope_lower * np.broadcast_to(a, (size,))
    se = float(np.std(diff, ddof=1) / math.sqrt(size)) if size > 1 else 0.0
    inner = math.hypot(slope_lower * lower.inner_error, slope_upper * upper.inner_error)
    value = upper.value ** outer - lower.value ** outer
    return Estimate(value, math.hypot(se, inner), upper.spec or lower.spec)
