"""
Test functions for the Sobolev functionals.

Every gradient profile has the form f(x) = amplitude * g(||A (x - x0)||) with a
one-dimensional profile g, so energies and norms reduce to a radial integral
times an exact linear-algebra factor. Characteristic functions of bodies are
kept apart: they only enter the BV functionals.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from .bodies import Ball, Ellipsoid, Polytope
from .exceptions import ConfigurationError, DegenerateInputError, DomainError, ProjaveError
from .geometry import check_dimension

logger = logging.getLogger(__name__)


def _vector(value, n):
    value = np.zeros(n) if value is None else np.asarray(value, dtype=float)
    if value.shape != (n,):
        raise DomainError(f"expected a vector of length {n}, got shape {value.shape}")
    return value


def _check_extremizer_exponent(n, p):
    if not 1 < p < n:
        raise DomainError(f"extremizer profiles need 1 < p < n = {n}, got p = {p}")


def _beta_radial(alpha, beta, a, b, s):
    """int_0^inf r^(alpha-1) (a + b r^s)^(-beta) dr, or None when it diverges."""
    if alpha <= 0 or beta - alpha / s <= 0:
        return None
    log_value = (-beta * math.log(a) + (alpha / s) * (math.log(a) - math.log(b))
                 - math.log(s) + betaln(alpha / s, beta - alpha / s))
    return math.exp(log_value)


class Profile:
    """Shared behaviour of the affine-radial profiles."""
    kind = None
    breakpoints = ()

    @property
    def shape(self):
        raise NotImplementedError

    @property
    def determinant(self):
        return abs(float(np.linalg.det(self.shape)))

    @property
    def is_radial(self):
        shape = self.shape
        return bool(np.all(shape == shape[0, 0] * np.eye(self.n)))

    def radial(self, r):
        raise NotImplementedError

    def radial_derivative(self, r):
        raise NotImplementedError

    def energy_closed_form(self, p):
        """int_0^inf |g'(r)|^p r^(n-1) dr, when known in closed form."""
        return None

    def power_closed_form(self, q):
        """int_0^inf |g(r)|^q r^(n-1) dr, when known in closed form."""
        return None

    def tail_exponent(self, p):
        """Decay rate of |grad f|^p at infinity."""
        raise NotImplementedError

    def _reduced(self, x):
        y = (np.atleast_2d(np.asarray(x, dtype=float)) - self.x0) @ self.shape.T
        return y, np.linalg.norm(y, axis=1)

    def evaluate(self, x):
        _, r = self._reduced(x)
        values = self.amplitude * self.radial(r)
        return float(values[0]) if np.asarray(x).ndim == 1 else values

    def gradient(self, x):
        """A^T g'(r) y / r with y = A(x - x0); zero at the centre."""
        y, r = self._reduced(x)
        slope = np.zeros_like(r)
        moving = r > 0
        slope[moving] = self.radial_derivative(r[moving]) / r[moving]
        grads = self.amplitude * slope[:, None] * (y @ self.shape)
        return grads[0] if np.asarray(x).ndim == 1 else grads

    def scaled(self, factor):
        """The profile factor * f."""
        return self._replace(amplitude=self.amplitude * factor)

    def composed(self, matrix):
        """f o M, i.e. x -> f(M x) for x0 = 0; used for affine and rotational images."""
        matrix = np.asarray(matrix, dtype=float)
        return self._replace(matrix=self.shape @ matrix, x0=np.linalg.solve(matrix, self.x0))

    def _replace(self, **changes):
        raise NotImplementedError


@dataclass(frozen=True)
class AubinTalenti(Profile):
    """amplitude * (a + b ||x - x0||^s)^(1 - n/p), s = p/(p-1)."""
    n: int
    p: float
    a: float = 1.0
    b: float = 1.0
    x0: np.ndarray = field(default=None)
    amplitude: float = 1.0
    kind = 'aubin_talenti'

    def __post_init__(self):
        check_dimension(self.n)
        _check_extremizer_exponent(self.n, self.p)
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"a and b must be positive, got a={self.a}, b={self.b}")
        object.__setattr__(self, 'x0', _vector(self.x0, self.n))

    @property
    def s(self):
        return self.p / (self.p - 1.0)

    @property
    def shape(self):
        return np.eye(self.n)

    def radial(self, r):
        return (self.a + self.b * r ** self.s) ** (1.0 - self.n / self.p)

    def radial_derivative(self, r):
        s = self.s
        return ((1.0 - self.n / self.p) * (self.a + self.b * r ** s) ** (-self.n / self.p)
                * self.b * s * r ** (s - 1.0))

    def energy_closed_form(self, p):
        if p != self.p:
            return None
        n, s = self.n, self.s
        integral = _beta_radial(n + s, n, self.a, self.b, s)
        return abs(1.0 - n / p) ** p * (self.b * s) ** p * integral

    def power_closed_form(self, q):
        return _beta_radial(self.n, q * (self.n / self.p - 1.0), self.a, self.b, self.s)

    def tail_exponent(self, p):
        return self.s * (self.n - 1.0) * p / self.p

    def _replace(self, **changes):
        if 'matrix' in changes:
            return AffineExtremizer(self.n, self.p, self.a, changes['matrix'] * self.b ** (1.0 / self.s),
                                    changes['x0'], self.amplitude)
        values = dict(n=self.n, p=self.p, a=self.a, b=self.b, x0=self.x0, amplitude=self.amplitude)
        values.update(changes)
        return AubinTalenti(**values)


@dataclass(frozen=True)
class AffineExtremizer(Profile):
    """amplitude * (a + ||A (x - x0)||^s)^(1 - n/p)."""
    n: int
    p: float
    a: float = 1.0
    matrix: np.ndarray = field(default=None)
    x0: np.ndarray = field(default=None)
    amplitude: float = 1.0
    kind = 'affine_extremizer'

    def __post_init__(self):
        check_dimension(self.n)
        _check_extremizer_exponent(self.n, self.p)
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")
        matrix = np.eye(self.n) if self.matrix is None else np.asarray(self.matrix, dtype=float)
        if matrix.shape != (self.n, self.n):
            raise DomainError(f"matrix must be {self.n} x {self.n}, got {matrix.shape}")
        if abs(np.linalg.det(matrix)) == 0:
            raise DegenerateInputError("affine extremizer matrix is singular")
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'x0', _vector(self.x0, self.n))

    @property
    def s(self):
        return self.p / (self.p - 1.0)

    @property
    def shape(self):
        return self.matrix

    def radial(self, r):
        return (self.a + r ** self.s) ** (1.0 - self.n / self.p)

    def radial_derivative(self, r):
        s = self.s
        return (1.0 - self.n / self.p) * (self.a + r ** s) ** (-self.n / self.p) * s * r ** (s - 1.0)

    def energy_closed_form(self, p):
        if p != self.p:
            return None
        n, s = self.n, self.s
        return abs(1.0 - n / p) ** p * s ** p * _beta_radial(n + s, n, self.a, 1.0, s)

    def power_closed_form(self, q):
        return _beta_radial(self.n, q * (self.n / self.p - 1.0), self.a, 1.0, self.s)

    def tail_exponent(self, p):
        return self.s * (self.n - 1.0) * p / self.p

    def _replace(self, **changes):
        values = dict(n=self.n, p=self.p, a=self.a, matrix=self.matrix, x0=self.x0, amplitude=self.amplitude)
        values.update(changes)
        return AffineExtremizer(**values)


@dataclass(frozen=True)
class Gaussian(Profile):
    """amplitude * exp(-||x - x0||^2 / scale^2)."""
    n: int
    scale: float = 1.0
    x0: np.ndarray = field(default=None)
    amplitude: float = 1.0
    matrix: np.ndarray = field(default=None)
    kind = 'gaussian'

    def __post_init__(self):
        check_dimension(self.n)
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        matrix = np.eye(self.n) / self.scale if self.matrix is None else np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'x0', _vector(self.x0, self.n))

    @property
    def shape(self):
        return self.matrix

    def radial(self, r):
        return np.exp(-r ** 2)

    def radial_derivative(self, r):
        return -2.0 * r * np.exp(-r ** 2)

    def energy_closed_form(self, p):
        n = self.n
        return math.exp(p * math.log(2.0) + gammaln((p + n) / 2.0)
                        - math.log(2.0) - ((p + n) / 2.0) * math.log(p))

    def power_closed_form(self, q):
        return math.exp(gammaln(self.n / 2.0) - math.log(2.0) - (self.n / 2.0) * math.log(q))

    def tail_exponent(self, p):
        return 2.0 * self.n + 2.0

    def _replace(self, **changes):
        values = dict(n=self.n, scale=self.scale, x0=self.x0, amplitude=self.amplitude, matrix=self.matrix)
        values.update(changes)
        return Gaussian(**values)


@dataclass(frozen=True)
class MollifiedBall(Profile):
    """1 on the ball of the given radius, then a linear ramp down to 0 over [radius, radius + width]."""
    n: int
    radius: float = 1.0
    width: float = 0.1
    x0: np.ndarray = field(default=None)
    amplitude: float = 1.0
    kind = 'mollified_ball'

    def __post_init__(self):
        check_dimension(self.n)
        if not (self.radius > 0 and self.width > 0):
            raise DomainError("radius and width must be positive")
        object.__setattr__(self, 'x0', _vector(self.x0, self.n))

    @property
    def relative_width(self):
        return self.width / self.radius

    @property
    def shape(self):
        return np.eye(self.n) / self.radius

    @property
    def breakpoints(self):
        return (1.0, 1.0 + self.relative_width)

    def radial(self, r):
        return np.clip(1.0 - (np.asarray(r) - 1.0) / self.relative_width, 0.0, 1.0)

    def radial_derivative(self, r):
        r = np.asarray(r, dtype=float)
        return np.where((r > 1.0) & (r < 1.0 + self.relative_width), -1.0 / self.relative_width, 0.0)

    def energy_closed_form(self, p):
        w = self.relative_width
        return w ** (-p) * ((1.0 + w) ** self.n - 1.0) / self.n

    def tail_exponent(self, p):
        return 2.0 * self.n + 2.0

    def _replace(self, **changes):
        if 'matrix' in changes:
            raise DomainError("mollified balls only support scaling")
        values = dict(n=self.n, radius=self.radius, width=self.width, x0=self.x0, amplitude=self.amplitude)
        values.update(changes)
        return MollifiedBall(**values)


@dataclass(frozen=True)
class CharOfBody:
    """The characteristic function 1_K; admitted only by the BV functionals."""
    body: object
    kind = 'char_of_body'

    def __post_init__(self):
        if not isinstance(self.body, (Ball, Ellipsoid, Polytope)):
            raise ConfigurationError(f"no surface data for a {type(self.body).__name__}")

    @property
    def n(self):
        return self.body.n


# ============================================================
# JSON-compatible profile descriptions
# ============================================================

def profile_from_dict(data, base_dir=None):
    """
    Parse {"kind": ..., parameters...}. Domain violations are reported as
    ConfigurationError so a run can record them per row.
    """
    if not isinstance(data, dict) or 'kind' not in data:
        raise ConfigurationError(f"profile description needs a 'kind': {data!r}")
    kind = data['kind']
    params = {k: v for k, v in data.items() if k != 'kind'}
    try:
        if kind == 'aubin_talenti':
            return AubinTalenti(int(params['n']), float(params['p']), float(params.get('a', 1.0)),
                                float(params.get('b', 1.0)), params.get('x0'),
                                float(params.get('amplitude', 1.0)))
        if kind == 'affine_extremizer':
            return AffineExtremizer(int(params['n']), float(params['p']), float(params.get('a', 1.0)),
                                    params.get('matrix'), params.get('x0'),
                                    float(params.get('amplitude', 1.0)))
        if kind == 'gaussian':
            return Gaussian(int(params['n']), float(params.get('scale', 1.0)), params.get('x0'),
                            float(params.get('amplitude', 1.0)), params.get('matrix'))
        if kind == 'mollified_ball':
            return MollifiedBall(int(params['n']), float(params.get('radius', 1.0)),
                                 float(params.get('width', 0.1)), params.get('x0'),
                                 float(params.get('amplitude', 1.0)))
        if kind == 'char_of_body':
            from .fixtures import body_from_dict
            return CharOfBody(body_from_dict(params['body'], base_dir))
    except KeyError as e:
        raise ConfigurationError(f"profile {kind!r} is missing {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ProjaveError):
            raise ConfigurationError(f"profile {kind!r}: {e}") from e
        raise ConfigurationError(f"malformed profile {kind!r}: {e}") from e
    except DegenerateInputError as e:
        raise ConfigurationError(f"profile {kind!r}: {e}") from e
    raise ConfigurationError(f"unknown profile kind {kind!r}")


def profile_to_dict(profile):
    if isinstance(profile, CharOfBody):
        raise ConfigurationError("body profiles are described by their config entry")
    data = {'kind': profile.kind, 'n': profile.n, 'x0': profile.x0.tolist(), 'amplitude': profile.amplitude}
    if isinstance(profile, AubinTalenti):
        data.update(p=profile.p, a=profile.a, b=profile.b)
    elif isinstance(profile, AffineExtremizer):
        data.update(p=profile.p, a=profile.a, matrix=profile.matrix.tolist())
    elif isinstance(profile, Gaussian):
        data.update(scale=profile.scale, matrix=profile.matrix.tolist())
    elif isinstance(profile, MollifiedBall):
        data.update(radius=profile.radius, width=profile.width)
    return data
