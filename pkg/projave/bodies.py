"""
Convex bodies: discrete sphere measures, support functions, surface area
measures, L^p projection bodies and zonoids, polar volumes and the Petty
product, plus the averaging identities behind the monotone chain.

Bodies are immutable. Polytopes carry redundant vertex + facet data that is
validated on construction instead of being derived from a hull.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .exceptions import (
    DegenerateInputError, DomainError, InvalidPolytopeError, PreconditionError,
)
from .geometry import (
    STREAM_ATOMS, STREAM_SUBGROUP, Frame, check_dimension, derive_generator,
    q_coefficient, sample_rotations, sample_sphere, unit_ball_volume, unit_sphere_area,
)
from .quadrature import Estimate, _batches, grassmann_functional, paired_gap, sphere_average

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
FACET_TOL = 1e-9


def _rows(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def _unrow(values, x):
    return float(values[0]) if np.asarray(x).ndim == 1 else values


# ============================================================
# Discrete sphere measures
# ============================================================

@dataclass(frozen=True)
class DiscreteSphereMeasure:
    """
    Atomic measure sum_k w_k delta_{u_k} on the unit sphere.
    `even` is computed when not given; asserting even=True validates the pairing.
    """
    directions: np.ndarray
    weights: np.ndarray
    even: bool = field(default=None)

    def __post_init__(self):
        directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if directions.shape[0] != weights.shape[0]:
            raise DomainError("one weight per atom is required")
        if np.max(np.abs(np.linalg.norm(directions, axis=1) - 1.0)) > UNIT_TOL:
            raise DomainError("atoms must be unit vectors")
        if not np.all(weights > 0):
            raise DomainError("atom weights must be positive")
        paired = self._is_paired(directions, weights)
        if self.even and not paired:
            raise PreconditionError("measure declared even but atoms are not in +-u pairs")
        object.__setattr__(self, 'directions', directions)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'even', paired)

    @staticmethod
    def _is_paired(directions, weights):
        half = directions.shape[0] // 2
        if directions.shape[0] % 2 == 0 and half:
            if (np.array_equal(directions[half:], -directions[:half])
                    and np.array_equal(weights[half:], weights[:half])):
                return True
        distance, index = cKDTree(directions).query(-directions)
        if np.any(distance > UNIT_TOL):
            return False
        return bool(np.allclose(weights[index], weights, rtol=UNIT_TOL, atol=0.0))

    @property
    def n(self):
        return self.directions.shape[1]

    @property
    def size(self):
        return self.directions.shape[0]

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def cosine_transform(self, x, p):
        """sum_k w_k |x . u_k|^p for a vector or rows x."""
        values = np.abs(_rows(x) @ self.directions.T) ** p @ self.weights
        return _unrow(values, x)

    def moment(self):
        """sum_k w_k u_k (zero for closed surface measures)."""
        return self.weights @ self.directions

    def scaled(self, factor):
        return DiscreteSphereMeasure(self.directions, self.weights * factor)

    def rotated(self, rotation):
        return DiscreteSphereMeasure(self.directions @ np.asarray(rotation).T, self.weights)

    def even_part(self):
        if self.even:
            return self
        return DiscreteSphereMeasure(np.vstack([self.directions, -self.directions]),
                                     np.concatenate([self.weights, self.weights]) / 2.0)

    def span_rank(self, tol=1e-10):
        return int(np.linalg.matrix_rank(self.directions, tol=tol))

    def spans_standard_subspace(self, i, tol=UNIT_TOL):
        """True when span supp = E_i = span{e_1, ..., e_i}."""
        if np.any(np.abs(self.directions[:, i:]) > tol):
            return False
        return np.linalg.matrix_rank(self.directions[:, :i], tol=1e-10) == i


# ============================================================
# Body variants
# ============================================================

@dataclass(frozen=True)
class Ball:
    n: int
    radius: float = 1.0

    def __post_init__(self):
        check_dimension(self.n, minimum=1)
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")

    def support(self, x):
        return _unrow(self.radius * np.linalg.norm(_rows(x), axis=1), x)


@dataclass(frozen=True)
class Ellipsoid:
    """The body A B^n."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"ellipsoid matrix must be square, got {matrix.shape}")
        if not np.isfinite(np.linalg.cond(matrix)) or abs(np.linalg.det(matrix)) == 0:
            raise DegenerateInputError("ellipsoid matrix is singular")
        object.__setattr__(self, 'matrix', matrix)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def determinant(self):
        return float(np.linalg.det(self.matrix))

    @property
    def condition_number(self):
        return float(np.linalg.cond(self.matrix))

    def support(self, x):
        return _unrow(np.linalg.norm(_rows(x) @ self.matrix, axis=1), x)


@dataclass(frozen=True)
class Polytope:
    """
    Vertices plus facets (outer unit normal, (n-1)-area, one incident vertex index).
    Validation: every incident vertex attains the support in its facet normal and
    the surface area measure is closed.
    """
    vertices: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    incident: np.ndarray
    name: str = 'polytope'

    def __post_init__(self):
        vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        areas = np.atleast_1d(np.asarray(self.areas, dtype=float))
        incident = np.atleast_1d(np.asarray(self.incident, dtype=int))
        if normals.shape[1] != vertices.shape[1]:
            raise InvalidPolytopeError("facet normals and vertices differ in dimension")
        if not normals.shape[0] == areas.shape[0] == incident.shape[0]:
            raise InvalidPolytopeError("each facet needs a normal, an area and an incident vertex")
        if np.any(incident < 0) or np.any(incident >= vertices.shape[0]):
            raise InvalidPolytopeError("incident vertex index out of range")
        bad = np.flatnonzero(np.abs(np.linalg.norm(normals, axis=1) - 1.0) > UNIT_TOL)
        if bad.size:
            raise InvalidPolytopeError(f"facet {bad[0]} normal is not a unit vector", facet=int(bad[0]))
        bad = np.flatnonzero(~(areas > 0))
        if bad.size:
            raise InvalidPolytopeError(f"facet {bad[0]} has non-positive area", facet=int(bad[0]))
        scale = max(1.0, float(np.max(np.abs(vertices))))
        heights = np.max(normals @ vertices.T, axis=1)
        on_plane = np.einsum('ij,ij->i', normals, vertices[incident])
        bad = np.flatnonzero(np.abs(heights - on_plane) > FACET_TOL * scale)
        if bad.size:
            raise InvalidPolytopeError(
                f"facet {bad[0]}: incident vertex is off the supporting hyperplane", facet=int(bad[0]))
        closure = np.linalg.norm(areas @ normals)
        if closure > FACET_TOL * max(1.0, float(np.sum(areas))):
            raise InvalidPolytopeError(f"surface area measure is not closed (|sum a u| = {closure:.3e})")
        object.__setattr__(self, 'vertices', vertices)
        object.__setattr__(self, 'normals', normals)
        object.__setattr__(self, 'areas', areas)
        object.__setattr__(self, 'incident', incident)

    @property
    def n(self):
        return self.vertices.shape[1]

    @property
    def facet_count(self):
        return self.normals.shape[0]

    def support(self, x):
        return _unrow(np.max(_rows(x) @ self.vertices.T, axis=1), x)

    def facet_heights(self):
        """h(P, u_k) for every facet normal u_k."""
        return np.einsum('ij,ij->i', self.normals, self.vertices[self.incident])

    def is_origin_symmetric(self):
        distance, _ = cKDTree(self.vertices).query(-self.vertices)
        return bool(np.all(distance <= FACET_TOL * max(1.0, float(np.max(np.abs(self.vertices))))))

    def linear_image(self, matrix, name=None):
        """A P: normals map to A^{-T}u (renormalized), areas scale by |det A| ||A^{-T}u||."""
        matrix = np.asarray(matrix, dtype=float)
        det = np.linalg.det(matrix)
        if det == 0:
            raise DegenerateInputError("linear image under a singular matrix")
        mapped = self.normals @ np.linalg.inv(matrix)
        lengths = np.linalg.norm(mapped, axis=1)
        return Polytope(self.vertices @ matrix.T, mapped / lengths[:, None],
                        self.areas * abs(det) * lengths, self.incident, name or self.name)

    def scaled(self, factor):
        return Polytope(self.vertices * factor, self.normals, self.areas * factor ** (self.n - 1),
                        self.incident, self.name)


@dataclass(frozen=True)
class LpZonoid:
    """h(Z, x)^p = sum_k w_k |x . u_k|^p for an even generator."""
    p: float
    generator: DiscreteSphereMeasure

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError(f"L^p zonoids need p >= 1, got {self.p}")
        if not self.generator.even:
            raise PreconditionError("zonoid generators must be even measures")

    @property
    def n(self):
        return self.generator.n

    def support(self, x):
        return _unrow(np.asarray(self.generator.cosine_transform(_rows(x), self.p)) ** (1.0 / self.p), x)

    def rotated(self, rotation):
        return LpZonoid(self.p, self.generator.rotated(rotation))


def support(body, x):
    """h(K, x) = max{x . y : y in K} for any body variant; x may be a vector or rows."""
    return body.support(x)


# ============================================================
# Norms and measures
# ============================================================

def polar_zonoid_norm(zonoid, x, frame=None):
    """
    ||x||_{Z°} = h(Z, x). With a frame, Z is an i-dimensional zonoid in that
    subspace and the generator must span it; without one it must span R^n.
    """
    if frame is None:
        if zonoid.generator.span_rank() < zonoid.n:
            raise DegenerateInputError("zonoid generator does not span R^n; the polar norm degenerates")
    else:
        inside = zonoid.generator.directions @ frame.basis
        if np.max(np.abs(np.linalg.norm(inside, axis=1) - 1.0)) > 1e-9:
            raise DegenerateInputError("zonoid generator leaves the given subspace")
        if np.linalg.matrix_rank(inside, tol=1e-10) < frame.dim_sub:
            raise DegenerateInputError("zonoid generator does not span the given subspace")
    return zonoid.support(x)


def surface_area_measure(polytope):
    """Atoms at facet normals weighted by facet areas."""
    return DiscreteSphereMeasure(polytope.normals, polytope.areas)


def _check_origin_interior(polytope):
    heights = polytope.facet_heights()
    scale = max(1.0, float(np.max(np.abs(polytope.vertices))))
    bad = np.flatnonzero(heights <= UNIT_TOL * scale)
    if bad.size:
        raise InvalidPolytopeError(
            f"origin is not interior: h(P, u_{bad[0]}) = {heights[bad[0]]:.3e}", facet=int(bad[0]))
    return heights


def lp_surface_area_measure(polytope, p):
    """S_p(P, .) = h(P, .)^(1-p) S(P, .)."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    heights = _check_origin_interior(polytope)
    return DiscreteSphereMeasure(polytope.normals, polytope.areas * heights ** (1.0 - p))


def lp_projection_body(polytope, p):
    """
    Pi_p P as an L^p zonoid with generator (omega_{p-1} / (2 omega_{n+p-2})) S_p(P, .).
    |x . v|^p only sees the even part of S_p, which is used for non-symmetric P.
    """
    n = polytope.n
    measure = lp_surface_area_measure(polytope, p).even_part()
    normalization = unit_ball_volume(p - 1) / (2.0 * unit_ball_volume(n + p - 2))
    return LpZonoid(p, measure.scaled(normalization))


def classical_projection_body(polytope):
    """Minkowski's projection body: h(Pi P, x) = (1/2) sum_k a_k |x . u_k|."""
    return LpZonoid(1.0, surface_area_measure(polytope).even_part().scaled(0.5))


def cauchy_projection(polytope, u):
    """(n-1)-volume of the shadow P | u^perp by the Cauchy projection formula."""
    return 0.5 * surface_area_measure(polytope).cosine_transform(u, 1.0)


def ellipsoid_projection_body(ellipsoid, p):
    """Pi_p(A B^n) = |det A|^(1/p) A^(-T) B^n."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    matrix = ellipsoid.matrix
    return Ellipsoid(abs(np.linalg.det(matrix)) ** (1.0 / p) * np.linalg.inv(matrix).T)


def volume(polytope):
    """|P| = (1/n) sum_k a_k h(P, u_k)."""
    heights = _check_origin_interior(polytope)
    return float(polytope.areas @ heights) / polytope.n


def body_volume(body):
    if isinstance(body, Polytope):
        return volume(body)
    if isinstance(body, Ball):
        return unit_ball_volume(body.n) * body.radius ** body.n
    if isinstance(body, Ellipsoid):
        return unit_ball_volume(body.n) * abs(body.determinant)
    raise DomainError(f"no volume rule for {type(body).__name__}")


def polar_volume(h_eval, n, spec):
    """|K°| = omega_n * mean over the sphere of h(K, u)^(-n), from support values only."""
    n = check_dimension(n)

    def integrand(u):
        h = np.asarray(h_eval(u), dtype=float)
        if np.any(~(h > 0)):
            raise DegenerateInputError("non-positive support value: the origin is not interior")
        return h ** (-n)

    return sphere_average(integrand, n, spec).scaled(unit_ball_volume(n))


def petty_product(body, p, spec):
    """|Pi_p° K| |K|^((n-p)/p); bounded above by omega_n^(n/p)."""
    n = body.n
    if not 1 <= p < n:
        raise DomainError(f"Petty product needs 1 <= p < n = {n}, got {p}")
    if isinstance(body, Ellipsoid):
        projection = ellipsoid_projection_body(body, p)
    elif isinstance(body, Ball):
        projection = Ball(n, body.radius ** ((n - p) / p))
    else:
        projection = lp_projection_body(body, p)
    polar = polar_volume(projection.support, n, spec)
    return polar.scaled(body_volume(body) ** ((n - p) / p))


# ============================================================
# Surface integrals, perimeter, isoperimetry
# ============================================================

def surface_integral(body, g, spec):
    """
    int g dS(K, .) for an even, positively 1-homogeneous g evaluated on rows.
    Ellipsoids use int g dS(A B^n, .) = |det A| int g(A^{-T} u) dsigma(u).
    """
    if isinstance(body, Polytope):
        return Estimate(float(body.areas @ np.asarray(g(body.normals), dtype=float)), 0.0, spec)
    n = body.n
    if isinstance(body, Ball):
        return sphere_average(g, n, spec).scaled(unit_sphere_area(n) * body.radius ** (n - 1))
    if isinstance(body, Ellipsoid):
        inverse = np.linalg.inv(body.matrix)
        average = sphere_average(lambda u: g(u @ inverse), n, spec)
        return average.scaled(unit_sphere_area(n) * abs(body.determinant))
    raise DomainError(f"no surface data for {type(body).__name__}")


def perimeter(body, spec=None):
    """Total mass of S(K, .)."""
    if isinstance(body, Polytope):
        return Estimate(float(np.sum(body.areas)), 0.0, spec)
    if isinstance(body, Ball):
        return Estimate(unit_sphere_area(body.n) * body.radius ** (body.n - 1), 0.0, spec)
    return surface_integral(body, lambda u: np.linalg.norm(u, axis=1), spec)


def isoperimetric_ratio(body, spec=None):
    """S(K)/(n omega_n^(1/n) |K|^((n-1)/n)) >= 1, equality for balls."""
    n = body.n
    bound = n * unit_ball_volume(n) ** (1.0 / n) * body_volume(body) ** ((n - 1.0) / n)
    return perimeter(body, spec).scaled(1.0 / bound)


# ============================================================
# Discs as L^p zonoids and SO(j) averaging
# ============================================================

def disc_zonoid(n, i, p, atoms, seed=0):
    """
    D^i_p: generator with total mass 1 on S^{i-1} in E_i, so h^p ~ q_{i,p}||x|E_i||^p.
    i = 1 is exact ({+-e_1}, mass 1/2 each); otherwise `atoms` antithetic uniform atoms.
    """
    n = check_dimension(n, minimum=1)
    if not 1 <= i <= n:
        raise DomainError(f"disc dimension must lie in [1, {n}], got {i}")
    if atoms < 2:
        raise DomainError("a disc zonoid needs at least two atoms")
    if i == 1:
        directions = np.zeros((2, n))
        directions[0, 0], directions[1, 0] = 1.0, -1.0
        return LpZonoid(p, DiscreteSphereMeasure(directions, np.array([0.5, 0.5])))
    half = atoms // 2
    sample = sample_sphere(derive_generator(seed, STREAM_ATOMS, i), i, half)
    directions = np.zeros((2 * half, n))
    directions[:half, :i] = sample
    directions[half:, :i] = -sample
    return LpZonoid(p, DiscreteSphereMeasure(directions, np.full(2 * half, 1.0 / (2 * half))))


def standard_subspace_measure(n, i, atoms, seed=0):
    """Discretized sigma_i/(i omega_i): the probability generator of D^i_p."""
    return disc_zonoid(n, i, 1.0, atoms, seed).generator


def projected_norm_identity(zonoid, rotation, x):
    """
    Both sides of ||x|F||_{Z(F)°} = h(phi Z, x) for an i-dimensional zonoid Z in E_i
    and F = phi E_i: the left side is evaluated intrinsically in F coordinates,
    the right side in ambient coordinates.
    """
    generator = zonoid.generator
    i = generator.span_rank()
    if not generator.spans_standard_subspace(i):
        raise PreconditionError("zonoid generator must span a standard subspace E_i")
    rotation = np.asarray(rotation, dtype=float)
    frame = Frame(rotation[:, :i])
    coordinates = frame.coordinates(x)
    intrinsic = DiscreteSphereMeasure(generator.directions[:, :i], generator.weights)
    left = intrinsic.cosine_transform(coordinates, zonoid.p) ** (1.0 / zonoid.p)
    right = zonoid.rotated(rotation).support(x)
    return left, right


def subgroup_average_residual(x, i, j, p, spec):
    """
    (q_{i,p} mean_{SO(j)} ||x|phi E_i||^p - q_{j,p}||x|E_j||^p) / (q_{j,p}||x|E_j||^p)
    over spec.grassmann_samples Haar elements of SO(j).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not np.any(x):
        raise DomainError("x must be non-zero")
    if not 1 <= i < j <= n:
        raise DomainError(f"need 1 <= i < j <= n = {n}, got i={i}, j={j}")
    lhs = q_coefficient(j, p) * np.linalg.norm(x[:j]) ** p
    if lhs == 0:
        return Estimate(0.0, 0.0, spec)
    q_i = q_coefficient(i, p)
    values = []
    for index, size in _batches(spec.grassmann_samples, spec.batch_size):
        block = sample_rotations(derive_generator(spec.seed, STREAM_SUBGROUP, j, index), j, size)
        projected = np.einsum('kab,a->kb', block[:, :, :i], x[:j])
        values.append(q_i * np.linalg.norm(projected, axis=1) ** p)
    values = np.concatenate(values)
    rhs = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return Estimate((rhs - lhs) / lhs, se / lhs, spec)


def _projected_surface_integrand(measure, k, p):
    q = q_coefficient(k, p)

    def G(frame):
        lengths = np.linalg.norm(measure.directions @ frame.basis, axis=1)
        return q * float(measure.weights @ lengths ** p)

    return G


def surface_average_sides(polytope, i, j, p, spec):
    """
    Left (Gr(n, j)) and right (Gr(n, i)) sides of
    int (q_{j,p} int ||u|E||^p dS_p)^(-n/p) dE <= int (q_{i,p} int ||u|F||^p dS_p)^(-n/p) dF,
    on one shared rotation stream.
    """
    n = polytope.n
    if not 1 <= i <= j <= n:
        raise DomainError(f"need 1 <= i <= j <= n = {n}, got i={i}, j={j}")
    measure = lp_surface_area_measure(polytope, p)
    left = grassmann_functional(_projected_surface_integrand(measure, j, p), n, j, -n / p, spec)
    if i == j:
        return left, left
    right = grassmann_functional(_projected_surface_integrand(measure, i, p), n, i, -n / p, spec)
    return left, right


def surface_average_gap(polytope, i, j, p, spec):
    """Paired estimate of right - left (non-negative up to noise)."""
    left, right = surface_average_sides(polytope, i, j, p, spec)
    return paired_gap(left, right)


def shadow_area(polytope, u):
    """(n-1)-volume of P | u^perp from the convex hull of the projected vertices."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    # Orthonormal basis of u^perp: trailing columns of a QR completion of u.
    basis = np.linalg.qr(np.column_stack([u, np.eye(polytope.n)]))[0][:, 1:polytope.n]
    return float(ConvexHull(polytope.vertices @ basis).volume)
