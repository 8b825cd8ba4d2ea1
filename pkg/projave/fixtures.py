"""
Hull-free polytope builders and the JSON fixture format.

Every builder emits vertices together with the facet data (normal, area,
incident vertex) that the Polytope constructor validates, so no convex hull
code is needed.

Fixture format:
    {"name": "cube", "dimension": 3,
     "vertices": [[x, y, z], ...],
     "facets": [{"normal": [...], "area": 4.0, "vertex": 0}, ...]}
"""
import itertools
import json
import logging
import math
from pathlib import Path

import numpy as np

from .bodies import (
    Ball, DiscreteSphereMeasure, Ellipsoid, Polytope, disc_zonoid, surface_area_measure, volume,
)
from .exceptions import ConfigurationError, DomainError, InvalidPolytopeError, ProjaveError
from .geometry import (
    STREAM_ATOMS, STREAM_SUITE, check_dimension, derive_generator, sample_rotations, sample_sphere,
)

logger = logging.getLogger(__name__)


# ============================================================
# Builders
# ============================================================

def box(half_widths):
    """Axis-parallel box prod [-w_k, w_k]."""
    half_widths = np.asarray(half_widths, dtype=float)
    n = check_dimension(half_widths.size, minimum=1)
    if np.any(half_widths <= 0):
        raise DomainError("box half widths must be positive")
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
    vertices = signs * half_widths
    normals, areas, incident = [], [], []
    for axis in range(n):
        face = float(np.prod(2.0 * np.delete(half_widths, axis)))
        for sign in (1.0, -1.0):
            normal = np.zeros(n)
            normal[axis] = sign
            normals.append(normal)
            areas.append(face)
            incident.append(int(np.flatnonzero(signs[:, axis] == sign)[0]))
    return Polytope(vertices, np.array(normals), np.array(areas), np.array(incident), name='box')


def cube(n, half_width=1.0):
    """[-w, w]^n; the unit-volume cube is cube(n, 0.5)."""
    n = check_dimension(n, minimum=1)
    result = box(np.full(n, float(half_width)))
    return Polytope(result.vertices, result.normals, result.areas, result.incident, name='cube')


def parallelepiped(matrix):
    """M [-1, 1]^n."""
    matrix = np.asarray(matrix, dtype=float)
    return cube(matrix.shape[0]).linear_image(matrix, name='parallelepiped')


def simplex(vertices):
    """Simplex from n + 1 affinely independent vertices in R^n."""
    vertices = np.asarray(vertices, dtype=float)
    n = vertices.shape[1]
    if vertices.shape[0] != n + 1:
        raise DomainError(f"a simplex in R^{n} needs {n + 1} vertices, got {vertices.shape[0]}")
    normals, areas, incident = [], [], []
    for opposite in range(n + 1):
        others = [k for k in range(n + 1) if k != opposite]
        edges = vertices[others[1:]] - vertices[others[0]]
        # Normal spans the null space of the facet edges.
        normal = np.linalg.svd(edges)[2][-1]
        if normal @ (vertices[others[0]] - vertices[opposite]) < 0:
            normal = -normal
        gram = np.linalg.det(edges @ edges.T) if n > 1 else 1.0
        if gram <= 0:
            raise InvalidPolytopeError(f"facet {opposite} is degenerate", facet=opposite)
        normals.append(normal)
        areas.append(math.sqrt(gram) / math.factorial(n - 1))
        incident.append(others[0])
    return Polytope(vertices, np.array(normals), np.array(areas), np.array(incident), name='simplex')


def regular_simplex(n, circumradius=1.0):
    """Regular simplex centred at the origin."""
    n = check_dimension(n)
    centred = np.eye(n + 1) - 1.0 / (n + 1)
    basis = np.linalg.svd(centred)[2][:n]
    vertices = centred @ basis.T
    vertices *= circumradius / np.linalg.norm(vertices[0])
    result = simplex(vertices)
    return Polytope(result.vertices, result.normals, result.areas, result.incident, name='regular_simplex')


def _polygon_facet(points):
    """Outward unit normal and area of a planar convex polygon around the origin."""
    vector_area = 0.5 * sum(np.cross(a, b) for a, b in zip(points, np.roll(points, -1, axis=0)))
    area = float(np.linalg.norm(vector_area))
    normal = vector_area / area
    if normal @ points.mean(axis=0) < 0:
        normal = -normal
    return normal, area


def uv_sphere(bands=20, sectors=50, radius=1.0):
    """
    Latitude-longitude polyhedron inscribed in the sphere of the given radius:
    triangle caps at the poles and planar trapezoids in between (bands * sectors facets).
    Origin-symmetric when `sectors` is even.
    """
    if bands < 2 or sectors < 3:
        raise DomainError("a UV sphere needs at least 2 bands and 3 sectors")
    theta = np.linspace(0.0, math.pi, bands + 1)[1:-1]
    phi = 2.0 * math.pi * np.arange(sectors) / sectors
    ring = np.stack([np.outer(np.sin(theta), np.cos(phi)),
                     np.outer(np.sin(theta), np.sin(phi)),
                     np.outer(np.cos(theta), np.ones(sectors))], axis=-1).reshape(-1, 3)
    vertices = np.vstack([[0.0, 0.0, 1.0], ring, [0.0, 0.0, -1.0]]) * radius
    north, south = 0, vertices.shape[0] - 1

    def at(band, sector):
        return 1 + band * sectors + sector % sectors

    faces = []
    for k in range(sectors):
        faces.append([north, at(0, k), at(0, k + 1)])
        for band in range(bands - 2):
            faces.append([at(band, k), at(band + 1, k), at(band + 1, k + 1), at(band, k + 1)])
        faces.append([south, at(bands - 2, k + 1), at(bands - 2, k)])
    normals, areas = zip(*(_polygon_facet(vertices[face]) for face in faces))
    incident = [face[1] for face in faces]
    return Polytope(vertices, np.array(normals), np.array(areas), np.array(incident), name='uv_sphere')


def zonogon_prism(generators, height=1.0):
    """Prism Z x [-h, h] over the planar zonogon Z = sum [-g_k/2, g_k/2]."""
    generators = np.atleast_2d(np.asarray(generators, dtype=float))
    if generators.shape[1] != 2 or generators.shape[0] < 2:
        raise DomainError("a zonogon needs at least two planar generators")
    # Orient every segment into the upper half plane, then sort by angle.
    lower = (generators[:, 1] < 0) | ((generators[:, 1] == 0) & (generators[:, 0] < 0))
    ordered = np.where(lower[:, None], -generators, generators)
    ordered = ordered[np.argsort(np.arctan2(ordered[:, 1], ordered[:, 0]))]
    edges = np.vstack([ordered, -ordered])
    polygon = -0.5 * ordered.sum(axis=0) + np.vstack([np.zeros(2), np.cumsum(edges, axis=0)[:-1]])
    m = polygon.shape[0]
    vertices = np.vstack([np.column_stack([polygon, np.full(m, height)]),
                          np.column_stack([polygon, np.full(m, -height)])])
    x, y = polygon[:, 0], polygon[:, 1]
    base = 0.5 * abs(float(x @ np.roll(y, -1) - y @ np.roll(x, -1)))
    normals = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
    areas = [base, base]
    incident = [0, m]
    for k, edge in enumerate(edges):
        length = float(np.linalg.norm(edge))
        normals.append([edge[1] / length, -edge[0] / length, 0.0])
        areas.append(2.0 * height * length)
        incident.append(k)
    return Polytope(vertices, np.array(normals), np.array(areas), np.array(incident), name='zonogon_prism')


def _random_map(rng, spread=0.5):
    rotation = sample_rotations(rng, 3, 1)[0]
    return rotation @ np.diag(np.exp(spread * rng.standard_normal(3)))


def random_symmetric_suite(count, seed, n=3):
    """
    Origin-symmetric polytopes in R^3 derived from `seed`: parallelepipeds,
    linear images of a coarse UV sphere and zonogon prisms, in rotation.
    """
    if n != 3:
        raise DomainError("the random suite is built in R^3")
    suite = []
    for k in range(int(count)):
        rng = derive_generator(seed, STREAM_SUITE, k)
        kind = k % 3
        if kind == 0:
            body = parallelepiped(_random_map(rng))
        elif kind == 1:
            body = uv_sphere(8, 12).linear_image(_random_map(rng), name='uv_sphere_image')
        else:
            segments = 2 + int(rng.integers(1, 4))
            angles = np.sort(rng.uniform(0.0, math.pi, segments))
            lengths = rng.uniform(0.5, 1.5, segments)
            generators = np.column_stack([lengths * np.cos(angles), lengths * np.sin(angles)])
            body = zonogon_prism(generators, float(rng.uniform(0.5, 1.5))).linear_image(
                _random_map(rng, 0.3), name='zonogon_prism_image')
        suite.append(body)
    logger.info(f"[Fixtures] built random suite of {len(suite)} bodies (seed={seed})")
    return suite


# ============================================================
# JSON fixtures
# ============================================================

def polytope_to_dict(polytope):
    return {
        'name': polytope.name,
        'dimension': polytope.n,
        'vertices': polytope.vertices.tolist(),
        'facets': [
            {'normal': normal.tolist(), 'area': float(area), 'vertex': int(vertex)}
            for normal, area, vertex in zip(polytope.normals, polytope.areas, polytope.incident)
        ],
    }


def polytope_from_dict(data):
    try:
        vertices = np.asarray(data['vertices'], dtype=float)
        facets = data['facets']
        normals = np.asarray([f['normal'] for f in facets], dtype=float)
        areas = np.asarray([f['area'] for f in facets], dtype=float)
        incident = np.asarray([f['vertex'] for f in facets], dtype=int)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"malformed polytope fixture: {e}") from e
    if 'dimension' in data and int(data['dimension']) != vertices.shape[1]:
        raise InvalidPolytopeError(
            f"fixture dimension {data['dimension']} disagrees with vertices in R^{vertices.shape[1]}")
    return Polytope(vertices, normals, areas, incident, name=data.get('name', 'fixture'))


def load_polytope(path):
    path = Path(path)
    try:
        with path.open() as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read fixture {path}: {e}") from e
    return polytope_from_dict(data)


def dump_polytope(polytope, path):
    with Path(path).open('w') as f:
        json.dump(polytope_to_dict(polytope), f, indent=2)


def validate_fixture(path):
    """
    Load and validate a fixture; returns a summary dict. Invalid fixtures
    raise InvalidPolytopeError naming the offending facet.
    """
    polytope = load_polytope(path)
    closure = float(np.linalg.norm(surface_area_measure(polytope).moment()))
    return {
        'name': polytope.name,
        'dimension': polytope.n,
        'vertices': int(polytope.vertices.shape[0]),
        'facets': polytope.facet_count,
        'surface_area': float(np.sum(polytope.areas)),
        'volume': volume(polytope),
        'closure_residual': closure,
        'origin_symmetric': polytope.is_origin_symmetric(),
    }


# ============================================================
# Body descriptions used by run configs
# ============================================================

def body_from_dict(data, base_dir=None):
    """
    Build a body from a config entry, e.g. {"kind": "uv_sphere", "bands": 20, "sectors": 50}.
    An optional "linear_map" applies A to polytopes.
    """
    if not isinstance(data, dict) or 'kind' not in data:
        raise ConfigurationError(f"body description needs a 'kind': {data!r}")
    kind = data['kind']
    try:
        n = int(data.get('n', 3))
        if kind == 'ball':
            body = Ball(n, float(data.get('radius', 1.0)))
        elif kind == 'ellipsoid':
            body = Ellipsoid(np.asarray(data['matrix'], dtype=float))
        elif kind == 'cube':
            body = cube(n, float(data.get('half_width', 1.0)))
        elif kind == 'box':
            body = box(data['half_widths'])
        elif kind == 'parallelepiped':
            body = parallelepiped(data['matrix'])
        elif kind == 'simplex':
            body = simplex(data['vertices']) if 'vertices' in data else regular_simplex(
                n, float(data.get('circumradius', 1.0)))
        elif kind == 'uv_sphere':
            body = uv_sphere(int(data.get('bands', 20)), int(data.get('sectors', 50)),
                             float(data.get('radius', 1.0)))
        elif kind == 'zonogon_prism':
            body = zonogon_prism(data['generators'], float(data.get('height', 1.0)))
        elif kind == 'fixture':
            path = Path(data['path'])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            body = load_polytope(path)
        else:
            raise ConfigurationError(f"unknown body kind {kind!r}")
        if 'linear_map' in data:
            if not isinstance(body, Polytope):
                raise ConfigurationError("linear_map applies to polytope bodies only")
            body = body.linear_image(np.asarray(data['linear_map'], dtype=float))
    except ProjaveError:
        raise
    except KeyError as e:
        raise ConfigurationError(f"body {kind!r} is missing {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"malformed {kind!r} body: {e}") from e
    return body


def measure_from_dict(data, n):
    """
    Zonoid generator descriptions:
      {"kind": "segment"}                          exact {+-e_1}, mass 1/2 each
      {"kind": "disc", "i": 2, "atoms": 2000, "seed": 0}
      {"kind": "random", "i": 2, "pairs": 8, "seed": 0, "mass": 1.0}
      {"kind": "atoms", "directions": [...], "weights": [...]}
    """
    if not isinstance(data, dict) or 'kind' not in data:
        raise ConfigurationError(f"measure description needs a 'kind': {data!r}")
    kind = data['kind']
    if kind == 'segment':
        return disc_zonoid(n, 1, 1.0, 2).generator
    if kind == 'disc':
        return disc_zonoid(n, int(data['i']), 1.0, int(data.get('atoms', 2000)),
                           int(data.get('seed', 0))).generator
    if kind == 'random':
        i, pairs = int(data['i']), int(data.get('pairs', 8))
        rng = derive_generator(int(data.get('seed', 0)), STREAM_ATOMS, i, pairs)
        local = sample_sphere(rng, i, pairs)
        weights = rng.uniform(0.5, 1.5, pairs)
        weights *= float(data.get('mass', 1.0)) / (2.0 * weights.sum())
        directions = np.zeros((2 * pairs, n))
        directions[:pairs, :i] = local
        directions[pairs:, :i] = -local
        return DiscreteSphereMeasure(directions, np.concatenate([weights, weights]))
    if kind == 'atoms':
        return DiscreteSphereMeasure(np.asarray(data['directions'], dtype=float),
                                     np.asarray(data['weights'], dtype=float))
    raise ConfigurationError(f"unknown measure kind {kind!r}")
