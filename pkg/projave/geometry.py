"""
Geometry core: exact constants, rotations and subspace frames, Haar sampling.

Constants are evaluated in log space (scipy.special.gammaln) so that
dimensions up to ~50 never overflow. Random streams are derived from an
explicit integer seed; nothing here reads global random state.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import DomainError

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-12

# Stream keys for derive_generator(). The batch index is appended as the last key.
STREAM_SPHERE = 0
STREAM_GRASSMANN = 1
STREAM_SUBGROUP = 2
STREAM_IMPORTANCE = 3
STREAM_ATOMS = 4
STREAM_SUITE = 5


# ============================================================
# Seeds
# ============================================================

def derive_generator(seed, *keys):
    """
    Child generator for (seed, keys...).
    child_seed = hash(parent_seed, keys) via numpy's SeedSequence spawn keys,
    so a worker or batch index always maps to the same stream.
    """
    if seed is None:
        raise DomainError("an explicit integer seed is required")
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)


# ============================================================
# Exact constants
# ============================================================

def check_dimension(n, minimum=2):
    if int(n) != n or n < minimum:
        raise DomainError(f"dimension must be an integer >= {minimum}, got {n}")
    return int(n)


def log_unit_ball_volume(s):
    if not np.isfinite(s) or s < 0:
        raise DomainError(f"unit ball volume needs s >= 0, got {s}")
    return 0.5 * s * math.log(math.pi) - gammaln(1.0 + 0.5 * s)


def unit_ball_volume(s):
    """omega_s = pi^(s/2) / Gamma(1 + s/2), for real s >= 0."""
    return math.exp(log_unit_ball_volume(s))


def unit_sphere_area(n):
    """Surface area n*omega_n of the unit sphere in R^n."""
    n = check_dimension(n, minimum=1)
    return n * unit_ball_volume(n)


def _check_ip(i, p):
    if int(i) != i or i < 1:
        raise DomainError(f"subspace dimension must be an integer >= 1, got {i}")
    if not np.isfinite(p) or p < 1:
        raise DomainError(f"exponent p must be >= 1, got {p}")


def log_q_coefficient(i, p):
    _check_ip(i, p)
    return (math.log(2.0) + log_unit_ball_volume(i + p - 2)
            - math.log(i) - log_unit_ball_volume(i) - log_unit_ball_volume(p - 1))


def q_coefficient(i, p):
    """q_{i,p} = 2 omega_{i+p-2} / (i omega_i omega_{p-1})."""
    return math.exp(log_q_coefficient(i, p))


def _check_np(n, p):
    n = check_dimension(n)
    if not np.isfinite(p) or p < 1 or p >= n:
        raise DomainError(f"exponent p must satisfy 1 <= p < n = {n}, got {p}")
    return n


def sharp_constant(n, p):
    """
    Optimal constant c_{n,p} of the projection-averaged Sobolev inequalities.
    The factor ((n-p)/(p-1))^(1-1/p) is continued by its limit 1 at p = 1.
    """
    n = _check_np(n, p)
    log_first = (math.log(2.0) + log_unit_ball_volume(n + p - 2)
                 - log_unit_ball_volume(n) - log_unit_ball_volume(p - 1)) / p
    if p == 1:
        log_middle = 0.0
    else:
        log_middle = (1.0 - 1.0 / p) * (math.log(n - p) - math.log(p - 1))
    log_last = (log_unit_ball_volume(n) + gammaln(n / p)
                + gammaln(n + 1 - n / p) - gammaln(n)) / n
    return math.exp(log_first + log_middle + log_last)


def classical_constant(n, p):
    """a_{n,p} = c_{n,p} q_{n,p}^(-1/p), the best constant of ||grad f||_p >= a ||f||_{p*}."""
    c = sharp_constant(n, p)
    return c * math.exp(-log_q_coefficient(n, p) / p)


def bv_sharp_constant(n):
    """2 omega_{n-1} / omega_n^(1-1/n)."""
    n = check_dimension(n)
    return 2.0 * unit_ball_volume(n - 1) / unit_ball_volume(n) ** (1.0 - 1.0 / n)


def classical_bv_constant(n):
    """n omega_n^(1/n), the isoperimetric constant."""
    n = check_dimension(n)
    return n * unit_ball_volume(n) ** (1.0 / n)


def sobolev_conjugate(n, p):
    """p* = np/(n-p)."""
    n = _check_np(n, p)
    return n * p / (n - p)


# ============================================================
# Rotations and frames
# ============================================================

@dataclass(frozen=True)
class Rotation:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError(f"rotation must be square, got shape {entries.shape}")
        gram = entries.T @ entries
        if np.max(np.abs(gram - np.eye(entries.shape[0]))) > ORTHO_TOL:
            raise DomainError("rotation is not orthogonal")
        if abs(np.linalg.det(entries) - 1.0) > ORTHO_TOL:
            raise DomainError("rotation determinant is not +1")
        object.__setattr__(self, 'entries', entries)

    @property
    def n(self):
        return self.entries.shape[0]

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.entries.T

    def inverse(self):
        return Rotation(self.entries.T.copy())

    def frame(self, i):
        return Frame(self.entries[:, :i])


@dataclass(frozen=True)
class Frame:
    """
    Orthonormal basis of an i-dimensional subspace, stored as the columns of an n x i array.
    `index` is the position in the rotation stream that produced it; inner Monte Carlo keys on it.
    """
    basis: np.ndarray
    index: int = field(default=0, compare=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2 or not 1 <= basis.shape[1] <= basis.shape[0]:
            raise DomainError(f"frame basis must be n x i with 1 <= i <= n, got {basis.shape}")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > ORTHO_TOL:
            raise DomainError("frame basis is not orthonormal")
        object.__setattr__(self, 'basis', basis)

    @property
    def dim_ambient(self):
        return self.basis.shape[0]

    @property
    def dim_sub(self):
        return self.basis.shape[1]

    def coordinates(self, x):
        """Coordinates of x|E in the frame basis; x may be a single vector or rows."""
        return np.asarray(x, dtype=float) @ self.basis

    def projector(self):
        return self.basis @ self.basis.T


def standard_frame(n, i):
    """E_i = span{e_1, ..., e_i}."""
    n = check_dimension(n, minimum=1)
    if not 1 <= i <= n:
        raise DomainError(f"subspace dimension must lie in [1, {n}], got {i}")
    return Frame(np.eye(n)[:, :i])


def project_length(x, frame):
    """||x|E|| for the subspace spanned by the frame; rows of x are projected independently."""
    return np.linalg.norm(frame.coordinates(x), axis=-1)


# ============================================================
# Haar sampling
# ============================================================

def sample_rotations(rng, n, count):
    """
    `count` Haar rotations as a (count, n, n) array.
    QR of standard normals with diag(R) forced positive gives Haar O(n);
    negating the first column of the det = -1 samples maps them onto SO(n).
    """
    n = check_dimension(n, minimum=1)
    z = rng.standard_normal((int(count), n, n))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, 0] = -q[flip, :, 0]
    return q


def sample_rotation(rng, n):
    return Rotation(sample_rotations(rng, n, 1)[0])


def sample_frame(rng, n, i):
    """First i columns of a Haar rotation: invariant probability measure on Gr(n, i)."""
    n = check_dimension(n, minimum=1)
    if not 1 <= i <= n:
        raise DomainError(f"subspace dimension must lie in [1, {n}], got {i}")
    return sample_rotation(rng, n).frame(i)


def sample_subgroup_rotations(rng, n, j, count):
    """Haar elements of SO(j) acting on E_j and fixing E_j^perp, as (count, n, n) arrays."""
    n = check_dimension(n, minimum=1)
    if not 1 <= j <= n:
        raise DomainError(f"subgroup dimension must lie in [1, {n}], got {j}")
    out = np.broadcast_to(np.eye(n), (int(count), n, n)).copy()
    out[:, :j, :j] = sample_rotations(rng, j, count)
    return out


def sample_subgroup_rotation(rng, n, j):
    return Rotation(sample_subgroup_rotations(rng, n, j, 1)[0])


def sample_sphere(rng, n, count):
    """Uniform points on S^{n-1} as rows."""
    z = rng.standard_normal((int(count), n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
