"""
Services for projave: VerificationEngine (one static method per command).

Each command turns a RunConfig into a Report. Rows are computed one at a
time inside try/except: a failing row is logged and recorded with its error
and the run carries on.
"""
import logging
import math
import time
from pathlib import Path

import numpy as np
from django.utils import timezone

from . import __version__
from .bodies import (
    Ball, Ellipsoid, Polytope, cauchy_projection, classical_projection_body,
    disc_zonoid, ellipsoid_projection_body, isoperimetric_ratio, subgroup_average_residual,
    lp_projection_body, petty_product, polar_volume, projected_norm_identity, shadow_area,
    surface_average_sides,
)
from .config import COMMANDS, library_defaults, run_config_from_dict
from .exceptions import ConfigurationError
from .fixtures import body_from_dict, measure_from_dict, random_symmetric_suite, validate_fixture
from .functionals import (
    ROUNDING_FLOOR, E_i_bv, E_ip, bv_chain_report, bv_mean, bv_ratio, bv_zonoid_mean, chain_report,
    gradient_norm, grassmann_mean, sobolev_ratio, zonoid_bv_ratio, zonoid_mean, zonoid_sobolev_ratio,
)
from .geometry import (
    STREAM_SPHERE, bv_sharp_constant, classical_bv_constant, classical_constant, derive_generator,
    q_coefficient, sample_rotations, sample_sphere, sharp_constant, unit_ball_volume,
)
from .profiles import MollifiedBall, profile_from_dict
from .quadrature import Estimate, paired_gap
from .reports import Report, make_row, read_report, row_drift

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-12


# ============================================================
# Margins: non-negative iff the row passes
# ============================================================

def equality_margin(estimate, reference, sigma, rel_tol=0.0, abs_tol=0.0):
    allowed = sigma * estimate.std_error + rel_tol * abs(reference) + abs_tol
    return allowed - abs(estimate.value - reference)


def at_most_margin(estimate, bound, sigma, rel_tol=0.0):
    return bound * (1.0 + rel_tol) + sigma * estimate.std_error - estimate.value


def at_least_margin(estimate, bound, sigma, rel_tol=0.0):
    return estimate.value - bound + sigma * estimate.std_error + rel_tol * abs(bound)


def strict_margin(estimate, bound, sigma):
    return estimate.value - bound - sigma * estimate.std_error


def _row(command, case, inputs, estimate, reference, margin):
    return make_row(command, case, inputs, estimate.value, estimate.std_error, reference, margin)


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _nullable(value):
    return None if math.isnan(value) else value


def _profile_p(case, profile):
    p = case.get('p', getattr(profile, 'p', None))
    if p is None:
        raise ConfigurationError(f"case needs an exponent 'p' for a {profile.kind} profile")
    return float(p)


class VerificationEngine:
    """Runs the verification commands and assembles their reports."""

    @staticmethod
    def _guarded(report, command, case, inputs, compute):
        """Append compute()'s rows; on error record one failed row instead."""
        try:
            rows = compute()
        except Exception as e:
            logger.warning(f"[VerificationEngine] {command} row {len(report.rows)} ({case}) failed: {e}")
            report.add(make_row(command, case, inputs, error=f"{type(e).__name__}: {e}"))
            return
        for row in (rows if isinstance(rows, list) else [rows]):
            report.add(row)
            if not row['passed']:
                logger.warning(f"[VerificationEngine] {command} row {row['index']} ({case}) "
                               f"outside tolerance: margin={row['margin']:.3e}")

    # ------------------------------------------------------------
    # constants
    # ------------------------------------------------------------

    @staticmethod
    def cmd_constants(config):
        """Tabulate omega, q, c and a over the n and p grids, with the p = 1 consistency rows."""
        command = 'constants'
        report = Report(command)
        n_values = _as_list(config.options.get('n', [3, 4, 5, 6, 7, 8]))
        p_values = _as_list(config.options.get('p', [1.0, 1.5, 2.0, 2.5]))

        for n in n_values:
            inputs = {'n': n}
            VerificationEngine._guarded(report, command, 'unit_ball_volume', inputs, lambda n=n: _row(
                command, 'unit_ball_volume', {'n': n}, Estimate(unit_ball_volume(n)),
                unit_ball_volume(n), 0.0))
            for p in p_values:
                VerificationEngine._guarded(report, command, 'constants', {'n': n, 'p': p},
                                            lambda n=n, p=p: VerificationEngine._constant_rows(command, n, p))
        for p in p_values:
            VerificationEngine._guarded(report, command, 'q_unit_dimension', {'i': 1, 'p': p}, lambda p=p: _row(
                command, 'q_unit_dimension', {'i': 1, 'p': p}, Estimate(q_coefficient(1, p)), 1.0,
                equality_margin(Estimate(q_coefficient(1, p)), 1.0, 0.0, rel_tol=EXACT_TOL)))
        return report

    @staticmethod
    def _constant_rows(command, n, p):
        inputs = {'n': n, 'p': p}
        c = Estimate(sharp_constant(n, p))
        a = Estimate(classical_constant(n, p))
        q = Estimate(q_coefficient(n, p))
        rows = [_row(command, 'q_coefficient', inputs, q, q.value, 0.0)]
        if p == 1:
            reference = bv_sharp_constant(n)
            rows.append(_row(command, 'sharp_constant', inputs, c, reference,
                             equality_margin(c, reference, 0.0, rel_tol=EXACT_TOL)))
            reference = classical_bv_constant(n)
            rows.append(_row(command, 'classical_constant', inputs, a, reference,
                             equality_margin(a, reference, 0.0, rel_tol=EXACT_TOL)))
            limit = Estimate(sharp_constant(n, 1.0 + 1e-8))
            rows.append(_row(command, 'p1_limit', inputs, limit, c.value,
                             equality_margin(limit, c.value, 0.0, rel_tol=1e-6)))
        elif n == 3 and p == 2:
            reference = (math.pi ** 2 / 4.0) ** (1.0 / 3.0)
            rows.append(_row(command, 'sharp_constant', inputs, c, reference,
                             equality_margin(c, reference, 0.0, rel_tol=EXACT_TOL)))
            reference = math.sqrt(3.0) * (math.pi / 2.0) ** (2.0 / 3.0)
            rows.append(_row(command, 'classical_constant', inputs, a, reference,
                             equality_margin(a, reference, 0.0, rel_tol=1e-10)))
        else:
            rows.append(_row(command, 'sharp_constant', inputs, c, c.value, 0.0))
            rows.append(_row(command, 'classical_constant', inputs, a, a.value, 0.0))
        return rows

    # ------------------------------------------------------------
    # verify-sobolev
    # ------------------------------------------------------------

    @staticmethod
    def cmd_verify_sobolev(config):
        """sobolev_ratio (or its zonoid version) over a profile grid."""
        command = 'verify-sobolev'
        report = Report(command)
        spec, sigma = config.quadrature, config.sigma
        for case in config.cases:
            try:
                profile = profile_from_dict(case.get('profile'), config.base_dir)
                p = _profile_p(case, profile)
            except Exception as e:
                logger.warning(f"[VerificationEngine] {command}: malformed case: {e}")
                report.add(make_row(command, 'sobolev_ratio', case, error=f"{type(e).__name__}: {e}"))
                continue
            expect = case.get('expect', 'bound')
            rel_tol = float(case.get('rel_tol', 0.0))
            method = case.get('method', 'auto')
            for i in _as_list(case.get('i', list(range(1, profile.n + 1)))):
                inputs = {'profile': case['profile'], 'i': i, 'p': p, 'expect': expect}

                def compute(i=i, inputs=inputs):
                    if 'mu' in case:
                        mu = measure_from_dict(case['mu'], profile.n)
                        ratio = zonoid_sobolev_ratio(profile, i, p, mu, spec)
                        name = 'zonoid_sobolev_ratio'
                    else:
                        ratio = sobolev_ratio(profile, i, p, spec, method)
                        name = 'sobolev_ratio'
                    if expect == 'equality':
                        margin = equality_margin(ratio, 1.0, sigma, abs_tol=rel_tol)
                    elif expect == 'strict':
                        margin = strict_margin(ratio, 1.0, sigma)
                    else:
                        margin = at_least_margin(ratio, 1.0, sigma, rel_tol)
                    return _row(command, name, inputs, ratio, 1.0, margin)

                VerificationEngine._guarded(report, command, 'sobolev_ratio', inputs, compute)
        return report

    # ------------------------------------------------------------
    # chain
    # ------------------------------------------------------------

    @staticmethod
    def cmd_chain(config):
        """Monotone chain E_{n,p} >= ... >= E_{1,p} and zonoid sandwiches."""
        command = 'chain'
        report = Report(command)
        spec, sigma = config.quadrature, config.sigma
        for case in config.cases:
            inputs = {k: v for k, v in case.items()}
            check = case.get('check', 'chain')

            def compute(case=case, inputs=inputs, check=check):
                profile = profile_from_dict(case['profile'], config.base_dir)
                p = _profile_p(case, profile)
                if check == 'sandwich':
                    return VerificationEngine._sandwich_rows(
                        command, inputs, profile.n,
                        lambda i: grassmann_mean(profile, i, p, spec),
                        lambda i, mu: zonoid_mean(profile, i, p, mu, spec),
                        case, sigma)
                return VerificationEngine._chain_rows(
                    command, inputs, chain_report(profile, p, spec, sigma),
                    case.get('expect_strict', False), sigma,
                    collapse=q_coefficient(profile.n, p) ** (1.0 / p) * gradient_norm(profile, p, spec).value)

            VerificationEngine._guarded(report, command, check, inputs, compute)
        return report

    @staticmethod
    def _chain_rows(command, inputs, chain, expect_strict, sigma, collapse=None):
        rows = []
        n = max(chain.values)
        for i, value in chain.values.items():
            ratio = chain.ratio[i]
            rows.append(_row(command, f'E_{i}', dict(inputs, i=i), value,
                             value.value / ratio.value, at_least_margin(ratio, 1.0, sigma, 1e-12)))
        for gap in chain.gaps:
            estimate = gap['estimate']
            scale = max(abs(chain.values[gap['lower']].value), abs(chain.values[gap['upper']].value))
            rows.append(_row(command, 'chain_gap', dict(inputs, lower=gap['lower'], upper=gap['upper']),
                             estimate, 0.0, at_least_margin(estimate, -ROUNDING_FLOOR * scale, sigma)))
        if expect_strict:
            spread = chain.spread
            rows.append(_row(command, 'chain_strict', dict(inputs, lower=1, upper=n),
                             spread, 0.0, strict_margin(spread, 0.0, sigma)))
        if collapse is not None:
            top = chain.values[n]
            rows.append(_row(command, 'full_dimension', dict(inputs, i=n), top, collapse,
                             equality_margin(top, collapse, sigma, rel_tol=1e-10)))
        return rows

    @staticmethod
    def _sandwich_rows(command, inputs, n, mean, zonoid, case, sigma):
        """E_n >= E^mu_i >= E_1 for a mass-1 generator, as two paired gaps."""
        i = int(case.get('i', case['mu'].get('i', 1)))
        mu = measure_from_dict(case['mu'], n)
        if abs(mu.total_mass - 1.0) > 1e-12:
            raise ConfigurationError(f"sandwich needs a mass-1 generator, got {mu.total_mass}")
        top, middle, bottom = mean(n), zonoid(i, mu), mean(1)
        rows = []
        for lower, upper, label in ((bottom, middle, f'E_mu_{i} - E_1'), (middle, top, f'E_{n} - E_mu_{i}')):
            gap = paired_gap(lower, upper, outer=-1.0 / n)
            scale = min(lower.value, upper.value) ** (-1.0 / n)
            rows.append(_row(command, 'sandwich_gap', dict(inputs, gap=label), gap, 0.0,
                             at_least_margin(gap, -ROUNDING_FLOOR * scale, sigma)))
        return rows

    # ------------------------------------------------------------
    # petty
    # ------------------------------------------------------------

    @staticmethod
    def cmd_petty(config):
        """Petty products against omega_n^(n/p), the random suite, and both sides of the averaged inequality."""
        command = 'petty'
        report = Report(command)
        spec, sigma = config.quadrature, config.sigma
        for case in config.cases:
            check = case.get('check', 'petty')
            rel_tol = float(case.get('rel_tol', 0.01))
            if check == 'suite':
                VerificationEngine._suite_rows(report, command, case, spec, sigma, rel_tol)
                continue
            for p in _as_list(case.get('p', 1.0)):
                inputs = dict(case, p=p)

                def compute(case=case, p=float(p), inputs=inputs, check=check):
                    body = body_from_dict(case['body'], config.base_dir)
                    n = body.n
                    if check == 'surface_average':
                        left, right = surface_average_sides(body, int(case['i']), int(case['j']), p, spec)
                        gap = paired_gap(left, right)
                        expect = case.get('expect', 'order')
                        if expect == 'strict':
                            margin = strict_margin(gap, 0.0, sigma)
                        elif expect == 'equality':
                            margin = equality_margin(gap, 0.0, sigma, abs_tol=rel_tol * abs(right.value))
                        else:
                            margin = at_least_margin(gap, 0.0, sigma)
                        return [_row(command, 'surface_average_left', inputs, left, right.value, 0.0),
                                _row(command, 'surface_average_right', inputs, right, left.value, 0.0),
                                _row(command, 'surface_average_gap', inputs, gap, 0.0, margin)]
                    product = petty_product(body, p, spec)
                    bound = unit_ball_volume(n) ** (n / p)
                    reference = float(case['value']) if 'value' in case else bound
                    expect = case.get('expect', 'bound')
                    if expect == 'equality':
                        margin = equality_margin(product, reference, sigma, rel_tol=rel_tol)
                    else:
                        margin = at_most_margin(product, bound, sigma, rel_tol)
                    return _row(command, 'petty_product', inputs, product, reference, margin)

                VerificationEngine._guarded(report, command, check, inputs, compute)
        return report

    @staticmethod
    def _suite_rows(report, command, case, spec, sigma, rel_tol):
        try:
            suite = random_symmetric_suite(int(case.get('count', 20)), int(case.get('suite_seed', spec.seed)))
        except Exception as e:
            logger.error(f"[VerificationEngine] {command}: random suite failed: {e}")
            report.add(make_row(command, 'petty_suite', case, error=f"{type(e).__name__}: {e}"))
            return
        for k, body in enumerate(suite):
            for p in _as_list(case.get('p', 1.0)):
                inputs = {'suite_seed': case.get('suite_seed', spec.seed), 'member': k,
                          'body': body.name, 'p': p}

                def compute(body=body, p=float(p), inputs=inputs):
                    n = body.n
                    product = petty_product(body, p, spec)
                    bound = unit_ball_volume(n) ** (n / p)
                    return _row(command, 'petty_suite', inputs, product, bound,
                                at_most_margin(product, bound, sigma, rel_tol))

                VerificationEngine._guarded(report, command, 'petty_suite', inputs, compute)

    # ------------------------------------------------------------
    # geom-ineq
    # ------------------------------------------------------------

    @staticmethod
    def cmd_geom_ineq(config):
        """SO(j) averaging, disc zonoids, projected norms, Cauchy formula, linear-image laws, isoperimetry."""
        command = 'geom-ineq'
        report = Report(command)
        spec, sigma = config.quadrature, config.sigma
        handlers = {
            'subgroup_average': VerificationEngine._subgroup_average_rows,
            'disc_zonoid': VerificationEngine._disc_zonoid_rows,
            'projected_norm': VerificationEngine._projected_norm_rows,
            'cauchy': VerificationEngine._cauchy_rows,
            'projection_body': VerificationEngine._projection_body_rows,
            'linear_image_law': VerificationEngine._linear_image_rows,
            'polar_volume': VerificationEngine._polar_volume_rows,
            'isoperimetric': VerificationEngine._isoperimetric_rows,
        }
        for case in config.cases:
            check = case.get('check')
            handler = handlers.get(check)
            if handler is None:
                report.add(make_row(command, str(check), case, error=f"unknown geom-ineq check {check!r}"))
                continue
            VerificationEngine._guarded(report, command, check, case,
                                        lambda case=case, handler=handler: handler(command, case, config, spec, sigma))
        return report

    @staticmethod
    def _subgroup_average_rows(command, case, config, spec, sigma):
        i, j, p = int(case['i']), int(case['j']), float(case['p'])
        if 'x' in case:
            points = [np.asarray(case['x'], dtype=float)]
        else:
            rng = derive_generator(spec.seed, STREAM_SPHERE, 97, i, j)
            points = list(rng.standard_normal((int(case.get('random_x', 5)), int(case.get('n', 3)))))
        rows = []
        for x in points:
            inputs = {'i': i, 'j': j, 'p': p, 'x': x.tolist()}
            residual = subgroup_average_residual(x, i, j, p, spec)
            rows.append(_row(command, 'subgroup_average_residual', inputs, residual, 0.0,
                             equality_margin(residual, 0.0, sigma, abs_tol=1e-15)))
            if 'rhs_reference' in case:
                lhs = q_coefficient(j, p) * np.linalg.norm(x[:j]) ** p
                rhs = Estimate(lhs * (1.0 + residual.value), lhs * residual.std_error, spec)
                reference = float(case['rhs_reference'])
                rows.append(_row(command, 'subgroup_average_rhs', inputs, rhs, reference,
                                 equality_margin(rhs, reference, sigma)))
        return rows

    @staticmethod
    def _disc_zonoid_rows(command, case, config, spec, sigma):
        n, i, p = int(case['n']), int(case['i']), float(case['p'])
        atoms = int(case.get('atoms', 20000))
        zonoid = disc_zonoid(n, i, p, atoms, int(case.get('atom_seed', spec.seed)))
        x = np.asarray(case['x'], dtype=float)
        values = np.abs(zonoid.generator.directions @ x) ** p
        # Antithetic atoms repeat each value twice; the error uses one copy.
        half = values[:values.size // 2] if i > 1 else values
        se = float(np.std(half, ddof=1) / math.sqrt(half.size)) if i > 1 else 0.0
        estimate = Estimate(float(zonoid.support(x)) ** p, se, spec)
        reference = q_coefficient(i, p) * np.linalg.norm(x[:i]) ** p
        return _row(command, 'disc_zonoid', case, estimate, reference,
                    equality_margin(estimate, reference, sigma, rel_tol=EXACT_TOL))

    @staticmethod
    def _projected_norm_rows(command, case, config, spec, sigma):
        n, i, p = int(case['n']), int(case['i']), float(case['p'])
        zonoid = disc_zonoid(n, i, p, int(case.get('atoms', 64)), int(case.get('atom_seed', spec.seed)))
        rng = derive_generator(spec.seed, STREAM_SPHERE, 98, n, i)
        rotations = sample_rotations(rng, n, int(case.get('count', 5)))
        points = rng.standard_normal((rotations.shape[0], n))
        rows = []
        for k, (rotation, x) in enumerate(zip(rotations, points)):
            left, right = projected_norm_identity(zonoid, rotation, x)
            estimate = Estimate(left - right, 0.0, spec)
            rows.append(_row(command, 'projected_norm', dict(case, sample=k), estimate, 0.0,
                             1e-12 * max(1.0, abs(right)) - abs(left - right)))
        return rows

    @staticmethod
    def _cauchy_rows(command, case, config, spec, sigma):
        body = body_from_dict(case['body'], config.base_dir)
        if not isinstance(body, Polytope):
            raise ConfigurationError("the Cauchy formula check needs a polytope body")
        rows = []
        directions = case.get('u')
        if directions is None:
            rng = derive_generator(spec.seed, STREAM_SPHERE, 99)
            directions = sample_sphere(rng, body.n, int(case.get('directions', 5)))
        for u in np.atleast_2d(np.asarray(directions, dtype=float)):
            u = u / np.linalg.norm(u)
            value = Estimate(cauchy_projection(body, u), 0.0, spec)
            reference = float(case['reference']) if 'reference' in case else shadow_area(body, u)
            rows.append(_row(command, 'cauchy_projection', dict(case, u=u.tolist()), value, reference,
                             equality_margin(value, reference, sigma, rel_tol=1e-9)))
        return rows

    @staticmethod
    def _reference_ellipsoid(case, n):
        """Ellipsoid approximated by the case's body: linear_map * radius * B^n."""
        radius = float(case['body'].get('radius', 1.0))
        matrix = np.asarray(case['body'].get('linear_map', np.eye(n)), dtype=float)
        return Ellipsoid(radius * matrix)

    @staticmethod
    def _projection_body_rows(command, case, config, spec, sigma):
        body = body_from_dict(case['body'], config.base_dir)
        n = body.n
        ellipsoid = VerificationEngine._reference_ellipsoid(case, n)
        rel_tol = float(case.get('rel_tol', 0.01))
        classical = bool(case.get('classical', False))
        p = 1.0 if classical else float(case.get('p', 1.0))
        if classical:
            projection = classical_projection_body(body)
            A = ellipsoid.matrix
            reference_body = Ellipsoid(unit_ball_volume(n - 1) * abs(np.linalg.det(A)) * np.linalg.inv(A).T)
        else:
            projection = lp_projection_body(body, p)
            reference_body = ellipsoid_projection_body(ellipsoid, p)
        rng = derive_generator(spec.seed, STREAM_SPHERE, 100)
        rows = []
        for u in sample_sphere(rng, n, int(case.get('directions', 10))):
            value = Estimate(projection.support(u), 0.0, spec)
            reference = reference_body.support(u)
            rows.append(_row(command, 'projection_body', dict(case, p=p, u=u.tolist()), value, reference,
                             equality_margin(value, reference, sigma, rel_tol=rel_tol)))
        return rows

    @staticmethod
    def _linear_image_rows(command, case, config, spec, sigma):
        matrix = np.asarray(case['matrix'], dtype=float)
        p = float(case.get('p', 1.0))
        result = ellipsoid_projection_body(Ellipsoid(matrix), p).matrix
        expected = np.asarray(case['expected'], dtype=float)
        deviation = float(np.max(np.abs(result - expected)))
        return _row(command, 'linear_image_law', case, Estimate(deviation, 0.0, spec), 0.0,
                    1e-12 * max(1.0, float(np.max(np.abs(expected)))) - deviation)

    @staticmethod
    def _polar_volume_rows(command, case, config, spec, sigma):
        body = body_from_dict(case['body'], config.base_dir)
        n = body.n
        estimate = polar_volume(body.support, n, spec)
        if 'reference' in case:
            reference = float(case['reference'])
        elif isinstance(body, Ellipsoid):
            reference = unit_ball_volume(n) / abs(body.determinant)
        elif isinstance(body, Ball):
            reference = unit_ball_volume(n) / body.radius ** n
        else:
            raise ConfigurationError("polar volume of a polytope needs an explicit reference")
        return _row(command, 'polar_volume', case, estimate, reference,
                    equality_margin(estimate, reference, sigma, rel_tol=float(case.get('rel_tol', 0.0))))

    @staticmethod
    def _isoperimetric_rows(command, case, config, spec, sigma):
        body = body_from_dict(case['body'], config.base_dir)
        ratio = isoperimetric_ratio(body, spec)
        if case.get('expect') == 'equality':
            margin = equality_margin(ratio, 1.0, sigma, rel_tol=float(case.get('rel_tol', 1e-12)))
        else:
            margin = at_least_margin(ratio, 1.0, sigma, 1e-12)
        return _row(command, 'isoperimetric_ratio', case, ratio, 1.0, margin)

    # ------------------------------------------------------------
    # bv
    # ------------------------------------------------------------

    @staticmethod
    def cmd_bv(config):
        """BV functionals of characteristic functions: ball equality, strict rows, invariance, sandwich, trend."""
        command = 'bv'
        report = Report(command)
        spec, sigma = config.quadrature, config.sigma
        for case in config.cases:
            check = case.get('check', 'bv')
            if check == 'mollified':
                VerificationEngine._guarded(report, command, check, case,
                                            lambda case=case: VerificationEngine._mollified_rows(
                                                command, case, spec, sigma))
                continue
            if check in ('sandwich', 'chain', 'zonoid_equality'):
                VerificationEngine._guarded(report, command, check, case,
                                            lambda case=case, check=check: VerificationEngine._bv_body_rows(
                                                command, case, config, spec, sigma, check))
                continue
            for i in _as_list(case.get('i', 1)):
                inputs = dict(case, i=i)

                def compute(case=case, i=int(i), inputs=inputs, check=check):
                    if check == 'invariance':
                        n = len(case['matrix'])
                        matrix = np.asarray(case['matrix'], dtype=float)
                        if abs(abs(np.linalg.det(matrix)) - 1.0) > 1e-9:
                            raise ConfigurationError("invariance rows need |det A| = 1")
                        value = E_i_bv(Ellipsoid(matrix), i, spec)
                        reference = E_i_bv(Ball(n), i, spec).value
                        return _row(command, 'bv_invariance', inputs, value, reference,
                                    equality_margin(value, reference, sigma, rel_tol=1e-12))
                    body = body_from_dict(case['body'], config.base_dir)
                    ratio = bv_ratio(body, i, spec)
                    expect = case.get('expect', 'bound')
                    if expect == 'equality':
                        margin = equality_margin(ratio, 1.0, sigma, rel_tol=float(case.get('rel_tol', 0.01)))
                    elif expect == 'strict':
                        margin = strict_margin(ratio, 1.0, sigma)
                    else:
                        margin = at_least_margin(ratio, 1.0, sigma, 1e-12)
                    return _row(command, 'bv_ratio', inputs, ratio, 1.0, margin)

                VerificationEngine._guarded(report, command, check, inputs, compute)
        return report

    @staticmethod
    def _bv_body_rows(command, case, config, spec, sigma, check):
        body = body_from_dict(case['body'], config.base_dir)
        if check == 'chain':
            return VerificationEngine._chain_rows(command, case, bv_chain_report(body, spec, sigma),
                                                  case.get('expect_strict', False), sigma)
        if check == 'zonoid_equality':
            mu = measure_from_dict(case['mu'], body.n)
            rows = []
            for i in _as_list(case.get('i', case['mu'].get('i', 1))):
                ratio = zonoid_bv_ratio(body, int(i), mu, spec)
                rows.append(_row(command, 'zonoid_bv_ratio', dict(case, i=i), ratio, 1.0,
                                 equality_margin(ratio, 1.0, sigma, rel_tol=float(case.get('rel_tol', 0.01)))))
            return rows
        return VerificationEngine._sandwich_rows(
            command, case, body.n,
            lambda i: bv_mean(body, i, spec),
            lambda i, mu: bv_zonoid_mean(body, i, mu, spec),
            case, sigma)

    @staticmethod
    def _mollified_rows(command, case, spec, sigma):
        """E_{i,1} of ramped balls decreases toward E_i(1_B) as the ramp narrows."""
        n = int(case.get('n', 3))
        widths = sorted((float(w) for w in case.get('widths', [0.4, 0.2, 0.1])), reverse=True)
        rows = []
        for i in _as_list(case.get('i', list(range(1, n + 1)))):
            limit = E_i_bv(Ball(n), int(i), spec)
            previous = None
            for width in widths:
                value = E_ip(MollifiedBall(n, 1.0, width), int(i), 1.0, spec)
                margin = at_least_margin(value, limit.value, sigma, 1e-12)
                if previous is not None:
                    margin = min(margin, previous.value - value.value + sigma * math.hypot(
                        previous.std_error, value.std_error))
                rows.append(_row(command, 'mollified_trend', dict(case, i=i, width=width), value,
                                 limit.value, margin))
                previous = value
        return rows

    # ------------------------------------------------------------
    # validate-fixture
    # ------------------------------------------------------------

    @staticmethod
    def cmd_validate_fixture(config):
        command = 'validate-fixture'
        report = Report(command)
        paths = _as_list(config.options.get('paths', [case['path'] for case in config.cases]))
        for path in paths:
            resolved = Path(path) if Path(path).is_absolute() else Path(config.base_dir) / path
            inputs = {'path': str(path)}

            def compute(resolved=resolved, inputs=inputs):
                summary = validate_fixture(resolved)
                residual = Estimate(summary['closure_residual'], 0.0)
                tolerance = 1e-9 * max(1.0, summary['surface_area'])
                return _row(command, 'fixture', dict(inputs, **summary), residual, 0.0,
                            tolerance - residual.value)

            VerificationEngine._guarded(report, command, 'fixture', inputs, compute)
        return report

    # ------------------------------------------------------------
    # Dispatch, persistence, replay
    # ------------------------------------------------------------

    HANDLERS = {
        'constants': 'cmd_constants',
        'verify-sobolev': 'cmd_verify_sobolev',
        'chain': 'cmd_chain',
        'petty': 'cmd_petty',
        'geom-ineq': 'cmd_geom_ineq',
        'bv': 'cmd_bv',
        'validate-fixture': 'cmd_validate_fixture',
    }

    @staticmethod
    def run(config, output=None, fmt=None):
        """
        Run a RunConfig. Returns {'status': 'success' | 'failed', 'report': Report, ...};
        'failed' means at least one row failed.
        """
        if config.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {config.command!r}")
        handler = getattr(VerificationEngine, VerificationEngine.HANDLERS[config.command])
        logger.info(f"[VerificationEngine] {config.command}: seed={config.seed}, {len(config.cases)} cases")
        started = time.perf_counter()
        report = handler(config)
        quadrature = config.quadrature.to_dict()
        report.finalize({
            'library_version': __version__,
            'command': config.command,
            'seed': config.seed,
            'config': config.to_dict(),
            'quadrature': quadrature,
            'wall_clock_seconds': time.perf_counter() - started,
            'created_at': timezone.now().isoformat(),
        })
        target = config.quadrature.target_rel_error
        imprecise = VerificationEngine.imprecise_rows(report, target)
        if imprecise:
            logger.warning(f"[VerificationEngine] {config.command}: {len(imprecise)} rows above the target "
                           f"relative error {target:.1e} (rows {imprecise[:10]})")
        if output:
            report.write(output, fmt)
        status = 'success' if report.passed else 'failed'
        logger.info(f"[VerificationEngine] {config.command}: {len(report.rows)} rows, {report.failed} failed")
        return {'status': status, 'report': report, 'rows': len(report.rows),
                'failed': report.failed, 'output': str(output) if output else None,
                'imprecise': imprecise}

    @staticmethod
    def imprecise_rows(report, target):
        """Indices of rows whose relative standard error exceeds target."""
        indices = []
        for row in report.rows:
            estimate, se = row['estimate'], row['std_error']
            # Residual and gap rows (reference 0) are judged in absolute terms
            if not (math.isfinite(estimate) and math.isfinite(se)) or estimate == 0 or row['reference'] == 0:
                continue
            if se / abs(estimate) > target:
                indices.append(row['index'])
        return indices

    @staticmethod
    def default_report_path(config, fmt='csv'):
        """REPORT_DIR/<command>-seed<seed>-<UTC timestamp>.<fmt>, used when a recorded run has no --out."""
        stamp = timezone.now().strftime('%Y%m%dT%H%M%S')
        return Path(library_defaults()['REPORT_DIR']) / f"{config.command}-seed{config.seed}-{stamp}.{fmt}"

    @staticmethod
    def record(result):
        """Persist a run and its rows."""
        from .models import ReportRow, VerificationRun

        report = result['report']
        header = report.header
        run = VerificationRun.objects.create(
            command=header['command'],
            seed=header['seed'],
            config=header['config'],
            header=header,
            library_version=header['library_version'],
            wall_clock_seconds=header['wall_clock_seconds'],
            passed=report.passed,
            row_count=len(report.rows),
            failed_count=report.failed,
            output_path=result.get('output') or '',
        )
        ReportRow.objects.bulk_create([
            ReportRow(
                run=run,
                index=row['index'],
                command=row['command'],
                case=row['case'],
                inputs=row['inputs'],
                estimate=_nullable(row['estimate']),
                std_error=_nullable(row['std_error']),
                reference=_nullable(row['reference']),
                margin=_nullable(row['margin']),
                passed=row['passed'],
                error=row['error'],
            )
            for row in report.rows
        ])
        logger.info(f"[VerificationEngine] recorded run {run.pk} ({run.command}, {run.row_count} rows)")
        return run

    @staticmethod
    def replay_header(header, rows):
        """Re-run a header and compare against the given rows bit for bit."""
        config = run_config_from_dict(header['config'], seed=header['seed'], command=header['command'])
        result = VerificationEngine.run(config)
        drift = row_drift(rows, result['report'].rows)
        status = 'success' if not drift else 'drift'
        if drift:
            logger.error(f"[VerificationEngine] replay of {header['command']} drifted in {len(drift)} cells")
        else:
            logger.info(f"[VerificationEngine] replay of {header['command']} is bitwise identical")
        return {'status': status, 'drift': drift, 'report': result['report']}

    @staticmethod
    def replay(report_path):
        """Re-run a report file from its embedded header."""
        report = read_report(report_path)
        if not report.header.get('config'):
            raise ConfigurationError(f"{report_path} carries no replayable header")
        return VerificationEngine.replay_header(report.header, report.rows)
