"""Floating-point metric assembly against the exact scalar curvature."""

import random
from fractions import Fraction

import numpy as np
import pytest

from helpers import geometry, product_sv, segre, twist, two_point, untwisted, veronese
from sepkahler.curvature import GeometrySpec, extremality_residual
from sepkahler.errors import DomainError
from sepkahler.oracle import (
    FloatGeometry,
    _degenerate,
    compare,
    compatibility_check,
    fd_scalar_curvature,
    make_point,
    numeric_metric,
    relative_error,
    sample_points,
)
from sepkahler.rational import UniRational
from sepkahler.solver import solve


def two_point_412():
    return two_point(1, 1, 2)


def flat():
    fs = segre(2)
    return geometry(fs, untwisted(fs), [[1], [1]])


def veronese_x4():
    fs = veronese(2)
    return geometry(fs, untwisted(fs), [[0, 0, 0, 0, 1]] * 2)


def segre_quadratic():
    fs = segre(2)
    return geometry(fs, untwisted(fs), [[0, 1, -1]] * 2)


def _q(c):
    return Fraction(c).limit_denominator(10 ** 12)


# metric assembly

def test_flat_metric_is_identity():
    nm = numeric_metric(flat(), [0.3, 0.7])
    assert np.allclose(nm.G, np.eye(4), atol=1e-14)


def test_veronese_dx_block():
    nm = numeric_metric(veronese_x4(), [0.3, 0.7])
    assert nm.G[0, 0] == pytest.approx((0.3 - 0.7) / 0.3 ** 4)
    assert nm.G[1, 1] == pytest.approx((0.7 - 0.3) / 0.7 ** 4)
    assert nm.G[0, 1] == 0 and np.allclose(nm.G[:2, 2:], 0)


def test_metric_symmetric():
    g = geometry(product_sv(1, 2), twist(product_sv(1, 2), {(0, 0): 1, (1, 0): 1}), [[1, 1, 1]] * 3)
    nm = numeric_metric(g, [0.2, 0.5, -0.4])
    assert np.allclose(nm.G, nm.G.T)


def test_degenerate_point_rejected():
    with pytest.raises(DomainError):
        numeric_metric(veronese_x4(), [0.5, 0.5])


# finite-difference scalar curvature

def test_fd_segre_quadratic():
    assert fd_scalar_curvature(segre_quadratic(), [0.3, 0.7]) == pytest.approx(4.0, abs=1e-4)


def test_fd_veronese_x4():
    assert fd_scalar_curvature(veronese_x4(), [0.3, 0.7]) == pytest.approx(-12.0, abs=1e-3)


def test_fd_flat():
    assert abs(fd_scalar_curvature(flat(), [0.3, 0.7])) < 1e-6


def test_fd_stencil_leaving_domain():
    with pytest.raises(DomainError):
        fd_scalar_curvature(veronese_x4(), [0.3, 0.3 + 0.1], h=0.05)


# compatibility

RANDOM_SPECS = [
    (segre(2), {(0, 0): 1, (1, 0): 2, (0, 1): 3}),
    (veronese(2), {(0,): 1, (2,): 1}),
    (product_sv(1, 2), {(0, 0): 2, (1, 0): 1, (0, 1): 1}),
]


@pytest.mark.parametrize("fs,coeffs", RANDOM_SPECS, ids=lambda c: getattr(c, "kind", ""))
def test_compatibility_on_random_points(fs, coeffs):
    g = geometry(fs, twist(fs, coeffs), [[1, 1, 2]] * fs.m)
    for pt in sample_points(g, 5, seed=1):
        rep = compatibility_check(g, pt)
        assert rep.ok, rep.to_wire()


def test_compatibility_flat_tight():
    rep = compatibility_check(flat(), [0.3, 0.7])
    assert rep.ok
    assert max(rep.residuals.values()) < 1e-12


def test_compatibility_detects_sign_flip():
    g = veronese_x4()
    rep = compatibility_check(g, [0.3, 0.7], flip_u=True)
    assert not rep.passed["omega_gJ"]


# compare

def test_compare_segre_family_twenty_points():
    fs = segre(2)
    beta = untwisted(fs)
    fam = solve(fs, beta)[0]
    g = fam.geometry(fam.random_values(random.Random(2)))
    summary = compare(g, sample_points(g, 20, seed=4))
    assert summary.points == 20 and summary.max_rel_err < 1e-4, summary.to_wire()


def test_compare_veronese3_degree5():
    fs = veronese(3)
    g = geometry(fs, untwisted(fs), [[1, -1, 0, 2, 1, 1]] * 3)
    summary = compare(g, sample_points(g, 10, seed=5))
    assert summary.max_rel_err < 1e-3 and not summary.failures


def test_compare_empty_rejected():
    with pytest.raises(ValueError):
        compare(flat(), [])


def test_sampling_deterministic():
    g = veronese_x4()
    a = [p.to_wire() for p in sample_points(g, 4, seed=9)]
    b = [p.to_wire() for p in sample_points(g, 4, seed=9)]
    assert a == b


def test_make_point_margin():
    fg = FloatGeometry(veronese_x4())
    pt = make_point(fg, [0.3, 0.7])
    # the smallest tracked factor is the profile x^4 at 0.3
    assert pt.margin == pytest.approx(0.3 ** 4)
    with pytest.raises(DomainError):
        make_point(fg, [0.0, 0.7])


def test_relative_error_definition():
    assert relative_error(1.5, 1.0) == pytest.approx(0.5)
    assert relative_error(10.5, 10.0) == pytest.approx(0.05)


# family instances

FAMILY_INPUTS = [
    (veronese(2), {(0,): 1, (2,): 1}),
    (veronese(3), {(0,): 1, (1,): 2, (2,): 4, (3,): 8}),
    (segre(2), {(0, 0): 1, (1, 0): 2, (0, 1): 3}),
    (product_sv(1, 2), {(0, 0): 1}),
]


@pytest.mark.parametrize("fs,coeffs", FAMILY_INPUTS, ids=lambda c: getattr(c, "kind", ""))
def test_family_instances_match_oracle(fs, coeffs):
    beta = twist(fs, coeffs)
    r = random.Random(11)
    for fam in solve(fs, beta):
        g = fam.geometry(fam.random_values(r))
        pts = sample_points(g, 10, seed=3, low=-1.0, high=1.0)
        summary = compare(g, pts)
        assert summary.max_rel_err < 1e-3, (fam.case_tag, summary.to_wire())
        rep = extremality_residual(g)
        assert rep.extremal
        fg = FloatGeometry(g)
        for pt in pts[:3]:
            assert compatibility_check(g, pt, fg=fg).ok
            # Scal = -<mu, alpha> / <mu, beta>
            val = {v: _q(c) for v, c in zip(g.slots(), pt.x)}
            killing = -float(rep.alpha_poly().evaluate(val)) / float(g.mu().evaluate(val))
            fd = fd_scalar_curvature(g, pt, fg=fg)
            assert relative_error(fd, killing) < 1e-3


def test_sampler_keeps_clear_of_profile_poles():
    fs = two_point_412()
    # A has a double pole at x = -1
    prof = [UniRational(v, [5, 0, 1, 1], {(1, 1): 2} if v.group == 1 else {}) for v in fs.partition.all_vars()]
    g = GeometrySpec(fs, untwisted(fs), dict(zip(fs.partition.all_vars(), prof)))
    pts = sample_points(g, 30, seed=0)
    assert all(abs(p.x[0] + 1) > 0.25 for p in pts)
    fg = FloatGeometry(g)
    assert all(not _degenerate(fg.metric(p.x)) for p in pts)
    assert all(numeric_metric(g, p, fg=fg) for p in pts)
