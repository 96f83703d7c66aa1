import math
from fractions import Fraction

import numpy as np
import pytest

from capdual.capacity import (capacity_kl_form, moment_map,
                              moment_polytope_contains, theta_capacity)
from capdual.core import WeightedVector, WeightVector

from util import random_feasible_theta, random_weighted_vector

F = Fraction


def binomial_vector(p0: float, p1: float) -> WeightedVector:
    return WeightedVector.from_terms(
        1, {(0,): math.sqrt(p0), (1,): math.sqrt(p1)})


def test_boundary_theta_picks_up_single_weight_mass():
    # at a vertex of the weight polytope the capacity is the vertex mass
    v = binomial_vector(0.8, 0.2)
    res = theta_capacity(v, (F(0),))
    assert math.isclose(math.exp(2 * res.log_cap.log_mag), 0.8, rel_tol=1e-12)
    assert res.diverging  # minimizer escapes to infinity along the face normal
    res1 = theta_capacity(v, (F(1),))
    assert math.isclose(math.exp(2 * res1.log_cap.log_mag), 0.2, rel_tol=1e-12)


def test_kl_form_matches_closed_form():
    # -log cap^2 = D(p||q) minimized at p = delta_0 here: log(1/0.8)
    v = binomial_vector(0.8, 0.2)
    out = capacity_kl_form(v, (F(0),))
    assert math.isclose(out.log_mag, -math.log(1.25), rel_tol=1e-12)


def test_capacity_one_at_moment_map():
    # cap_theta(v) = |v| = 1 exactly when theta = mu(v)
    v = binomial_vector(0.4, 0.6)
    res = theta_capacity(v, (F(3, 5),))
    assert abs(res.log_cap.log_mag) <= 1e-12
    assert not res.diverging
    mu = moment_map(v)
    assert np.allclose(mu, [0.6])


def test_uniform_vertex_capacity():
    v = binomial_vector(0.5, 0.5)
    res = theta_capacity(v, (F(1),))
    assert math.isclose(math.exp(2 * res.log_cap.log_mag), 0.5, rel_tol=1e-12)
    assert res.diverging


def test_single_weight_vector():
    v = WeightedVector.from_terms(2, {(1, 2): 0.7})
    hit = theta_capacity(v, (F(1), F(2)))
    assert math.isclose(hit.log_cap.to_float(), 0.7, rel_tol=1e-12)
    missed = theta_capacity(v, (F(0), F(2)))
    assert missed.log_cap.sign == 0
    cert = missed.certificate
    assert not cert.inside
    a, offset = cert.separator
    # the separating functional must be violated by theta and not the support
    assert sum(ai * wi for ai, wi in zip(a, (1, 2))) <= offset
    assert sum(ai * ti for ai, ti in zip(a, (F(0), F(2)))) > offset


def test_membership_certificate_convex_combination():
    v = random_weighted_vector(np.random.default_rng(11), n=2, n_terms=4)
    theta = random_feasible_theta(np.random.default_rng(12), v)
    cert = moment_polytope_contains(v, theta)
    assert cert.inside
    combo = cert.coefficients
    total = [Fraction(0)] * v.n
    mass = Fraction(0)
    for w, lam in combo:
        assert lam >= 0
        mass += lam
        for j, wj in enumerate(w.coords):
            total[j] += lam * wj
    assert mass == 1
    assert tuple(total) == tuple(theta)


def test_capacity_positive_iff_member():
    rng = np.random.default_rng(23)
    inside_count = outside_count = 0
    for seed in range(40):
        v = random_weighted_vector(np.random.default_rng(seed), n=2, n_terms=3)
        theta = random_feasible_theta(np.random.default_rng(seed + 1000), v)
        res = theta_capacity(v, theta)
        assert res.certificate.inside
        assert res.log_cap.sign == 1
        inside_count += 1
        # move theta outside by a large translation
        shifted = tuple(t + 50 for t in theta)
        out = theta_capacity(v, shifted)
        if not out.certificate.inside:
            assert out.log_cap.sign == 0
            outside_count += 1
    assert inside_count == 40 and outside_count == 40


def test_solver_cross_check_many_seeds():
    # independent optimizers must agree: log-sum-exp Newton vs KL program
    failures = []
    for seed in range(100):
        v = random_weighted_vector(np.random.default_rng(seed), n=2,
                                   n_terms=3 + seed % 3).normalized()
        theta = random_feasible_theta(np.random.default_rng(10_000 + seed), v)
        primal = theta_capacity(v, theta)
        kl = capacity_kl_form(v, theta)
        if primal.log_cap.sign == 0 or kl.sign == 0:
            failures.append((seed, "unexpected zero"))
            continue
        diff = abs(2 * primal.log_cap.log_mag - kl.log_mag)
        if diff > 1e-8:
            failures.append((seed, diff))
    assert not failures, failures


def test_kempf_ness_stationarity():
    # at the optimum of an interior theta the rescaled vector has mu = theta
    rng = np.random.default_rng(5)
    for seed in range(20):
        v = random_weighted_vector(np.random.default_rng(seed), n=2,
                                   n_terms=4).normalized()
        support = [w.coords for w, _ in v.terms]
        coeffs = [1] * len(support)  # barycenter is interior when affinely full
        denom = len(support)
        theta = tuple(sum(F(w[j], denom) for w in support) for j in range(2))
        res = theta_capacity(v, theta)
        if res.diverging or res.minimizer_x is None:
            continue
        shifted = v.scaled_by_character(res.minimizer_x).normalized()
        mu = moment_map(shifted)
        assert np.allclose(mu, [float(t) for t in theta], atol=1e-7)


def test_log_concavity_along_segments():
    v = random_weighted_vector(np.random.default_rng(77), n=2,
                               n_terms=4).normalized()
    t0 = random_feasible_theta(np.random.default_rng(78), v)
    t1 = random_feasible_theta(np.random.default_rng(79), v)
    mid = tuple((a + b) / 2 for a, b in zip(t0, t1))
    c0 = theta_capacity(v, t0).log_cap
    c1 = theta_capacity(v, t1).log_cap
    cm = theta_capacity(v, mid).log_cap
    if c0.sign and c1.sign:
        assert cm.sign == 1
        assert cm.log_mag >= 0.5 * (c0.log_mag + c1.log_mag) - 1e-8


def test_borel_character_shift():
    # rescaling amplitudes by e^{<w,x0>} shifts log cap^2 by 2<theta,x0>
    v = random_weighted_vector(np.random.default_rng(31), n=2,
                               n_terms=4, complex_amps=False)
    theta = random_feasible_theta(np.random.default_rng(32), v)
    x0 = [0.3, -0.7]
    base = theta_capacity(v, theta)
    shifted = theta_capacity(v.scaled_by_character(x0), theta)
    expected = 2 * base.log_cap.log_mag + 2 * sum(
        float(t) * x for t, x in zip(theta, x0))
    assert math.isclose(2 * shifted.log_cap.log_mag, expected,
                        rel_tol=1e-9, abs_tol=1e-9)


def test_gradient_norm_reported_small():
    v = binomial_vector(0.3, 0.7)
    res = theta_capacity(v, (F(1, 2),))
    assert res.gradient_norm <= 1e-10
    assert res.iterations > 0


def test_zero_vector_rejected():
    with pytest.raises(ValueError):
        theta_capacity(WeightedVector.from_terms(1, {(0,): 0.0}), (F(0),))


def test_kl_form_requires_unit_norm():
    v = WeightedVector.from_terms(1, {(0,): 2.0})
    with pytest.raises(ValueError):
        capacity_kl_form(v, (F(0),))
