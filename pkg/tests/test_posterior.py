import numpy as np
import pytest

from tumorbayes.posterior import (
    EstimatorError,
    Posterior,
    PotentialEvaluation,
    hellinger_estimate,
)
from tumorbayes.priors import Normal, PriorSpec, Uniform


def scalar_posterior(y=1.2, sigma=0.1, law=None, forward=None):
    spec = PriorSpec(param_names=("u",), param_laws=(law or Normal(0.0, 1.0),))
    return Posterior(forward=forward or (lambda v: np.asarray(v)),
                     y=np.array([y]), sigmas=np.array([sigma]), prior=spec)


class TestPotential:
    def test_perfect_fit_hits_lower_bound(self):
        post = scalar_posterior(y=0.7, sigma=0.05)
        ev = post.potential(np.array([0.7]))
        assert ev.misfit == 0.0
        assert ev.phi == -ev.offset

    def test_zero_forward_gives_zero_phi(self):
        post = scalar_posterior(y=0.9, sigma=0.2,
                                forward=lambda v: np.zeros(1))
        ev = post.potential(np.array([0.3]))
        assert np.isclose(ev.phi, 0.0)
        assert np.isclose(ev.misfit, ev.offset)

    def test_scalar_arithmetic(self):
        # misfit = 0.5 (1.0 - 1.2)^2 / 0.01 = 2.0
        post = scalar_posterior(y=1.2, sigma=0.1)
        ev = post.potential(np.array([1.0]))
        assert np.isclose(ev.misfit, 2.0, rtol=1e-14)

    def test_lower_bound_invariant(self):
        post = scalar_posterior(y=0.4, sigma=0.3)
        rng = np.random.default_rng(0)
        for _ in range(50):
            ev = post.potential(rng.normal(size=1))
            assert ev.phi >= -ev.offset - 1e-12

    def test_negative_misfit_rejected(self):
        with pytest.raises(ValueError):
            PotentialEvaluation(phi=0.0, misfit=-1.0, offset=1.0, wall_time=0.0)

    def test_lipschitz_in_y(self):
        # |Phi(u,y1) - Phi(u,y2)| <= C (r + sum |G_i(u)|) |y1 - y2|
        rng = np.random.default_rng(4)
        spec = PriorSpec(param_names=("u",), param_laws=(Normal(0.0, 1.0),))
        sigmas = np.array([0.3, 0.5, 0.2])
        forward = lambda v: np.array([v[0], v[0] ** 2, np.sin(v[0])])
        r = 2.0
        u = np.array([0.8])
        g_val = forward(u)
        c_const = 1.0 / sigmas.min() ** 2
        bound_factor = c_const * (r + np.sum(np.abs(g_val)))
        for _ in range(100):
            y1 = rng.uniform(-1, 1, 3) * r / np.sqrt(3)
            y2 = rng.uniform(-1, 1, 3) * r / np.sqrt(3)
            p1 = Posterior(forward, y1, sigmas, spec).potential(u)
            p2 = Posterior(forward, y2, sigmas, spec).potential(u)
            dy = np.linalg.norm(y1 - y2)
            assert abs(p1.phi - p2.phi) <= bound_factor * dy + 1e-12


class TestLogPosterior:
    def test_outside_support_skips_forward(self):
        calls = []

        def forward(v):
            calls.append(1)
            return np.asarray(v)

        post = scalar_posterior(law=Uniform(0.0, 1.0), forward=forward)
        assert post.log_posterior(np.array([2.0])) == -np.inf
        assert calls == []

    def test_equal_prior_difference_is_misfit_difference(self):
        post = scalar_posterior(y=0.5, sigma=0.2, law=Uniform(-5.0, 5.0))
        u1, u2 = np.array([0.1]), np.array([0.9])
        lhs = post.log_posterior(u1) - post.log_posterior(u2)
        rhs = post.misfit(u2) - post.misfit(u1)
        assert np.isclose(lhs, rhs, rtol=1e-14)

    def test_conjugate_gaussian_shape(self):
        # G(u) = u with prior N(mu0, tau^2): the log-posterior equals the
        # closed-form Gaussian log-density up to one additive constant.
        mu0, tau, sigma, y = 0.3, 1.5, 0.5, 1.0
        post = scalar_posterior(y=y, sigma=sigma, law=Normal(mu0, tau))
        var_p = 1.0 / (1.0 / tau**2 + 1.0 / sigma**2)
        mean_p = var_p * (mu0 / tau**2 + y / sigma**2)
        us = np.linspace(-2, 2, 41)
        lp = np.array([post.log_posterior(np.array([u])) for u in us])
        closed = -0.5 * (us - mean_p) ** 2 / var_p
        shift = lp - closed
        np.testing.assert_allclose(shift, shift[0], rtol=0, atol=1e-10)

    def test_forward_failure_becomes_minus_inf(self):
        from tumorbayes.solver import SolverError

        def broken(v):
            raise SolverError("solver exploded")

        post = scalar_posterior(forward=broken)
        assert post.log_posterior(np.array([0.5])) == -np.inf
        assert post.n_forward_failures == 1

    def test_cache_avoids_recomputation(self):
        calls = []

        def forward(v):
            calls.append(1)
            return np.asarray(v)

        post = scalar_posterior(forward=forward)
        u = np.array([0.42])
        post.misfit(u)
        post.misfit(u.copy())
        assert len(calls) == 1
        post.misfit(np.array([0.43]))
        assert len(calls) == 2


class TestHellinger:
    def test_identical_potentials_zero_distance(self):
        rng = np.random.default_rng(1)
        phi = rng.uniform(0, 5, 500)
        rep = hellinger_estimate(phi, phi.copy())
        assert rep.d_h == 0.0

    def test_gaussian_closed_form(self):
        # prior N(0,1) tilted to N(a,1)/N(b,1); d_H^2 = 1 - exp(-(a-b)^2/8)
        rng = np.random.default_rng(11)
        u = rng.standard_normal(20000)
        a, b = 0.0, 0.5
        phi1 = 0.5 * (u - a) ** 2 - 0.5 * u**2
        phi2 = 0.5 * (u - b) ** 2 - 0.5 * u**2
        rep = hellinger_estimate(phi1, phi2)
        closed = np.sqrt(1 - np.exp(-((a - b) ** 2) / 8))
        assert abs(rep.d_h - closed) < 3 * rep.se
        assert rep.se < 0.01
        assert rep.z1 > 0 and rep.z2 > 0

    def test_symmetry_exact(self):
        rng = np.random.default_rng(2)
        phi1 = rng.uniform(0, 3, 300)
        phi2 = rng.uniform(0, 3, 300)
        r12 = hellinger_estimate(phi1, phi2)
        r21 = hellinger_estimate(phi2, phi1)
        assert r12.d_h == r21.d_h
        assert r12.se == r21.se

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(3)
        phi1 = rng.uniform(0, 3, 300)
        phi2 = rng.uniform(0, 3, 300)
        base = hellinger_estimate(phi1, phi2)
        shifted = hellinger_estimate(phi1 + 123.0, phi2 + 123.0)
        assert abs(base.d_h - shifted.d_h) < 1e-12

    def test_recentring_handles_large_potentials(self):
        # raw exp(-phi) underflows; the internal recentring keeps it finite
        rng = np.random.default_rng(4)
        phi1 = 1e4 + rng.uniform(0, 1, 200)
        phi2 = 1e4 + rng.uniform(0, 1, 200)
        rep = hellinger_estimate(phi1, phi2)
        assert 0.0 <= rep.d_h <= 1.0
        assert np.isfinite(rep.log_z1)

    def test_rejects_small_samples(self):
        with pytest.raises(ValueError):
            hellinger_estimate(np.zeros(10), np.zeros(10))

    def test_rejects_non_finite(self):
        phi = np.full(200, np.inf)
        with pytest.raises(EstimatorError):
            hellinger_estimate(phi, phi)

    def test_d_h_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            phi1 = rng.uniform(0, 10, 150)
            phi2 = rng.uniform(0, 10, 150)
            rep = hellinger_estimate(phi1, phi2)
            assert 0.0 <= rep.d_h <= 1.0
