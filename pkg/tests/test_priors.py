import numpy as np
import pytest

from tumorbayes.grids import build_grid
from tumorbayes.priors import (
    FieldPrior,
    ModelParams,
    Normal,
    PriorError,
    PriorSpec,
    Uniform,
    basis_eval,
    basis_gammas,
    evaluate_growth_field,
    log_prior_density,
    sample_prior,
    tensor_sine_basis,
)


def test3_spec():
    return PriorSpec(param_names=(), param_laws=(),
                     field=FieldPrior(n_modes=3, basis="test3", h0=2.0,
                                      coeff_sds=(0.4, 0.3, 0.2)))


class TestSampling:
    def test_uniform_moment_check(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Uniform(0.5, 0.8),))
        rng = np.random.default_rng(17)
        n = 10**5
        draws = np.array([sample_prior(spec, rng).z[0] for _ in range(n)])
        sd = 0.3 / np.sqrt(12)
        assert abs(draws.mean() - 0.65) < 3 * sd / np.sqrt(n)
        assert np.all((draws >= 0.5) & (draws <= 0.8))

    def test_degenerate_field_variance(self):
        spec = PriorSpec(param_names=(), param_laws=(),
                         field=FieldPrior(n_modes=3, basis="test3", h0=2.0,
                                          coeff_sds=(1e-300,) * 3))
        u = sample_prior(spec, np.random.default_rng(0))
        assert np.allclose(u.g, 0.0, atol=1e-290)
        g = build_grid(2, ((-1, 1), (-1, 1)), (8, 8))
        assert np.allclose(evaluate_growth_field(spec, u, g), 2.0, atol=1e-289)

    def test_test3_coefficient_sds(self):
        spec = test3_spec()
        rng = np.random.default_rng(5)
        draws = np.stack([sample_prior(spec, rng).g for _ in range(20000)])
        assert np.allclose(draws.std(axis=0), [0.4, 0.3, 0.2], rtol=0.05)

    def test_block_independence(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Normal(0.5, 0.5),),
                         field=FieldPrior(n_modes=1, basis="test3",
                                          coeff_sds=(0.4,)))
        rng = np.random.default_rng(23)
        n = 10**5
        zs = np.empty(n)
        gs = np.empty(n)
        for i in range(n):
            u = sample_prior(spec, rng)
            zs[i], gs[i] = u.z[0], u.g[0]
        corr = np.corrcoef(zs, gs)[0, 1]
        assert abs(corr) < 3 / np.sqrt(n)


class TestLogDensity:
    def test_outside_uniform_support(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Uniform(0.0, 1.0),))
        assert log_prior_density(spec, np.array([1.5])) == -np.inf

    def test_normal_half_at_one_sd(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Normal(0.7, 0.2),))
        at_mean = log_prior_density(spec, np.array([0.7]))
        at_sd = log_prior_density(spec, np.array([0.9]))
        assert np.isclose(at_mean - at_sd, 0.5, rtol=0, atol=1e-14)

    def test_test2_point_inside(self):
        spec = PriorSpec(
            param_names=("h", "c1", "c2"),
            param_laws=(Uniform(0.5, 0.8), Uniform(-0.5, 0.5), Uniform(-0.5, 0.5)))
        lp = log_prior_density(spec, np.array([0.6, 0.2, -0.3]))
        assert np.isfinite(lp)

    def test_field_block_density(self):
        spec = test3_spec()
        lp0 = log_prior_density(spec, np.zeros(3))
        lp1 = log_prior_density(spec, np.array([0.4, 0.0, 0.0]))
        assert np.isclose(lp0 - lp1, 0.5)

    def test_uniform_density_integrates_to_one(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Uniform(0.25, 1.75),))
        xs = np.linspace(0.25, 1.75, 3001)
        vals = np.exp([log_prior_density(spec, np.array([x])) for x in xs])
        integral = np.trapezoid(vals, xs)
        assert np.isclose(integral, 1.0, rtol=1e-6)


class TestGrowthField:
    def test_baseline_only(self):
        g = build_grid(2, ((-1, 1), (-1, 1)), (10, 5))
        h = evaluate_growth_field(test3_spec(), np.zeros(3), g)
        assert np.all(h == 2.0)

    def test_pointwise_value(self):
        # h(0.5, 0) = 2 + g1 sin(pi/2) + g2 sin(0) + g3 cos(pi/2) cos(0)
        g = build_grid(2, ((-1, 1), (-1, 1)), (10, 5))
        xs, ys = g.cell_centers(0), g.cell_centers(1)
        i, j = 7, 2
        assert xs[i] == pytest.approx(0.5) and ys[j] == pytest.approx(0.0)
        h = evaluate_growth_field(test3_spec(), np.array([0.0811, 0.0507, 0.0152]), g)
        assert np.isclose(h[j, i], 2.0811, atol=1e-10)

    def test_scalar_mode_constant(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Normal(0.5, 0.5),))
        g = build_grid(2, ((-1, 1), (-1, 1)), (6, 6))
        h = evaluate_growth_field(spec, np.array([1.0]), g)
        assert np.all(h == 1.0)

    def test_linear_in_coefficients(self):
        g = build_grid(2, ((-1, 1), (-1, 1)), (12, 12))
        spec = test3_spec()
        rng = np.random.default_rng(2)
        g1, g2 = rng.normal(size=3), rng.normal(size=3)
        a, b = 1.7, -0.3
        h_combo = evaluate_growth_field(spec, a * g1 + b * g2, g)
        h_parts = (a * (evaluate_growth_field(spec, g1, g) - 2.0)
                   + b * (evaluate_growth_field(spec, g2, g) - 2.0) + 2.0)
        np.testing.assert_allclose(h_combo, h_parts, rtol=1e-12, atol=1e-14)


class TestSineBasis:
    def test_unit_square_first_eigenvalue(self):
        _, lambdas, _ = tensor_sine_basis(((0.0, 1.0), (0.0, 1.0)), 1, s=2.0)
        assert np.isclose(lambdas[0], 2 * np.pi**2)

    def test_gamma_rule(self):
        # 1D unit interval: lambda_1 = pi^2 -> gamma = 1/pi^2 at s=2
        _, lambdas, gammas = tensor_sine_basis(((0.0, 1.0),), 2, s=2.0)
        assert np.isclose(lambdas[0], np.pi**2)
        assert np.isclose(gammas[0], 1 / np.pi**2)
        # lambda = 2 pi^2 -> gamma = 1/(2 pi^2)
        assert np.isclose((2 * np.pi**2) ** (-1.0), 1 / (2 * np.pi**2))
        _, lam2d, gam2d = tensor_sine_basis(((0.0, 1.0), (0.0, 1.0)), 1, s=2.0)
        assert np.isclose(gam2d[0], 1 / (2 * np.pi**2))

    def test_gammas_non_increasing(self):
        _, _, gammas = tensor_sine_basis(((-1.0, 1.0), (-1.0, 1.0)), 8, s=2.5)
        assert np.all(np.diff(gammas) <= 1e-15)

    def test_test3_builtin_gammas(self):
        fp = FieldPrior(n_modes=3, basis="test3")
        gam = basis_gammas(fp, ((-1.0, 1.0), (-1.0, 1.0)))
        np.testing.assert_allclose(gam, [1 / np.pi**2, 1 / np.pi**2,
                                         1 / (2 * np.pi**2)])

    def test_sine_eval_amplitude_normalized(self):
        g = build_grid(1, ((0.0, 1.0),), (101,))
        fp = FieldPrior(n_modes=2, basis="sine", s=2.0)
        phi = basis_eval(fp, g)
        assert phi.shape == (2, 101)
        assert phi.max() <= 1.0 + 1e-12
        assert phi[0].max() > 0.999  # mode 1 peaks near 1 on a fine grid

    def test_spectral_decay_needs_s_above_one(self):
        with pytest.raises(PriorError):
            tensor_sine_basis(((0.0, 1.0),), 2, s=1.0)


class TestValidation:
    def test_vector_roundtrip(self):
        spec = PriorSpec(param_names=("h",), param_laws=(Normal(0.5, 0.5),),
                         field=FieldPrior(n_modes=2, basis="test3",
                                          coeff_sds=(0.4, 0.3)))
        vec = np.array([1.0, 0.1, -0.2])
        u = ModelParams.from_vector(spec, vec)
        assert np.array_equal(u.z, [1.0]) and np.array_equal(u.g, [0.1, -0.2])
        assert np.array_equal(u.to_vector(), vec)
        assert spec.coord_names == ("h", "g1", "g2")

    def test_rejects_bad_specs(self):
        with pytest.raises(PriorError):
            Uniform(1.0, 1.0)
        with pytest.raises(PriorError):
            Normal(0.0, 0.0)
        with pytest.raises(PriorError):
            PriorSpec(param_names=(), param_laws=())
        with pytest.raises(PriorError):
            FieldPrior(n_modes=4, basis="test3")
        with pytest.raises(PriorError):
            FieldPrior(n_modes=2, basis="test3", coeff_sds=(0.4,))
