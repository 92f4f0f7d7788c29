import numpy as np
import pytest
from hypothesis import given, strategies as st

from tumorbayes.grids import (
    Grid,
    GridError,
    VelocityField,
    build_grid,
    face_average,
    initial_density_disk,
    initial_density_flower,
    level_set_radius,
    load_density,
    minmod_slope,
    save_density,
    total_mass,
)


class TestBuildGrid:
    def test_paper_domain_spacing(self):
        g = build_grid(2, ((-2.2, 2.2), (-2.2, 2.2)), (44, 44))
        assert g.dx == (0.1, 0.1)

    def test_unit_interval_centers(self):
        g = build_grid(1, ((0.0, 1.0),), (10,))
        assert np.allclose(g.cell_centers(0), np.arange(10) * 0.1 + 0.05)

    def test_cell_count(self):
        g = build_grid(2, ((-1.0, 1.0), (-1.0, 1.0)), (40, 40))
        assert g.dx == (0.05, 0.05)
        assert g.n_cells == 1600

    def test_rejects_small_n(self):
        with pytest.raises(GridError):
            build_grid(1, ((0.0, 1.0),), (3,))

    def test_rejects_degenerate_bounds(self):
        with pytest.raises(GridError):
            build_grid(1, ((1.0, 1.0),), (10,))

    def test_face_coords_interior(self):
        g = build_grid(1, ((0.0, 1.0),), (4,))
        assert np.allclose(g.face_coords(0), [0.0, 0.25, 0.5, 0.75, 1.0])


class TestInitialData:
    def setup_method(self):
        self.grid = build_grid(2, ((-2.2, 2.2), (-2.2, 2.2)), (44, 44))

    def _flower_value_at(self, rho, x, y):
        xs = self.grid.cell_centers(0)
        ys = self.grid.cell_centers(1)
        i = int(np.argmin(np.abs(xs - x)))
        j = int(np.argmin(np.abs(ys - y)))
        return rho[j, i]

    def test_flower_inside_point(self):
        # (0.3, 0): r - 0.5 - 0.5 sin 0 = -0.2 < 0
        rho = initial_density_flower(self.grid, (0.0, 0.0), 0.9)
        assert self._flower_value_at(rho, 0.3, 0.0) == 0.9

    def test_flower_outside_point(self):
        rho = initial_density_flower(self.grid, (0.0, 0.0), 0.9)
        assert self._flower_value_at(rho, 2.0, 0.0) == 0.0

    def test_flower_angle_branch_irrelevant(self):
        # sin(4(theta+pi)) = sin(4 theta): the principal-branch arctan(y/x)
        # and the full-plane angle give the same indicator.
        g = self.grid
        X, Y = g.meshgrid()
        r = np.hypot(X, Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            theta_principal = np.arctan(Y / X)
        theta_principal[np.isnan(theta_principal)] = 0.0
        inside_principal = r - 0.5 - 0.5 * np.sin(4 * theta_principal) < 0
        rho = initial_density_flower(g, (0.0, 0.0), 0.9)
        assert np.array_equal(rho > 0, inside_principal)

    def test_flower_center_cell_filled(self):
        g = build_grid(2, ((-2.0, 2.0), (-2.0, 2.0)), (5, 5))  # (0,0) is a cell center
        rho = initial_density_flower(g, (0.0, 0.0), 0.7)
        assert rho[2, 2] == 0.7

    def test_flower_center_outside_domain(self):
        with pytest.raises(GridError):
            initial_density_flower(self.grid, (5.0, 0.0), 0.9)

    def test_disk_values(self):
        g = build_grid(2, ((-1.0, 1.0), (-1.0, 1.0)), (40, 40))
        rho = initial_density_disk(g, 0.2, 0.9)
        xs = g.cell_centers(0)
        i0 = int(np.argmin(np.abs(xs)))
        assert rho[i0, i0] == 0.9          # near (0, 0)
        assert rho[-1, -1] == 0.0          # (1, 1) corner

    @pytest.mark.parametrize("n", [40, 80, 160])
    def test_disk_mass_within_perimeter_layer(self, n):
        # Cell-center sampling of the indicator: mass error is bounded by
        # one cell layer along the perimeter, at every refinement level.
        g = build_grid(2, ((-1.0, 1.0), (-1.0, 1.0)), (n, n))
        rho = initial_density_disk(g, 0.2, 0.9)
        analytic = 0.9 * np.pi * 0.2
        tol = 0.9 * 2.0 * np.pi * np.sqrt(0.2) * g.dx[0]
        assert abs(total_mass(g, rho) - analytic) < tol

    def test_outputs_two_valued(self):
        rho = initial_density_flower(self.grid, (0.1, -0.2), 0.9)
        assert set(np.unique(rho)) <= {0.0, 0.9}
        rho = initial_density_disk(build_grid(2, ((-1, 1), (-1, 1)), (20, 20)), 0.2, 0.5)
        assert set(np.unique(rho)) <= {0.0, 0.5}


class TestFaceAverage:
    def test_two_cells(self):
        assert face_average(np.array([1.0, 3.0]))[0] == 2.0

    def test_constant(self):
        f = face_average(np.full(7, 4.2))
        assert np.all(f == 4.2)

    def test_half_step(self):
        assert face_average(np.array([0.0, 0.9]))[0] == 0.45

    def test_exact_for_linear(self):
        x = np.linspace(0, 1, 11)
        rho = 3.0 * x + 1.0
        faces = 0.5 * (x[:-1] + x[1:])
        assert np.allclose(face_average(rho), 3.0 * faces + 1.0, atol=1e-15)

    def test_2d_axis(self):
        rho = np.arange(12.0).reshape(3, 4)
        fx = face_average(rho, axis=1)
        assert fx.shape == (3, 3)
        assert np.allclose(fx, 0.5 * (rho[:, :-1] + rho[:, 1:]))


class TestMinmod:
    def test_linear_exact(self):
        assert minmod_slope(0.0, 1.0, 2.0, 1.0) == 1.0

    def test_extremum_zero(self):
        assert minmod_slope(0.0, 1.0, 0.0, 1.0) == 0.0

    def test_takes_smaller(self):
        assert minmod_slope(0.0, 1.0, 3.0, 1.0) == 1.0

    @given(st.tuples(*[st.floats(-10, 10) for _ in range(3)]),
           st.floats(0.01, 2.0))
    def test_reconstruction_stays_in_stencil_range(self, vals, dx):
        left, center, right = vals
        s = minmod_slope(left, center, right, dx)
        lo, hi = min(vals), max(vals)
        eps = 1e-12 * max(1.0, abs(lo), abs(hi))
        assert lo - eps <= center - 0.5 * dx * s <= hi + eps
        assert lo - eps <= center + 0.5 * dx * s <= hi + eps


class TestFieldsAndIo:
    def test_velocity_zeros_shapes(self):
        g = build_grid(2, ((-1, 1), (-1, 1)), (6, 4))
        v = VelocityField.zeros(g)
        assert v.components[0].shape == (4, 7)
        assert v.components[1].shape == (5, 6)

    def test_snapshot_roundtrip(self, tmp_path):
        g = build_grid(2, ((-1.0, 1.0), (-0.5, 0.5)), (8, 4))
        rho = np.arange(32, dtype=float).reshape(4, 8) / 31.0
        path = str(tmp_path / "snap.txt")
        save_density(path, g, rho, time=0.25)
        g2, rho2, t = load_density(path)
        assert g2 == g
        assert t == 0.25
        assert np.allclose(rho2, rho, atol=1e-15)

    def test_snapshot_roundtrip_1d(self, tmp_path):
        g = build_grid(1, ((0.0, 2.0),), (5,))
        rho = np.array([0.0, 0.5, 1.0, 0.5, 0.0])
        path = str(tmp_path / "snap1d.txt")
        save_density(path, g, rho, time=1.0)
        g2, rho2, _ = load_density(path)
        assert g2 == g and np.allclose(rho2, rho)

    def test_level_set_radius(self):
        g = build_grid(2, ((-1, 1), (-1, 1)), (100, 100))
        rho = initial_density_disk(g, 0.25, 1.0)
        assert abs(level_set_radius(g, rho, 0.5) - 0.5) < 0.02
