"""Finite-volume residual: reconstruction, HLL flux, diffuse walls."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermite_nmg import (
    BasisParams,
    CellField,
    CollisionModel,
    GasParams,
    Grid2D,
    WallSpec,
    grad_normalize,
    maxwellian_rep,
    numerical_flux,
    project,
    reconstruct,
    residual,
    resting_walls,
    wall_flux,
)
from hermite_nmg.spatial import InterfaceStates, Discretization, cell_residual, field_residual

from conftest import random_grad_rep
from oracles import diffuse_wall_flux_moments, expansion_moments, flux_moments, relative_error

SHAKHOV = CollisionModel("Shakhov")


def random_field(rng, grid, order, amp=0.1):
    f = CellField.uniform(grid, order, 1.0, (0, 0, 0), 1.0)
    for i in range(grid.nx):
        for j in range(grid.ny):
            rep = random_grad_rep(rng, order, scale=0.05, rho=1 + amp * rng.uniform(-1, 1),
                                  u=amp * rng.uniform(-1, 1, 3) * np.array([1, 1, 0]), theta=1 + amp * rng.uniform(-1, 1))
            f.set_cell(i, j, rep)
    return f


class TestGrid:
    def test_uniform(self):
        g = Grid2D.uniform(4, 8, 2.0, 1.0)
        assert g.nx == 4 and g.ny == 8
        assert g.lx == pytest.approx(2.0) and g.ly == pytest.approx(1.0)
        assert np.allclose(g.xc, [0.25, 0.75, 1.25, 1.75])

    def test_nonuniform_and_coarsen(self):
        g = Grid2D(np.array([0.1, 0.3, 0.2, 0.4]), np.array([0.5, 0.5]))
        c = g.coarsen()
        assert np.allclose(c.dx, [0.4, 0.6]) and np.allclose(c.dy, [1.0])
        assert c.lx == pytest.approx(g.lx)

    def test_odd_coarsen_rejected(self):
        with pytest.raises(ValueError):
            Grid2D.uniform(3, 4).coarsen()

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            Grid2D(np.array([0.1, -0.1]), np.array([1.0]))


class TestReconstruct:
    def test_uniform_field(self):
        f = CellField.uniform(Grid2D.uniform(6, 5), 3, 1.2, (0.1, 0, 0), 0.9)
        faces = reconstruct(f, 2)
        for arr, ref in ((faces.x_left[0], f.coeffs[0, 0]), (faces.y_right[0], f.coeffs[0, 0])):
            assert np.all(arr == ref)
        assert np.all(faces.x_left[2] == 0.9) and not faces.fallback

    def test_linear_temperature_is_exact(self):
        g = Grid2D.uniform(8, 3)
        f = CellField.uniform(g, 3, 1.0, (0, 0, 0), 1.0)
        f.spread[:] = (1 + 0.1 * g.xc)[:, None]
        faces = reconstruct(f, 2)
        i = 3  # interior cell; its right face is x-face i + 1
        assert faces.x_face(i + 1, 1).left.params.spread == pytest.approx(1 + 0.1 * (g.xc[i] + g.dx[i] / 2), abs=1e-15)

    def test_first_order_is_zero_slope(self, rng):
        f = random_field(rng, Grid2D.uniform(5, 4), 3)
        faces = reconstruct(f, 1)
        st_ = faces.x_face(2, 1)
        assert np.array_equal(st_.left.coeffs, f.coeffs[1, 1]) and np.array_equal(st_.right.coeffs, f.coeffs[2, 1])

    def test_wall_adjacent_zero_normal_slope(self):
        g = Grid2D.uniform(6, 6)
        f = CellField.uniform(g, 3, 1.0, (0, 0, 0), 1.0)
        f.spread[:] = (1 + 0.1 * g.xc)[:, None]
        faces = reconstruct(f, 2)
        assert faces.x_face(1, 0).left.params.spread == f.spread[0, 0]

    def test_fallback_on_negative_face_temperature(self):
        g = Grid2D.uniform(6, 3)
        f = CellField.uniform(g, 3, 1.0, (0, 0, 0), 1.0)
        f.spread[:, :] = np.array([1.0, 1.0, 2.0, 0.1, 1.0, 1.0])[:, None]
        faces = reconstruct(f, 2)
        assert ("x", 4, 0) in faces.fallback
        assert faces.x_face(4, 0).left.params.spread == pytest.approx(0.1)

    @pytest.mark.parametrize("order,rate", [(1, 1.0), (2, 2.0)])
    def test_convergence_rate(self, order, rate):
        errs = []
        sizes = [16, 32, 64, 128]
        for n in sizes:
            g = Grid2D.uniform(n, 2)
            f = CellField.uniform(g, 3, 1.0, (0, 0, 0), 1.0)
            f.spread[:] = (1 + 0.3 * np.sin(2 * np.pi * g.xc))[:, None]
            faces = reconstruct(f, order)
            x_face = np.cumsum(g.dx)[:-1]
            exact = 1 + 0.3 * np.sin(2 * np.pi * x_face)
            left = faces.x_left[2][:, 0]
            errs.append(np.max(np.abs(left - exact)[1:-1]))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(rates - rate) <= 0.3), rates


class TestNumericalFlux:
    def test_resting_maxwellian_mass_flux(self):
        m = maxwellian_rep(1.3, (0, 0, 0), 0.8, 4)
        for axis in ("x", "y"):
            out = numerical_flux(InterfaceStates(m, m), axis, m.params)
            assert abs(out[0]) < 1e-15

    @pytest.mark.parametrize("order", [3, 5])
    @pytest.mark.parametrize("axis", [0, 1])
    def test_consistency(self, rng, order, axis):
        for _ in range(3):
            rep = random_grad_rep(rng, order, scale=0.1)
            out = numerical_flux(InterfaceStates(rep, rep), axis, rep.params)
            got = expansion_moments(out, order, rep.params.mean, rep.params.spread, order)
            assert relative_error(got, flux_moments(rep, axis, order)) < 1e-9

    def test_same_transfer_in_both_bases(self, rng):
        a = random_grad_rep(rng, 4, scale=0.1)
        b = random_grad_rep(rng, 4, scale=0.1)
        fa = numerical_flux(InterfaceStates(a, b), "x", a.params)
        fb = numerical_flux(InterfaceStates(a, b), "x", b.params)
        ma = expansion_moments(fa, 4, a.params.mean, a.params.spread, 4)
        mb = expansion_moments(fb, 4, b.params.mean, b.params.spread, 4)
        assert relative_error(ma, mb) < 1e-10

    def test_supersonic_upwinding(self):
        left = maxwellian_rep(1.0, (8.0, 0, 0), 1.0, 3)
        right = maxwellian_rep(2.0, (8.0, 0, 0), 1.5, 3)
        other = maxwellian_rep(2.0, (8.0, 0, 0), 1.5, 3)
        other.coeffs[other.table.index(3, 0, 0)] = 0.4
        other.coeffs[other.table.index(1, 1, 0)] = -0.2
        out = numerical_flux(InterfaceStates(left, right), "x", left.params)
        alt = numerical_flux(InterfaceStates(left, other), "x", left.params)
        assert np.array_equal(out, alt)


class TestWallFlux:
    def test_equilibrium_wall_carries_pressure_only(self):
        m = maxwellian_rep(1.1, (0, 0, 0), 0.9, 5)
        for side in ("left", "right", "bottom", "top"):
            w = WallSpec(side, 0.0, 0.9)
            out = wall_flux(m, w)
            expect = np.zeros_like(out)
            e_n = (1, 0, 0) if w.axis == 0 else (0, 1, 0)
            expect[m.table.index(*e_n)] = 1.1 * 0.9
            assert np.max(np.abs(out - expect)) < 1e-12

    def test_single_cell_equilibrium(self):
        f = CellField.uniform(Grid2D.uniform(1, 1), 4, 1.0, (0, 0, 0), 1.3)
        r = residual(f, resting_walls(1.3), SHAKHOV, GasParams(0.1))
        assert np.max(np.abs(r)) < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(
        st.integers(0, 3),
        st.floats(-0.5, 0.5),
        st.floats(0.5, 2.0),
        st.integers(0, 2**31 - 1),
    )
    def test_zero_mass_flux(self, side, uw, thw, seed):
        rep = random_grad_rep(np.random.default_rng(seed), 4, scale=0.1)
        out = wall_flux(rep, WallSpec(("left", "right", "bottom", "top")[side], uw, thw))
        assert out[0] == 0.0

    @pytest.mark.parametrize("side", ["left", "right", "bottom", "top"])
    def test_half_space_oracle(self, rng, side):
        w = WallSpec(side, 0.3, 1.2)
        for _ in range(2):
            rep = random_grad_rep(rng, 4, scale=0.1)
            out = wall_flux(rep, w)
            got = expansion_moments(out, 4, rep.params.mean, rep.params.spread, 4)
            want = diffuse_wall_flux_moments(rep, w.axis, w.outward, w.velocity_vector(), w.wall_theta, 4)
            assert relative_error(got, want) < 1e-9

    def test_moving_lid_drags_gas(self):
        inside = maxwellian_rep(1.0, (0, 0, 0), 1.0, 4)
        out = wall_flux(inside, WallSpec("top", 0.2, 1.0))
        # flux along +y of x-momentum is negative: x-momentum enters from the lid
        assert out[inside.table.index(1, 0, 0)] < 0
        want = diffuse_wall_flux_moments(inside, 1, 1, np.array([0.2, 0, 0]), 1.0, 1)
        assert want[(1, 0, 0)] < 0


class TestResidual:
    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("model", ["BGK", "ES-BGK", "Shakhov"])
    def test_equilibrium_root(self, order, model):
        f = CellField.uniform(Grid2D.uniform(6, 5, 1.0, 0.8), 5, 1.4, (0, 0, 0), 0.7)
        r = residual(f, resting_walls(0.7), CollisionModel(model), GasParams(0.1), order)
        assert np.max(np.abs(r)) < 1e-12

    @pytest.mark.parametrize("order", [1, 2])
    def test_free_stream_interior(self, order):
        f = CellField.uniform(Grid2D.uniform(8, 8), 4, 1.0, (0.3, -0.2, 0), 1.0)
        r = residual(f, resting_walls(1.0), SHAKHOV, GasParams(0.1), order)
        assert np.max(np.abs(r[2:-2, 2:-2])) < 1e-12

    @pytest.mark.parametrize("order", [1, 2])
    def test_mass_telescoping(self, rng, order):
        g = Grid2D(rng.uniform(0.5, 1.5, 7), rng.uniform(0.5, 1.5, 6))
        f = random_field(rng, g, 4)
        walls = [WallSpec("left", 0.1, 1.1), WallSpec("right", -0.2, 0.9), WallSpec("bottom", 0, 1.3), WallSpec("top", 0.3, 1.0)]
        r = residual(f, walls, SHAKHOV, GasParams(0.1), order)
        total = np.sum(r[..., 0] * g.area)
        assert abs(total) <= 1e-12 * np.sum(np.abs(r[..., 0]) * g.area)

    def test_local_matches_global(self, rng):
        g = Grid2D.uniform(5, 4)
        f = random_field(rng, g, 3)
        walls = [WallSpec("left", 0, 1), WallSpec("right", 0, 1), WallSpec("bottom", 0, 1), WallSpec("top", 0.3, 1)]
        disc = Discretization(walls, SHAKHOV, GasParams(0.2), 2)
        full = field_residual(f, disc)
        xc, yc, dx, dy, wa, order, cpar, cb, tab = disc.kernel_args(g, 3)
        out = np.empty(f.coeffs.shape[2])
        for i in range(g.nx):
            for j in range(g.ny):
                cell_residual(f.coeffs, f.mean, f.spread, f.coeffs, f.mean, f.spread, 0, g.nx, i, j,
                              order, xc, yc, dx, dy, wa, cpar, cb, tab, out)
                assert np.allclose(out, full[i, j], rtol=0, atol=1e-12)

    def test_residual_in_cell_basis(self, rng):
        # R's conserved moments do not depend on which basis they are stated in
        g = Grid2D.uniform(4, 4)
        f = random_field(rng, g, 4)
        r = residual(f, resting_walls(1.0), SHAKHOV, GasParams(0.1))
        rep = f.cell(1, 2)
        moved = project(type(rep)(4, rep.params, r[1, 2].copy()), BasisParams(rep.params.mean + 0.1, 1.2))
        a = expansion_moments(r[1, 2], 4, rep.params.mean, rep.params.spread, 2)
        b = expansion_moments(moved.coeffs, 4, moved.params.mean, moved.params.spread, 2)
        assert relative_error(a, b) < 1e-12


def test_grad_normalize_reexport():
    assert grad_normalize is not None
