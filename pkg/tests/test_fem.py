"""P1 finite element meshes, assembly, projections, and norms."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracwave.fem import (
    ScalarField,
    assemble,
    build_mesh,
    h1_seminorm_error_against,
    interpolate,
    inverse_constant,
    l2_error_against,
    l2_norm,
    l2_projection,
    load_vector,
    max_generalized_eigenvalue,
    norms,
    ritz_projection,
)


def sin_field():
    return ScalarField(
        value=lambda x: np.sin(np.pi * x[:, 0]),
        gradient=lambda x: (np.pi * np.cos(np.pi * x[:, 0]))[:, None],
    )


class TestBuildMesh:
    def test_interval_counts(self):
        mesh = build_mesh(1, (0.0, 1.0), 4)
        assert len(mesh.nodes) == 5
        assert mesh.num_interior == 3
        assert mesh.h == pytest.approx(0.25)

    def test_square_counts(self):
        mesh = build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), 4)
        assert len(mesh.nodes) == 25
        assert mesh.num_interior == 9
        assert len(mesh.elements) == 32

    def test_element_measures_sum_to_domain(self):
        mesh = build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), 6)
        assert mesh.element_measures().sum() == pytest.approx(4.0, rel=1e-12)
        assert np.all(mesh.element_measures() > 0.0)
        mesh1 = build_mesh(1, (0.0, 1.0), 7)
        assert mesh1.element_measures().sum() == pytest.approx(1.0, rel=1e-12)

    def test_boundary_nodes_have_no_dof(self):
        mesh = build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), 4)
        on_boundary = (np.abs(np.abs(mesh.nodes[:, 0]) - 1.0) < 1e-14) | (
            np.abs(np.abs(mesh.nodes[:, 1]) - 1.0) < 1e-14)
        assert np.all(mesh.interior_index[on_boundary] == -1)
        assert np.all(mesh.interior_index[~on_boundary] >= 0)

    def test_degenerate_domains_rejected(self):
        with pytest.raises(ValueError):
            build_mesh(1, (1.0, 1.0), 4)
        with pytest.raises(ValueError):
            build_mesh(2, ((0.0, 1.0), (1.0, 1.0)), 4)
        with pytest.raises(ValueError):
            build_mesh(1, (0.0, 1.0), 1)


class TestAssembly:
    def test_interval_closed_forms(self):
        mesh = build_mesh(1, (0.0, 1.0), 4)
        system = assemble(mesh)
        h = 0.25
        K = system.K.toarray()
        M = system.M.toarray()
        assert K == pytest.approx(
            (1.0 / h) * (2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)))
        assert M == pytest.approx(
            (h / 6.0) * (4 * np.eye(3) + np.eye(3, k=1) + np.eye(3, k=-1)))

    def test_symmetry_and_definiteness(self):
        system = assemble(build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), 8))
        M = system.M.toarray()
        K = system.K.toarray()
        assert np.max(np.abs(M - M.T)) < 1e-14 * np.max(np.abs(M))
        assert np.max(np.abs(K - K.T)) < 1e-14 * np.max(np.abs(K))
        rng = np.random.default_rng(11)
        for _ in range(5):
            x = rng.standard_normal(system.ndof)
            assert x @ (M @ x) > 0.0
            assert x @ (K @ x) > 0.0

    def test_full_stiffness_annihilates_constants(self):
        system = assemble(build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), 6))
        ones = np.ones(system.K_full.shape[0])
        assert np.max(np.abs(system.K_full @ ones)) < 1e-12

    def test_mass_row_sums_are_hat_integrals(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 8))
        row_sums = np.asarray(system.M_full.sum(axis=1)).ravel()
        h = 1.0 / 8
        expected = np.full(9, h)
        expected[[0, -1]] = h / 2.0
        assert row_sums == pytest.approx(expected, abs=1e-14)

    def test_smallest_eigenvalue_approaches_pi_squared(self):
        import scipy.linalg as sla

        errs = []
        for n in (16, 32):
            system = assemble(build_mesh(1, (0.0, 1.0), n))
            vals = sla.eigh(system.K.toarray(), system.M.toarray(),
                            eigvals_only=True)
            errs.append(abs(vals[0] - math.pi**2))
        assert errs[0] < 0.05 * math.pi**2
        assert errs[1] < errs[0] / 3.0  # roughly O(h^2)


class TestLoadVector:
    def test_zero_function(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 8))
        assert np.all(load_vector(system, lambda x: np.zeros(len(x))) == 0.0)

    def test_unit_function_gives_h(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 8))
        lv = load_vector(system, lambda x: np.ones(len(x)))
        assert lv == pytest.approx(np.full(7, 1.0 / 8), rel=1e-13)

    def test_sine_load_vs_adaptive_quadrature(self):
        n = 8
        system = assemble(build_mesh(1, (0.0, 1.0), n))
        lv = load_vector(system, lambda x: np.sin(np.pi * x[:, 0]), quad_order=6)
        h = 1.0 / n
        for dof, i in enumerate(range(1, n)):
            xi = i * h

            def hat(s):
                return max(0.0, 1.0 - abs(s - xi) / h)

            ref = quad(lambda s: math.sin(math.pi * s) * hat(s),
                       xi - h, xi + h, epsabs=1e-12)[0]
            assert lv[dof] == pytest.approx(ref, abs=1e-10)


class TestProjections:
    def test_ritz_idempotent_on_nodal_input(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 8))
        x = np.arange(7, dtype=float)
        assert np.all(ritz_projection(system, x) == x)

    def test_ritz_l2_rate(self):
        errs = []
        for n in (8, 16, 32):
            system = assemble(build_mesh(1, (0.0, 1.0), n))
            x = ritz_projection(system, sin_field(), quad_order=6)
            errs.append(l2_error_against(system, x, sin_field()))
        order = float(-np.polyfit(range(3), np.log2(errs), 1)[0])
        assert order == pytest.approx(2.0, abs=0.1)

    def test_ritz_h1_rate(self):
        bubble = ScalarField(
            value=lambda x: x[:, 0] * (1.0 - x[:, 0]),
            gradient=lambda x: (1.0 - 2.0 * x[:, 0])[:, None],
        )
        errs = []
        for n in (8, 16, 32):
            system = assemble(build_mesh(1, (0.0, 1.0), n))
            x = ritz_projection(system, bubble, quad_order=6)
            errs.append(h1_seminorm_error_against(system, x, bubble))
        order = float(-np.polyfit(range(3), np.log2(errs), 1)[0])
        assert order == pytest.approx(1.0, abs=0.1)

    def test_ritz_galerkin_residual(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 16))
        from fracwave.fem import _gradient_load

        g = _gradient_load(system, sin_field(), quad_order=6)
        x = ritz_projection(system, sin_field(), quad_order=6)
        residual = np.max(np.abs(system.K @ x - g))
        assert residual <= 1e-10 * np.max(np.abs(g))

    def test_l2_projection_recovers_grid_function(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 16))
        y = np.sin(2.5 * system.mesh.nodes[system.mesh.interior][:, 0])
        assert l2_projection(system, system.M @ y) == pytest.approx(y, abs=1e-12)

    def test_l2_projection_zero(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 8))
        assert np.all(l2_projection(system, np.zeros(7)) == 0.0)


class TestNorms:
    def test_zero_vector(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 8))
        assert norms(system, np.zeros(7)) == (0.0, 0.0)

    def test_sine_interpolant_l2_limit(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 128))
        x = interpolate(system, sin_field())
        l2, h1 = norms(system, x)
        assert l2 == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-3)
        assert h1 >= l2
        assert l2_norm(system, x) == pytest.approx(l2)


class TestInverseConstant:
    def test_interval_limit_sqrt_twelve(self):
        system = assemble(build_mesh(1, (0.0, 1.0), 64))
        assert inverse_constant(system) == pytest.approx(math.sqrt(12.0), rel=5e-3)

    def test_refinement_stability(self):
        values = [
            inverse_constant(assemble(build_mesh(1, (0.0, 1.0), n)))
            for n in (32, 128)
        ]
        assert abs(values[1] - values[0]) / values[0] < 0.01

    def test_2d_mesh_stability(self):
        values = [
            inverse_constant(assemble(build_mesh(2, ((-1.0, 1.0), (-1.0, 1.0)), n)))
            for n in (8, 16)
        ]
        assert abs(values[1] - values[0]) / values[0] < 0.05

    def test_matches_dense_eigenvalue(self):
        import scipy.linalg as sla

        system = assemble(build_mesh(1, (0.0, 1.0), 24))
        lam = max_generalized_eigenvalue(system)
        dense = sla.eigh(system.K.toarray(), system.M.toarray(),
                         eigvals_only=True)[-1]
        assert lam == pytest.approx(dense, rel=1e-8)
