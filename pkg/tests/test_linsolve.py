import numpy as np
import pytest

from curveflow import (NotPositiveDefinite, ZeroMeanContext, build_frame,
                       completed_stiffness, dual_zero_mean_project,
                       make_initial_curve, solve_spd, solve_zero_mean_response)
from curveflow.assembly import assemble_mass_stiffness, assemble_step
from curveflow.config import FlowConfig
from curveflow.linsolve import ZeroMeanResponseSolver


def octagon_operators():
    curve = make_initial_curve("circle", 8)
    frame = build_frame(curve)
    mass_matrix, stiffness = assemble_mass_stiffness(frame)
    return frame, mass_matrix, stiffness


class TestSolveSpd:
    def test_identity(self):
        rng = np.random.default_rng(0)
        b = rng.standard_normal(12)
        np.testing.assert_allclose(solve_spd(np.eye(12), b), b, atol=1e-14)

    def test_diagonal_mass_recovers_ones(self):
        m = np.linspace(0.5, 2.0, 9)
        x = solve_spd(np.diag(m), m)
        np.testing.assert_allclose(x, 1.0, atol=1e-14)

    def test_random_spd_recovery(self):
        rng = np.random.default_rng(42)
        a = rng.standard_normal((16, 16))
        matrix = a.T @ a + np.eye(16)
        x_true = rng.standard_normal(16)
        x = solve_spd(matrix, matrix @ x_true)
        assert np.linalg.norm(x - x_true) < 1e-9

    def test_residual_bound(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((20, 20))
        matrix = a.T @ a + np.eye(20)
        b = rng.standard_normal(20)
        x = solve_spd(matrix, b)
        assert np.max(np.abs(matrix @ x - b)) <= 1e-10 * (1 + np.max(np.abs(b)))

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            solve_spd(np.diag([1.0, -1.0, 1.0]), np.ones(3))


class TestDualZeroMeanProjection:
    def test_mass_vector_projects_to_zero(self):
        ctx = ZeroMeanContext(np.linspace(0.5, 1.5, 7))
        np.testing.assert_allclose(dual_zero_mean_project(ctx.mass, ctx), 0.0,
                                   atol=1e-15)

    def test_idempotent_on_zero_sum(self):
        rng = np.random.default_rng(5)
        ctx = ZeroMeanContext(rng.uniform(0.5, 2.0, 10))
        f = rng.standard_normal(10)
        f -= f.mean()
        np.testing.assert_allclose(dual_zero_mean_project(f, ctx), f, atol=1e-15)

    def test_unit_load_uniform_mass(self):
        n, h = 8, 0.25
        ctx = ZeroMeanContext(np.full(n, h))
        f = np.zeros(n)
        f[0] = 1.0
        projected = dual_zero_mean_project(f, ctx)
        assert abs(projected.sum()) < 1e-12 * np.max(np.abs(f))
        np.testing.assert_allclose(projected, f - 1.0 / n, atol=1e-15)

    def test_mass_must_be_positive(self):
        with pytest.raises(ValueError):
            ZeroMeanContext(np.zeros(4))


class TestZeroMeanResponse:
    def setup_method(self):
        self.frame, self.mass_matrix, self.stiffness = octagon_operators()
        self.mass = self.frame.lumped_masses
        self.ctx = ZeroMeanContext(self.mass)
        self.stabilizer = 10.0 * self.stiffness
        self.dt = 1e-4

    def oracle(self, load):
        """Pseudo-inverse metric restricted to a zero-mean basis (N-1 dims)."""
        n = self.mass.size
        metric = self.mass_matrix @ np.linalg.pinv(self.stiffness) @ self.mass_matrix
        operator = metric + self.dt * self.stabilizer
        basis = np.linalg.svd(self.mass[None, :])[2][1:].T  # columns span m-perp
        reduced = basis.T @ operator @ basis
        solution = basis @ np.linalg.solve(reduced, basis.T @ load)
        return solution

    def test_zero_load(self):
        v = solve_zero_mean_response(self.mass_matrix, self.stiffness,
                                     self.stabilizer, self.dt, np.zeros(8), self.ctx)
        np.testing.assert_allclose(v, 0.0, atol=1e-14)

    def test_matches_pseudo_inverse_oracle(self):
        load = np.array([1.0, -1.0] * 4)
        load = dual_zero_mean_project(load, self.ctx)
        v = solve_zero_mean_response(self.mass_matrix, self.stiffness,
                                     self.stabilizer, self.dt, load, self.ctx)
        np.testing.assert_allclose(v, self.oracle(load), atol=1e-8)

    def test_random_loads_stay_in_zero_mean_subspace(self):
        rng = np.random.default_rng(9)
        solver = ZeroMeanResponseSolver(self.stiffness, self.stabilizer, self.dt,
                                        self.ctx)
        for _ in range(50):
            load = dual_zero_mean_project(rng.standard_normal(8), self.ctx)
            v = solver.solve(load)
            assert abs(np.dot(self.mass, v)) < 1e-10

    def test_independent_of_completion_coefficient(self):
        rng = np.random.default_rng(12)
        load = dual_zero_mean_project(rng.standard_normal(8), self.ctx)
        solutions = []
        for c in (0.1, 1.0, 10.0):
            ctx = ZeroMeanContext(self.mass, completion_coefficient=c)
            solutions.append(solve_zero_mean_response(
                self.mass_matrix, self.stiffness, self.stabilizer, self.dt, load, ctx))
        np.testing.assert_allclose(solutions[0], solutions[1], atol=1e-8)
        np.testing.assert_allclose(solutions[0], solutions[2], atol=1e-8)

    def test_completed_stiffness_matches_pinv_up_to_constants(self):
        # For dual zero-mean data the completed inverse and the pseudo-inverse
        # agree once the kernel (constant) component is normalized away.
        rng = np.random.default_rng(3)
        for n in (8, 16):
            curve = make_initial_curve("circle", n)
            frame = build_frame(curve)
            _, stiffness = assemble_mass_stiffness(frame)
            ctx = ZeroMeanContext(frame.lumped_masses)
            y = rng.standard_normal(n)
            y -= y.mean()  # dual zero-mean: 1^T y = 0
            z_completed = np.linalg.solve(completed_stiffness(stiffness, ctx), y)
            z_pinv = np.linalg.pinv(stiffness) @ y

            def strip_constant(z, m=frame.lumped_masses):
                return z - (np.dot(m, z) / m.sum()) * np.ones_like(z)

            np.testing.assert_allclose(strip_constant(z_completed),
                                       strip_constant(z_pinv), atol=1e-9)
            # The completed solve lands in the mass-weighted zero-mean slice.
            assert abs(np.dot(frame.lumped_masses, z_completed)) < 1e-10

    def test_deterministic_solves(self):
        cfg = FlowConfig(dt=1e-5, normal_metric="hminus1", normal_stabilizer="hybrid",
                         beta_nu2=10.0, beta_nu4=10.0, beta_tau=10.0)
        curve = make_initial_curve("perturbed_circle", 32)
        frame = build_frame(curve)
        step = assemble_step(curve, frame, cfg)
        results = []
        for _ in range(2):
            solver = ZeroMeanResponseSolver(step.stiffness, step.D_nu, cfg.dt,
                                            step.zero_mean)
            load = dual_zero_mean_project(-step.F_g, step.zero_mean)
            results.append(solver.solve(load))
        assert np.array_equal(results[0], results[1])
