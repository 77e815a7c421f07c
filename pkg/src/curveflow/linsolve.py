"""Dense symmetric positive definite solves and the zero-mean response path.

The nonlocal normal metric is M_L Kdag M_L with Kdag the pseudo-inverse of the
periodic stiffness matrix.  Production solves replace Kdag by the inverse of
the rank-one completion Ktilde = K + c m m^T, which acts identically on dual
zero-mean data, and pin the lumped-mass zero-mean condition m^T v = 0 through
a bordered system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lu_factor, lu_solve

from .errors import NotPositiveDefinite, SingularBorderedSystem


@dataclass(frozen=True)
class ZeroMeanContext:
    """Lumped masses and the rank-one completion coefficient.

    The default coefficient 1/(1^T m) scales with the mesh so that Ktilde
    stays well conditioned across refinements.
    """

    mass: np.ndarray
    completion_coefficient: float = 0.0

    def __post_init__(self):
        m = np.ascontiguousarray(self.mass, dtype=float)
        total = float(np.sum(m))
        if not total > 0.0:
            raise ValueError("lumped masses must have positive sum")
        m.flags.writeable = False
        object.__setattr__(self, "mass", m)
        if self.completion_coefficient <= 0.0:
            object.__setattr__(self, "completion_coefficient", 1.0 / total)


class SpdFactor:
    """Cholesky factorization of a symmetric positive definite matrix.

    Immutable after construction; one factorization serves all response
    solves of a step.
    """

    def __init__(self, matrix: np.ndarray):
        try:
            self._factor = cho_factor(matrix, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, rhs, check_finite=False)


def solve_spd(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = b for symmetric positive definite M by dense Cholesky."""
    return SpdFactor(matrix).solve(rhs)


def dual_zero_mean_project(load: np.ndarray, ctx: ZeroMeanContext) -> np.ndarray:
    """Project a load onto the dual of the zero-mean subspace: F - (1^T F / 1^T m) m."""
    m = ctx.mass
    return load - (np.sum(load) / np.sum(m)) * m


def completed_stiffness(stiffness: np.ndarray, ctx: ZeroMeanContext) -> np.ndarray:
    """Rank-one completion Ktilde = K + c m m^T."""
    m = ctx.mass
    return stiffness + ctx.completion_coefficient * np.outer(m, m)


class ZeroMeanResponseSolver:
    """Response solves for the stabilized nonlocal normal metric.

    Solves (M_L Ktilde^{-1} M_L + dt D_nu) V = F on {v : m^T v = 0} through
    the bordered system [[M_nu, m], [m^T, 0]] [V; mu] = [F; 0].  Loads must
    already be dual zero-mean projected.
    """

    def __init__(self, stiffness, normal_stabilizer, dt, ctx: ZeroMeanContext):
        m = ctx.mass
        n = m.size
        ktilde = completed_stiffness(stiffness, ctx)
        self._ktilde = SpdFactor(ktilde)
        inv_times_mass = self._ktilde.solve(np.diag(m))
        metric = m[:, None] * inv_times_mass
        self.normal_metric = 0.5 * (metric + metric.T)
        self.stabilized_metric = self.normal_metric + dt * normal_stabilizer
        self.mass = m

        bordered = np.zeros((n + 1, n + 1))
        bordered[:n, :n] = self.stabilized_metric
        bordered[:n, n] = m
        bordered[n, :n] = m
        lu, piv = lu_factor(bordered, check_finite=False)
        diag = np.abs(np.diag(lu))
        if not np.all(np.isfinite(lu)) or diag.min() == 0.0:
            raise SingularBorderedSystem("bordered zero-mean system is singular")
        self._lu = (lu, piv)

    def solve(self, load: np.ndarray) -> np.ndarray:
        rhs = np.concatenate([load, [0.0]])
        solution = lu_solve(self._lu, rhs, check_finite=False)
        return solution[:-1]

    def metric_quadratic(self, v: np.ndarray) -> float:
        """v^T A_nu v with A_nu = M_L Ktilde^{-1} M_L."""
        return float(v @ self.normal_metric @ v)


def solve_zero_mean_response(lumped_mass, stiffness, normal_stabilizer, dt, load,
                             ctx: ZeroMeanContext | None = None) -> np.ndarray:
    """One zero-mean response solve; `load` must be dual-projected already."""
    if ctx is None:
        mass = np.asarray(lumped_mass, dtype=float)
        if mass.ndim == 2:
            mass = np.diag(mass)
        ctx = ZeroMeanContext(mass)
    solver = ZeroMeanResponseSolver(stiffness, normal_stabilizer, dt, ctx)
    return solver.solve(load)
