"""One full time step: response solves, mesh SAV update, reduced Newton solve, node update.

The step follows the block reduction: after K+2 linear response solves, the
mesh auxiliary variable has a closed-form update whose denominator is never
below one, and the remaining unknowns (the geometric auxiliary variable and
the K Lagrange multipliers) satisfy a (K+1)-dimensional nonlinear system
solved by Newton's method.  Every accepted step is checked against both
modified-energy dissipation inequalities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import AssembledStep, assemble_step, geometric_energy, mesh_energy
from .config import FlowConfig
from .errors import (DegenerateEdge, DegenerateUpdate, DissipationViolation,
                     NewtonDivergence, OrientationError, SingularJacobian,
                     ZeroGeometricSav)
from .geometry import (FrozenFrame, PolygonalCurve, area_gradient, build_frame,
                       length_gradient, polygon_area, polygon_length)
from .linsolve import SpdFactor, ZeroMeanResponseSolver, dual_zero_mean_project

# Relative round-off budget for the per-step dissipation inequalities.
DISSIPATION_SLACK = 1e-10

# Newton safeguards: a full step may not shrink |r| below this fraction of
# |r_g^n| nor grow the residual by more than the blowup factor.
_R_FLOOR = 1e-12
_BLOWUP_FACTOR = 1e3
_MAX_HALVINGS = 30


@dataclass(frozen=True)
class SavState:
    """The two scalar auxiliary variables (square roots of shifted energies)."""

    r_g: float
    r_m: float


@dataclass(frozen=True)
class ResponseSet:
    """Solutions of the frozen linear response problems."""

    geometric: np.ndarray
    constraints: np.ndarray
    mesh: np.ndarray

    @property
    def count(self) -> int:
        return 2 + self.constraints.shape[0]


@dataclass(frozen=True)
class ReducedUnknowns:
    """The reduced unknowns (r, lambda_1..lambda_K)."""

    r: float
    lambdas: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(self.r**2 + float(np.sum(self.lambdas**2))))


@dataclass(frozen=True)
class StepReport:
    """Per-step record: Newton statistics, velocities, dissipation checks."""

    newton_iterations: int
    final_residual_norm: float
    normal_velocity: np.ndarray
    tangential_velocity: np.ndarray
    dissipation_check_g: bool
    dissipation_check_m: bool
    multipliers: np.ndarray
    response_solves: int
    mesh_denominator: float


def initial_sav_state(curve: PolygonalCurve, cfg: FlowConfig) -> SavState:
    """r_g = S_g(gamma0), r_m = S_m(gamma0)."""
    frame = build_frame(curve)
    r_g = np.sqrt(geometric_energy(curve, frame, cfg) + cfg.c_g)
    r_m = np.sqrt(mesh_energy(curve, frame, cfg) + cfg.c_m)
    return SavState(r_g=float(r_g), r_m=float(r_m))


def constraint_values(curve_or_vertices, constraints) -> np.ndarray:
    """Current values of the constrained functionals, in constraint order."""
    values = np.empty(len(constraints))
    for i, kind in enumerate(constraints):
        values[i] = polygon_area(curve_or_vertices) if kind == "area" \
            else polygon_length(curve_or_vertices)
    return values


def constraint_baseline(curve: PolygonalCurve, cfg: FlowConfig) -> np.ndarray:
    """Constraint reference values, taken on the initial curve of the run."""
    return constraint_values(curve, cfg.constraints)


class _L2NormalSolver:
    """Response solves for the diagonal lumped-mass normal metric."""

    def __init__(self, step: AssembledStep):
        self._factor = SpdFactor(step.M_nu)
        self._mass = step.mass

    def prepare_load(self, load):
        return load

    def solve(self, load):
        return self._factor.solve(load)

    def metric_quadratic(self, v) -> float:
        return float(np.dot(v * self._mass, v))


class _ZeroMeanNormalSolver:
    """Response solves for the nonlocal metric on the zero-mean subspace."""

    def __init__(self, step: AssembledStep):
        self._solver = ZeroMeanResponseSolver(step.stiffness, step.D_nu, step.dt,
                                              step.zero_mean)
        self._ctx = step.zero_mean

    def prepare_load(self, load):
        return dual_zero_mean_project(load, self._ctx)

    def solve(self, load):
        return self._solver.solve(load)

    def metric_quadratic(self, v) -> float:
        return self._solver.metric_quadratic(v)


def _normal_solver(step: AssembledStep):
    if step.normal_metric == "hminus1":
        return _ZeroMeanNormalSolver(step)
    return _L2NormalSolver(step)


def _compute_responses(step: AssembledStep):
    normal = _normal_solver(step)
    tangential = SpdFactor(step.M_tau)

    geometric = normal.solve(normal.prepare_load(-step.F_g))
    constraints = np.zeros_like(step.G)
    for i in range(step.n_constraints):
        constraints[i] = normal.solve(normal.prepare_load(-step.G[i]))
    mesh = tangential.solve(-step.F_m)
    return ResponseSet(geometric=geometric, constraints=constraints, mesh=mesh), normal


def compute_responses(step: AssembledStep, cfg: FlowConfig | None = None) -> ResponseSet:
    """Solve the K+1 normal response problems and the tangential one."""
    if cfg is not None and cfg.normal_metric != step.normal_metric:
        raise ValueError("config and assembled step disagree on the normal metric")
    responses, _ = _compute_responses(step)
    return responses


def _mesh_denominator(step: AssembledStep, mesh_response: np.ndarray, dt: float) -> float:
    work = float(np.dot(step.F_m, mesh_response))
    return 1.0 - dt * work / (2.0 * step.S_m**2)


def mesh_sav_update(r_m: float, step: AssembledStep, mesh_response: np.ndarray,
                    dt: float) -> float:
    """Closed-form mesh SAV update; F_m^T V_m <= 0 keeps the denominator >= 1."""
    return r_m / _mesh_denominator(step, mesh_response, dt)


def synthesize_normal(xi: ReducedUnknowns, responses: ResponseSet,
                      step: AssembledStep) -> np.ndarray:
    """V_nu(Xi) = (r/S_g) V_g + sum_i lambda_i V_i, linear in Xi."""
    v = (xi.r / step.S_g) * responses.geometric
    if xi.lambdas.size:
        v = v + xi.lambdas @ responses.constraints
    return v


def intermediate_curve(xi: ReducedUnknowns, responses: ResponseSet, step: AssembledStep,
                       frame: FrozenFrame, curve: PolygonalCurve,
                       tangential_velocity: np.ndarray, dt: float) -> PolygonalCurve:
    """Nodes moved by dt along frozen normals and tangents for a trial Xi."""
    v_nu = synthesize_normal(xi, responses, step)
    vertices = curve.vertices + dt * (v_nu[:, None] * frame.nodal_normals
                                      + tangential_velocity[:, None] * frame.nodal_tangents)
    try:
        return PolygonalCurve(vertices)
    except (DegenerateEdge, OrientationError, ValueError) as exc:
        raise DegenerateUpdate(f"node update left the admissible curve class: {exc}") from exc


def reduced_residual(xi: ReducedUnknowns, responses: ResponseSet, step: AssembledStep,
                     frame: FrozenFrame, curve: PolygonalCurve,
                     tangential_velocity: np.ndarray, dt: float, sav: SavState,
                     baseline: np.ndarray) -> np.ndarray:
    """Reduced residual (R_0, R_1..R_K).

    R_0 is the geometric SAV equation; R_i is the constraint mismatch of the
    intermediate curve against the run-initial values.
    """
    if xi.r == 0.0:
        raise ZeroGeometricSav("reduced residual evaluated at r = 0")
    v_nu = synthesize_normal(xi, responses, step)
    r0 = (xi.r - sav.r_g) / dt - float(np.dot(step.F_g, v_nu)) / (2.0 * step.S_g)
    if step.n_constraints:
        r0 -= float(np.dot(xi.lambdas, step.G @ v_nu)) / (2.0 * xi.r)
        trial = intermediate_curve(xi, responses, step, frame, curve,
                                   tangential_velocity, dt)
        mismatch = constraint_values(trial, step.constraints) - baseline
        return np.concatenate([[r0], mismatch])
    return np.array([r0])


@dataclass(frozen=True)
class _FrozenDots:
    """Frozen inner products shared by every Newton iteration of one step."""

    fg_vg: float
    fg_vc: np.ndarray
    g_vg: np.ndarray
    g_vc: np.ndarray


def _frozen_dots(responses: ResponseSet, step: AssembledStep) -> _FrozenDots:
    return _FrozenDots(
        fg_vg=float(np.dot(step.F_g, responses.geometric)),
        fg_vc=responses.constraints @ step.F_g,
        g_vg=step.G @ responses.geometric,
        g_vc=step.G @ responses.constraints.T,
    )


def _projected_constraint_gradients(trial_curve: PolygonalCurve, step: AssembledStep,
                                    frame: FrozenFrame) -> np.ndarray:
    """Constraint gradients on the intermediate curve dotted with frozen normals."""
    out = np.zeros((step.n_constraints, frame.n_vertices))
    for i, kind in enumerate(step.constraints):
        grad = area_gradient(trial_curve) if kind == "area" else length_gradient(trial_curve)
        out[i] = np.einsum("ij,ij->i", grad, frame.nodal_normals)
    return out


def _jacobian(xi: ReducedUnknowns, responses: ResponseSet, step: AssembledStep,
              frame: FrozenFrame, curve: PolygonalCurve,
              tangential_velocity: np.ndarray, dt: float,
              dots: _FrozenDots) -> np.ndarray:
    if xi.r == 0.0:
        raise ZeroGeometricSav("reduced Jacobian evaluated at r = 0")
    n_con = step.n_constraints
    s_g = step.S_g
    jac = np.zeros((n_con + 1, n_con + 1))
    jac[0, 0] = 1.0 / dt - dots.fg_vg / (2.0 * s_g**2)
    if n_con:
        v_nu = synthesize_normal(xi, responses, step)
        b = step.G @ v_nu
        lam = xi.lambdas
        jac[0, 0] += float(np.dot(lam, b)) / (2.0 * xi.r**2) \
            - float(np.dot(lam, dots.g_vg)) / (2.0 * xi.r * s_g)
        jac[0, 1:] = -dots.fg_vc / (2.0 * s_g) - b / (2.0 * xi.r) \
            - (lam @ dots.g_vc) / (2.0 * xi.r)
        trial = intermediate_curve(xi, responses, step, frame, curve,
                                   tangential_velocity, dt)
        projected = _projected_constraint_gradients(trial, step, frame)
        jac[1:, 0] = (dt / s_g) * (projected @ responses.geometric)
        jac[1:, 1:] = dt * (projected @ responses.constraints.T)
    return jac


def reduced_jacobian(xi: ReducedUnknowns, responses: ResponseSet, step: AssembledStep,
                     frame: FrozenFrame, curve: PolygonalCurve,
                     tangential_velocity: np.ndarray, dt: float) -> np.ndarray:
    """Jacobian of the reduced residual with respect to (r, lambda_1..lambda_K)."""
    return _jacobian(xi, responses, step, frame, curve, tangential_velocity, dt,
                     _frozen_dots(responses, step))


def _newton(step: AssembledStep, responses: ResponseSet, frame: FrozenFrame,
            curve: PolygonalCurve, tangential_velocity: np.ndarray, dt: float,
            sav: SavState, cfg: FlowConfig, baseline: np.ndarray,
            initial_lambdas: np.ndarray | None = None):
    lambdas0 = np.zeros(step.n_constraints) if initial_lambdas is None \
        else np.asarray(initial_lambdas, dtype=float).copy()
    xi = ReducedUnknowns(r=sav.r_g, lambdas=lambdas0)
    dots = _frozen_dots(responses, step)

    def residual(candidate):
        return reduced_residual(candidate, responses, step, frame, curve,
                                tangential_velocity, dt, sav, baseline)

    res = residual(xi)
    res_norm = float(np.linalg.norm(res))
    iterations = 0
    while res_norm > cfg.newton_tol:
        if iterations >= cfg.newton_max_iter:
            raise NewtonDivergence(
                f"Newton did not reach {cfg.newton_tol:.1e} within "
                f"{cfg.newton_max_iter} iterations (residual {res_norm:.3e})")
        jac = _jacobian(xi, responses, step, frame, curve, tangential_velocity,
                        dt, dots)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc

        # Halve the step rather than cross r = 0 or blow up the residual.
        alpha = 1.0
        for _ in range(_MAX_HALVINGS + 1):
            candidate = ReducedUnknowns(r=xi.r + alpha * delta[0],
                                        lambdas=xi.lambdas + alpha * delta[1:])
            if abs(candidate.r) < _R_FLOOR * abs(sav.r_g):
                alpha *= 0.5
                continue
            try:
                cand_res = residual(candidate)
            except DegenerateUpdate:
                alpha *= 0.5
                continue
            cand_norm = float(np.linalg.norm(cand_res))
            if cand_norm > _BLOWUP_FACTOR * max(res_norm, cfg.newton_tol):
                alpha *= 0.5
                continue
            break
        else:
            raise NewtonDivergence("step halving exhausted near r = 0 or on residual blowup")

        xi, res, res_norm = candidate, cand_res, cand_norm
        iterations += 1
        if float(np.linalg.norm(alpha * delta)) / (1.0 + xi.norm()) <= cfg.newton_tol:
            break
    return xi, iterations, res_norm


def newton_solve(step: AssembledStep, responses: ResponseSet, frame: FrozenFrame,
                 curve: PolygonalCurve, tangential_velocity: np.ndarray, dt: float,
                 sav: SavState, cfg: FlowConfig, baseline: np.ndarray,
                 initial_lambdas: np.ndarray | None = None):
    """Newton iteration on the reduced system from Xi0 = (r_g^n, 0, ..., 0).

    Returns the converged unknowns and the number of Newton updates.  Stops
    on the residual norm or on the relative increment, whichever first.
    """
    xi, iterations, _ = _newton(step, responses, frame, curve, tangential_velocity,
                                dt, sav, cfg, baseline, initial_lambdas)
    return xi, iterations


def advance(curve: PolygonalCurve, sav: SavState, cfg: FlowConfig,
            baseline: np.ndarray | None = None,
            previous_lambdas: np.ndarray | None = None):
    """Execute one full time step.

    `baseline` holds the run-initial constraint values; when omitted they are
    taken from `curve` itself (exact for the first step of a run).  Returns
    the updated curve, the updated SAV state, and a StepReport.  Raises
    DissipationViolation if either modified-energy inequality fails beyond
    round-off slack.
    """
    frame = build_frame(curve)
    step = assemble_step(curve, frame, cfg)
    responses, normal = _compute_responses(step)

    denominator = _mesh_denominator(step, responses.mesh, cfg.dt)
    r_m_new = sav.r_m / denominator
    tangential_velocity = (r_m_new / step.S_m) * responses.mesh

    if baseline is None:
        baseline = constraint_baseline(curve, cfg)
    warm = previous_lambdas if cfg.warm_start else None
    xi, iterations, residual_norm = _newton(step, responses, frame, curve,
                                            tangential_velocity, cfg.dt, sav, cfg,
                                            baseline, warm)

    normal_velocity = synthesize_normal(xi, responses, step)
    new_curve = intermediate_curve(xi, responses, step, frame, curve,
                                   tangential_velocity, cfg.dt)

    lhs_g = xi.r**2 - sav.r_g**2
    rhs_g = -cfg.dt * (normal.metric_quadratic(normal_velocity)
                       + cfg.dt * float(normal_velocity @ step.D_nu @ normal_velocity))
    ok_g = lhs_g <= rhs_g + DISSIPATION_SLACK * max(1.0, sav.r_g**2)

    lhs_m = r_m_new**2 - sav.r_m**2
    rhs_m = -cfg.dt * (float(np.dot(tangential_velocity * step.mass, tangential_velocity))
                       + cfg.dt * float(tangential_velocity @ step.D_tau
                                        @ tangential_velocity))
    ok_m = lhs_m <= rhs_m + DISSIPATION_SLACK * max(1.0, sav.r_m**2)

    if not (ok_g and ok_m):
        raise DissipationViolation(
            f"dissipation inequality failed (geometric ok={ok_g}, mesh ok={ok_m}; "
            f"geometric gap {lhs_g - rhs_g:.3e}, mesh gap {lhs_m - rhs_m:.3e})")

    report = StepReport(
        newton_iterations=iterations,
        final_residual_norm=residual_norm,
        normal_velocity=normal_velocity,
        tangential_velocity=tangential_velocity,
        dissipation_check_g=ok_g,
        dissipation_check_m=ok_m,
        multipliers=xi.lambdas.copy(),
        response_solves=responses.count,
        mesh_denominator=denominator,
    )
    return new_curve, SavState(r_g=xi.r, r_m=r_m_new), report
