"""Frozen matrices and load vectors for one time step on a known curve.

Uses mass lumping throughout: the discrete L2 inner product is the diagonal
lumped mass matrix, which keeps the normal metric diagonal and makes the
nodal curvature exact on regular polygons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FlowConfig
from .geometry import (FrozenFrame, PolygonalCurve, area_gradient,
                       length_gradient, polygon_length)
from .linsolve import ZeroMeanContext


def apply_stiffness(edge_lengths: np.ndarray, values: np.ndarray) -> np.ndarray:
    """(K u)_j = (u_j - u_{j-1})/l_{j-1} + (u_j - u_{j+1})/l_j without forming K."""
    inv = 1.0 / edge_lengths
    inv_prev = np.roll(inv, 1)
    return (values - np.roll(values, 1)) * inv_prev + (values - np.roll(values, -1)) * inv


def _stiffness_matrix(edge_lengths: np.ndarray) -> np.ndarray:
    n = edge_lengths.size
    inv = 1.0 / edge_lengths
    inv_prev = np.roll(inv, 1)
    out = np.zeros((n, n))
    idx = np.arange(n)
    # The three bands target distinct cells for every closed polygon (n >= 3).
    out[idx, idx] = inv_prev + inv
    out[idx, (idx + 1) % n] = -inv
    out[(idx + 1) % n, idx] = -inv
    return out


def assemble_mass_stiffness(frame: FrozenFrame):
    """Lumped mass matrix and periodic piecewise-linear stiffness matrix."""
    return np.diag(frame.lumped_masses), _stiffness_matrix(frame.edge_lengths)


def stiffness_squared_over_mass(frame: FrozenFrame) -> np.ndarray:
    """Dense K M_L^{-1} K assembled from its periodic pentadiagonal stencil."""
    lengths = frame.edge_lengths
    masses = frame.lumped_masses
    n = lengths.size
    k = 1.0 / lengths
    k_prev = np.roll(k, 1)
    k_next = np.roll(k, -1)
    m_prev = np.roll(masses, 1)
    m_next = np.roll(masses, -1)

    diag = k_prev**2 / m_prev + (k_prev + k) ** 2 / masses + k**2 / m_next
    off1 = -(k_prev + k) * k / masses - k * (k + k_next) / m_next
    off2 = k * k_next / m_next

    out = np.zeros((n, n))
    idx = np.arange(n)
    if n >= 5:
        out[idx, idx] = diag
        out[idx, (idx + 1) % n] = off1
        out[(idx + 1) % n, idx] = off1
        out[idx, (idx + 2) % n] = off2
        out[(idx + 2) % n, idx] = off2
    else:
        # Bands wrap onto each other for n < 5 and must accumulate.
        np.add.at(out, (idx, idx), diag)
        np.add.at(out, (idx, (idx + 1) % n), off1)
        np.add.at(out, ((idx + 1) % n, idx), off1)
        np.add.at(out, (idx, (idx + 2) % n), off2)
        np.add.at(out, ((idx + 2) % n, idx), off2)
    return out


def assemble_normal_metric(frame: FrozenFrame, cfg: FlowConfig):
    """Normal metric matrix: the lumped mass for l2, None for hminus1.

    The hminus1 metric is never formed here; response solves go through the
    zero-mean path in linsolve, which realizes M_L Ktilde^{-1} M_L on demand.
    """
    if cfg.normal_metric == "l2":
        return np.diag(frame.lumped_masses)
    return None


def _normal_stabilizer(frame: FrozenFrame, cfg: FlowConfig,
                       stiffness: np.ndarray) -> np.ndarray:
    if cfg.normal_stabilizer == "laplacian":
        return cfg.beta_nu2 * stiffness
    out = cfg.beta_nu4 * stiffness_squared_over_mass(frame)
    if cfg.normal_stabilizer == "hybrid":
        out += cfg.beta_nu2 * stiffness
    return out


def assemble_stabilizers(frame: FrozenFrame, cfg: FlowConfig, dt: float):
    """Stabilization matrices and the stabilized metrics M = A + dt D."""
    stiffness = _stiffness_matrix(frame.edge_lengths)
    normal_stab = _normal_stabilizer(frame, cfg, stiffness)
    tangential_stab = cfg.beta_tau * stiffness

    normal_metric = assemble_normal_metric(frame, cfg)
    tangential_metric = np.diag(frame.lumped_masses)
    stabilized_normal = None if normal_metric is None else normal_metric + dt * normal_stab
    stabilized_tangential = tangential_metric + dt * tangential_stab
    return normal_stab, tangential_stab, stabilized_normal, stabilized_tangential


def geometric_force(frame: FrozenFrame, curve: PolygonalCurve, cfg: FlowConfig) -> np.ndarray:
    """Integrated frozen normal driving force of the geometric energy.

    Length energy: the length gradient projected on frozen normals, which is
    exactly -m_j kappa_j.  Bending energy: weak second derivative of the
    curvature plus the lumped pointwise cubic term.
    """
    if cfg.energy == "length":
        return np.einsum("ij,ij->i", length_gradient(curve), frame.nodal_normals)
    kappa = frame.nodal_curvatures
    weak_second = apply_stiffness(frame.edge_lengths, kappa)
    cubic = 0.5 * frame.lumped_masses * kappa * (kappa**2 - cfg.c0**2)
    return -weak_second + cubic


def mesh_force(frame: FrozenFrame, curve: PolygonalCurve, cfg: FlowConfig) -> np.ndarray:
    """Mesh energy gradient projected on frozen tangents.

    The lagrangian reference weight yields the half length gradient, which is
    identically zero against the normalized-average nodal tangent.
    """
    if cfg.mesh_weight == "lagrangian":
        return 0.5 * np.einsum("ij,ij->i", length_gradient(curve), frame.nodal_tangents)
    n = frame.n_vertices
    v = curve.vertices
    displacement = 2.0 * v - np.roll(v, 1, axis=0) - np.roll(v, -1, axis=0)
    return n * np.einsum("ij,ij->i", displacement, frame.nodal_tangents)


def constraint_loads(frame: FrozenFrame, curve: PolygonalCurve, cfg: FlowConfig) -> np.ndarray:
    """Frozen constraint gradients projected on frozen normals, one row per constraint."""
    n = frame.n_vertices
    loads = np.zeros((cfg.n_constraints, n))
    for i, kind in enumerate(cfg.constraints):
        grad = area_gradient(curve) if kind == "area" else length_gradient(curve)
        loads[i] = np.einsum("ij,ij->i", grad, frame.nodal_normals)
    return loads


def geometric_energy(curve: PolygonalCurve, frame: FrozenFrame, cfg: FlowConfig) -> float:
    """Discrete geometric energy: total length, or the lumped bending energy."""
    if cfg.energy == "length":
        return polygon_length(curve)
    kappa = frame.nodal_curvatures
    return 0.5 * float(np.sum(frame.lumped_masses * (kappa - cfg.c0) ** 2))


def mesh_energy(curve: PolygonalCurve, frame: FrozenFrame, cfg: FlowConfig) -> float:
    """Discrete mesh energy with uniform reference spacing 1/N."""
    if cfg.mesh_weight == "lagrangian":
        return 0.5 * polygon_length(curve)
    n = frame.n_vertices
    return 0.5 * n * float(np.sum(frame.edge_lengths**2))


@dataclass(frozen=True)
class AssembledStep:
    """All frozen matrices, loads, and scalars of one time step.

    For the hminus1 metric, A_nu and M_nu are None: the response solves are
    delegated to the zero-mean path, which realizes the metric through the
    rank-one completion of the stiffness matrix.
    """

    mass: np.ndarray
    M_L: np.ndarray
    stiffness: np.ndarray
    A_nu: np.ndarray | None
    A_tau: np.ndarray
    D_nu: np.ndarray
    D_tau: np.ndarray
    M_nu: np.ndarray | None
    M_tau: np.ndarray
    F_g: np.ndarray
    F_m: np.ndarray
    G: np.ndarray
    S_g: float
    S_m: float
    E_geom: float
    E_mesh: float
    dt: float
    normal_metric: str
    constraints: tuple
    zero_mean: ZeroMeanContext | None

    @property
    def n_vertices(self) -> int:
        return self.mass.size

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def assemble_step(curve: PolygonalCurve, frame: FrozenFrame, cfg: FlowConfig) -> AssembledStep:
    """Assemble every frozen quantity the stepper needs for one time step."""
    dt = cfg.dt
    masses = frame.lumped_masses
    idx = np.arange(masses.size)
    mass_matrix = np.diag(masses)
    stiffness = _stiffness_matrix(frame.edge_lengths)
    normal_stab = _normal_stabilizer(frame, cfg, stiffness)
    tangential_stab = cfg.beta_tau * stiffness

    if cfg.normal_metric == "l2":
        normal_metric = mass_matrix
        stabilized_normal = dt * normal_stab
        stabilized_normal[idx, idx] += masses
        ctx = None
    else:
        normal_metric = None
        stabilized_normal = None
        ctx = ZeroMeanContext(masses)
    stabilized_tangential = dt * tangential_stab
    stabilized_tangential[idx, idx] += masses

    e_geom = geometric_energy(curve, frame, cfg)
    e_mesh = mesh_energy(curve, frame, cfg)

    return AssembledStep(
        mass=frame.lumped_masses,
        M_L=mass_matrix,
        stiffness=stiffness,
        A_nu=normal_metric,
        A_tau=mass_matrix,
        D_nu=normal_stab,
        D_tau=tangential_stab,
        M_nu=stabilized_normal,
        M_tau=stabilized_tangential,
        F_g=geometric_force(frame, curve, cfg),
        F_m=mesh_force(frame, curve, cfg),
        G=constraint_loads(frame, curve, cfg),
        S_g=float(np.sqrt(e_geom + cfg.c_g)),
        S_m=float(np.sqrt(e_mesh + cfg.c_m)),
        E_geom=e_geom,
        E_mesh=e_mesh,
        dt=dt,
        normal_metric=cfg.normal_metric,
        constraints=cfg.constraints,
        zero_mean=ctx,
    )
