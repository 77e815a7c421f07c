"""Constrained geometric flows of closed planar curves by a dual-SAV parametric FEM."""

from .assembly import (AssembledStep, apply_stiffness, assemble_mass_stiffness,
                       assemble_normal_metric, assemble_stabilizers, assemble_step,
                       constraint_loads, geometric_energy, geometric_force,
                       mesh_energy, mesh_force)
from .config import FlowConfig
from .diagnostics import (GeometryBaseline, StepDiagnostics, run_summary,
                          step_diagnostics)
from .errors import (CurveFlowError, DegenerateEdge, DegenerateUpdate,
                     DissipationViolation, FoldedVertex, InvalidOverride,
                     InvalidRunSpec, MismatchedSweep, NewtonDivergence,
                     NotPositiveDefinite, OrientationError, SingularBorderedSystem,
                     SingularJacobian, UnknownCurveKind, ZeroGeometricSav)
from .flows import (FlowPreset, equalize_edge_lengths, exact_circle_radius,
                    make_initial_curve, preset, preset_from_dict)
from .geometry import (FrozenFrame, PolygonalCurve, area_gradient, build_frame,
                       length_gradient, polygon_area, polygon_length, rotate_quarter)
from .linsolve import (SpdFactor, ZeroMeanContext, ZeroMeanResponseSolver,
                       completed_stiffness, dual_zero_mean_project, solve_spd,
                       solve_zero_mean_response)
from .stepper import (ReducedUnknowns, ResponseSet, SavState, StepReport, advance,
                      compute_responses, constraint_baseline, constraint_values,
                      initial_sav_state, intermediate_curve, mesh_sav_update,
                      newton_solve, reduced_jacobian, reduced_residual,
                      synthesize_normal)

__version__ = "0.1.0"
