"""Closed planar polygonal curves and their frozen per-step geometry.

A curve is an ordered, counterclockwise, periodic list of vertices x_j in R^2
(x_{N+1} = x_1 implied).  All per-step geometric quantities (edge lengths,
tangent/normal frames, lumped masses, nodal curvatures) are evaluated once on
the known curve and kept fixed for the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEdge, FoldedVertex, OrientationError

# Adjacent edge tangents whose sum is shorter than this are treated as
# antiparallel (folded polygon).
FOLD_TOLERANCE = 1e-14


def rotate_quarter(v: np.ndarray) -> np.ndarray:
    """Rotate 2-vectors by +90 degrees: (x, y) -> (-y, x)."""
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def _vertex_array(curve_or_vertices) -> np.ndarray:
    v = getattr(curve_or_vertices, "vertices", curve_or_vertices)
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise ValueError("expected vertices with shape (N, 2)")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PolygonalCurve:
    """Closed polygon with counterclockwise vertex order.

    Invariants: N >= 3, every edge has strictly positive length, and the
    signed (shoelace) area is strictly positive.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = _vertex_array(self.vertices)
        if v.shape[0] < 3:
            raise ValueError("a closed polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if not np.all(lengths > 0.0):
            j = int(np.argmin(lengths))
            raise DegenerateEdge(f"edge {j} has zero length")
        if not polygon_area(v) > 0.0:
            raise OrientationError("vertex order must be counterclockwise (positive area)")
        object.__setattr__(self, "vertices", _frozen(v))

    @classmethod
    def from_vertices(cls, vertices, orient: bool = True) -> "PolygonalCurve":
        """Build a curve, reversing the vertex order if it is clockwise."""
        v = _vertex_array(vertices)
        if orient and polygon_area(v) < 0.0:
            v = v[::-1]
        return cls(v)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True)
class FrozenFrame:
    """Edge and vertex frames frozen on one polygonal curve.

    Edge j joins x_j to x_{j+1}; tau_{j+1/2} is its unit tangent.  The nodal
    tangent is the normalized average of the two adjacent edge tangents, the
    nodal normal is its +90 degree rotation (inward for counterclockwise
    curves), and the nodal curvature is the lumped Laplace-Beltrami value
    kappa_j = -(K x)_j . nu_j / m_j, which is +1 on the unit circle.
    """

    edge_lengths: np.ndarray
    edge_tangents: np.ndarray
    nodal_tangents: np.ndarray
    nodal_normals: np.ndarray
    nodal_curvatures: np.ndarray
    lumped_masses: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.edge_lengths.shape[0]


def build_frame(curve: PolygonalCurve) -> FrozenFrame:
    """Compute the frozen frame of a curve.

    Raises DegenerateEdge for zero-length edges and FoldedVertex where
    adjacent edge tangents are antiparallel.
    """
    v = _vertex_array(curve)
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    if not np.all(lengths > 0.0):
        j = int(np.argmin(lengths))
        raise DegenerateEdge(f"edge {j} has zero length")
    edge_tangents = edges / lengths[:, None]

    # Row j of prev_tangents holds tau_{j-1/2}.
    prev_tangents = np.roll(edge_tangents, 1, axis=0)
    tangent_sums = prev_tangents + edge_tangents
    sum_norms = np.linalg.norm(tangent_sums, axis=1)
    if np.any(sum_norms <= FOLD_TOLERANCE):
        j = int(np.argmin(sum_norms))
        raise FoldedVertex(f"adjacent edge tangents at vertex {j} are antiparallel")
    nodal_tangents = tangent_sums / sum_norms[:, None]
    nodal_normals = rotate_quarter(nodal_tangents)

    masses = 0.5 * (np.roll(lengths, 1) + lengths)
    # (K x)_j = tau_{j-1/2} - tau_{j+1/2}, the vertex gradient of the length.
    stiffness_action = prev_tangents - edge_tangents
    curvatures = -np.einsum("ij,ij->i", stiffness_action, nodal_normals) / masses

    return FrozenFrame(
        edge_lengths=_frozen(lengths),
        edge_tangents=_frozen(edge_tangents),
        nodal_tangents=_frozen(nodal_tangents),
        nodal_normals=_frozen(nodal_normals),
        nodal_curvatures=_frozen(curvatures),
        lumped_masses=_frozen(masses),
    )


def polygon_area(curve) -> float:
    """Signed shoelace area, positive for counterclockwise curves."""
    v = _vertex_array(curve)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - y * xn))


def polygon_length(curve) -> float:
    """Total edge length."""
    v = _vertex_array(curve)
    return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))


def area_gradient(curve) -> np.ndarray:
    """Vertex gradient of the shoelace area: grad_j A = rotate(x_{j-1} - x_{j+1}) / 2."""
    v = _vertex_array(curve)
    return 0.5 * rotate_quarter(np.roll(v, 1, axis=0) - np.roll(v, -1, axis=0))


def length_gradient(curve) -> np.ndarray:
    """Vertex gradient of the length: grad_j L = tau_{j-1/2} - tau_{j+1/2}."""
    v = _vertex_array(curve)
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    if not np.all(lengths > 0.0):
        j = int(np.argmin(lengths))
        raise DegenerateEdge(f"edge {j} has zero length")
    tangents = edges / lengths[:, None]
    return np.roll(tangents, 1, axis=0) - tangents
