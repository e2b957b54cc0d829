"""Reference-to-physical maps: Jacobians, gradient transform, covariant Piola."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements.lagrange import lagrange_eval
from .errors import GeometryError, ParameterError
from .mesh import ORIENTATION_TOL

DET_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class GeometryMap:
    """Vertex-based (P1 / Q1) map for a batch of same-kind cells.

    ``coords`` has shape (nc, nv, 2).  Straight-sided cells with mid-edge
    nodes at edge midpoints map identically under the quadratic map, so
    the vertex map is exact for all meshes produced by rmfem.
    """

    kind: str
    coords: np.ndarray
    cells: np.ndarray | None = None  # global ids, for error messages

    def evaluate(self, xi):
        """X (nc,nq,2), J (nc,nq,2,2), det J (nc,nq), J^{-T} (nc,nq,2,2)."""
        xi = np.asarray(xi, dtype=float)
        N, dN = lagrange_eval(self.kind, 1, xi)
        if xi.ndim == 2:  # shared points
            X = np.einsum("qa,cad->cqd", N, self.coords)
            J = np.einsum("qab,cad->cqdb", dN, self.coords)
        else:
            X = np.einsum("cqa,cad->cqd", N, self.coords)
            J = np.einsum("cqab,cad->cqdb", dN, self.coords)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        bad = det <= DET_TOL * np.max(np.abs(J), axis=(-2, -1)) ** 2
        if np.any(bad):
            c = int(np.argwhere(bad)[0][0])
            gid = c if self.cells is None else int(self.cells[c])
            raise GeometryError(f"singular or inverted Jacobian in cell {gid}")
        invT = np.empty_like(J)
        invT[..., 0, 0] = J[..., 1, 1] / det
        invT[..., 0, 1] = -J[..., 1, 0] / det
        invT[..., 1, 0] = -J[..., 0, 1] / det
        invT[..., 1, 1] = J[..., 0, 0] / det
        return X, J, det, invT


def inverse_transpose(J) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(np.abs(det) <= DET_TOL * np.max(np.abs(J)) ** 2):
        raise GeometryError("singular Jacobian")
    return np.linalg.inv(J).swapaxes(-1, -2)


def map_scalar_gradient(J, grad_ref) -> np.ndarray:
    """Physical gradients J^{-T} grad_ref; ``grad_ref`` is (..., n, 2)."""
    invT = inverse_transpose(J)
    return np.einsum("...ij,...nj->...ni", invT, grad_ref)


def orientation_alpha(local_tangent, tol: float = ORIENTATION_TOL) -> int:
    """+1 if the tangent points to positive x (positive y when vertical), else -1."""
    t = np.asarray(local_tangent, dtype=float)
    n = float(np.linalg.norm(t))
    if n == 0.0:
        raise GeometryError("zero tangent vector")
    t = t / n
    if abs(t[0]) > tol:
        return 1 if t[0] > 0 else -1
    return 1 if t[1] > 0 else -1


def beta_normalization(order: int, edge_length: float) -> float:
    """Edge scaling that makes the physical tangential traces sum to one."""
    if edge_length <= 0:
        raise ParameterError("edge length must be positive")
    if order == 1:
        return float(edge_length)
    if order == 2:
        return 0.5 * float(edge_length)
    raise ParameterError(f"unsupported Nedelec order {order}")


def piola_map(J, det_J, alpha, beta, v_ref, curl_ref):
    """Covariant Piola transform with orientation/normalization factors.

    ``J`` (..., 2, 2), ``det_J`` (...), ``alpha``/``beta`` broadcastable to the
    basis axis of ``v_ref`` (..., n, 2) and ``curl_ref`` (..., n).
    """
    scale = np.asarray(alpha, dtype=float) * np.asarray(beta, dtype=float)
    invT = inverse_transpose(J)
    psi = np.einsum("...ij,...nj->...ni", invT, v_ref) * scale[..., None]
    curl = np.asarray(curl_ref) * scale / np.asarray(det_J)[..., None]
    return psi, curl
