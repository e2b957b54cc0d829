"""Element integration and sparse assembly of the quadratic energy.

Every field enters the energy through the generalized strain

    g = (u1,1  u1,2  u2,1  u2,2 | P11  P12  P21  P22 | curl P^1  curl P^2)

with ``curl P^i = d1 P_i2 - d2 P_i1``.  The energy density is ``W = g.D.g / 2``
with a 10x10 matrix ``D`` per material, so each element matrix is
``sum_q w_q det J_q B_q^T D B_q``.  The elasticity problem keeps the first
four components only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from ..elements import nedelec
from ..elements.lagrange import lagrange_eval
from ..elements.quadrature import gauss_line, quadrature
from ..elements.reference import LAGRANGE
from ..errors import ParameterError
from ..mapping import GeometryMap
from ..materials import ElasticityTensor2D, IsotropicParams, moment_modulus
from ..mesh import NVERT
from .dofmap import U_ORDER, CellGroup, DofMap

CHUNK = 1024

# sym(E) -> (e11, e22, e12) for E stored as (E11, E12, E21, E22)
SYM = np.array([[1.0, 0, 0, 0], [0, 0, 0, 1.0], [0, 0.5, 0.5, 0]])
SKEW = np.array([0, 0.5, -0.5, 0])


def energy_matrix(material) -> np.ndarray:
    """Symmetric D with W = g.D.g / 2 for the generalized strain ``g``.

    ``material`` is :class:`IsotropicParams` (10x10) or an
    :class:`ElasticityTensor2D` (4x4, displacement-only elasticity).
    """
    if isinstance(material, ElasticityTensor2D):
        return SYM.T @ material.energy_matrix() @ SYM
    if not isinstance(material, IsotropicParams):
        raise ParameterError(f"unsupported material type {type(material).__name__}")
    rel = np.hstack([np.eye(4), -np.eye(4), np.zeros((4, 2))])  # grad u - P
    pp = np.hstack([np.zeros((4, 4)), np.eye(4), np.zeros((4, 2))])
    curl = np.hstack([np.zeros((2, 8)), np.eye(2)])
    d_rel = SYM.T @ material.c_e.energy_matrix() @ SYM + 4.0 * material.mu_c * np.outer(SKEW, SKEW)
    d_micro = SYM.T @ material.c_micro.energy_matrix() @ SYM
    D = rel.T @ d_rel @ rel + pp.T @ d_micro @ pp + moment_modulus(material) * curl.T @ curl
    return 0.5 * (D + D.T)


@dataclass
class CellKinematics:
    """Mapped quantities for a batch of cells at reference points."""

    X: np.ndarray  # (nc, nq, 2)
    det: np.ndarray  # (nc, nq)
    B: np.ndarray  # (nc, nq, ncomp, nloc)


def strain_operator(dofmap: DofMap, group: CellGroup, rows, xi) -> CellKinematics:
    """Generalized-strain operator of cells ``group.cells[rows]``.

    ``xi`` is (nq, 2) shared by all cells, or (nc, nq, 2) per cell.
    """
    rows = np.asarray(rows, dtype=np.int64)
    mesh, f = dofmap.mesh, dofmap.formulation
    kind = group.kind
    cells = group.cells[rows]
    coords = mesh.nodes[mesh.cell_nodes[cells, : NVERT[kind]]]
    X, J, det, invT = GeometryMap(kind, coords, cells).evaluate(xi)
    nc, nq = det.shape
    xi_b = np.broadcast_to(np.asarray(xi, dtype=float), (nc, nq, 2)) if np.ndim(xi) == 2 else np.asarray(xi)

    nloc = group.dofs.shape[1]
    B = np.zeros((nc, nq, f.n_components, nloc))
    _, dN = lagrange_eval(kind, U_ORDER, xi_b)
    G = np.einsum("cqjk,cqak->cqaj", invT, dN)  # physical gradients
    nn = dN.shape[-2]
    a = np.arange(nn)
    for i in range(2):
        for j in range(2):
            B[:, :, 2 * i + j, 2 * a + i] = G[..., j]
    if f.elastic:
        return CellKinematics(X, det, B)

    off = group.n_u_local
    if f.p_family == LAGRANGE:
        Np, dNp = lagrange_eval(kind, f.p_order, xi_b)
        Gp = np.einsum("cqjk,cqak->cqaj", invT, dNp)
        a = np.arange(Np.shape[-1])
        for r in range(2):
            for c in range(2):
                B[:, :, 4 + 2 * r + c, off + 4 * a + 2 * r + c] = Np
            B[:, :, 8 + r, off + 4 * a + 2 * r + 1] = Gp[..., 0]
            B[:, :, 8 + r, off + 4 * a + 2 * r] = -Gp[..., 1]
        return CellKinematics(X, det, B)

    v, curl = nedelec.nedelec_eval(kind, f.p_order, xi_b)
    scale = (group.alpha[rows] * group.beta[rows])[:, None, :]
    psi = np.einsum("cqjk,cqbk->cqbj", invT, v) * scale[..., None]
    curl = curl * scale / det[..., None]
    b = np.arange(psi.shape[-2])
    for r in range(2):
        for c in range(2):
            B[:, :, 4 + 2 * r + c, off + 2 * b + r] = psi[..., c]
        B[:, :, 8 + r, off + 2 * b + r] = curl
    return CellKinematics(X, det, B)


def _region_matrices(mesh, cells, materials: Mapping[int, object], ncomp: int) -> np.ndarray:
    regions = mesh.cell_regions[cells]
    out = np.empty((len(cells), ncomp, ncomp))
    for reg in np.unique(regions):
        if int(reg) not in materials:
            raise ParameterError(f"no material for region {int(reg)}; given: {sorted(materials)}")
        D = energy_matrix(materials[int(reg)])
        if D.shape != (ncomp, ncomp):
            raise ParameterError(f"material for region {int(reg)} does not fit the formulation")
        out[regions == reg] = D
    return out


def _chunks(n: int, size: int = CHUNK):
    for start in range(0, n, size):
        yield np.arange(start, min(start + size, n))


def group_stiffness(dofmap: DofMap, group: CellGroup, rows, materials, degree: int | None = None) -> np.ndarray:
    """Dense element matrices (nc, nloc, nloc) of the selected group rows."""
    rule = quadrature(group.kind, degree or dofmap.formulation.quadrature_degree)
    kin = strain_operator(dofmap, group, rows, rule.points)
    D = _region_matrices(dofmap.mesh, group.cells[rows], materials, dofmap.formulation.n_components)
    DB = np.einsum("ckl,cqln->cqkn", D, kin.B)
    w = kin.det * rule.weights
    Ke = np.einsum("cq,cqkm,cqkn->cmn", w, kin.B, DB, optimize=True)
    return 0.5 * (Ke + Ke.transpose(0, 2, 1))


def element_stiffness(dofmap: DofMap, cell: int, materials, degree: int | None = None):
    """(K_e, global dofs) of one cell."""
    for group in dofmap.groups:
        hit = np.flatnonzero(group.cells == cell)
        if hit.size:
            return group_stiffness(dofmap, group, hit, materials, degree)[0], group.dofs[hit[0]]
    raise ParameterError(f"cell {cell} not in mesh")


Field = Callable[[np.ndarray], np.ndarray]


@dataclass
class Loads:
    """Body force f(x) -> (n, 2), body moment M(x) -> (n, 2, 2), tractions per tag."""

    body_force: Field | None = None
    body_moment: Field | None = None
    tractions: dict[str, Field] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return self.body_force is None and self.body_moment is None and not self.tractions


@dataclass
class LinearSystem:
    K: sp.csr_matrix
    f: np.ndarray
    dofmap: DofMap
    materials: dict


def assemble(dofmap: DofMap, materials, loads: Loads | None = None, degree: int | None = None) -> LinearSystem:
    """Global stiffness (CSR) and load vector."""
    n = dofmap.n_dofs
    rows, cols, vals = [], [], []
    for group in dofmap.groups:
        for chunk in _chunks(len(group.cells)):
            Ke = group_stiffness(dofmap, group, chunk, materials, degree)
            d = group.dofs[chunk].astype(np.int32)
            nloc = d.shape[1]
            rows.append(np.repeat(d, nloc, axis=1).ravel())
            cols.append(np.tile(d, (1, nloc)).ravel())
            vals.append(Ke.ravel())
    K = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    K.sum_duplicates()
    f = load_vector(dofmap, loads, degree) if loads is not None and not loads.empty else np.zeros(n)
    return LinearSystem(K, f, dofmap, dict(materials))


def load_vector(dofmap: DofMap, loads: Loads, degree: int | None = None) -> np.ndarray:
    """Work-conjugate load terms: int f.u + M:P dV + int_tag t.u dA."""
    f = np.zeros(dofmap.n_dofs)
    deg = degree or dofmap.formulation.quadrature_degree
    if loads.body_force is not None or loads.body_moment is not None:
        for group in dofmap.groups:
            rule = quadrature(group.kind, deg)
            for chunk in _chunks(len(group.cells)):
                kin = strain_operator(dofmap, group, chunk, rule.points)
                w = kin.det * rule.weights
                pts = kin.X.reshape(-1, 2)
                fe = np.zeros((len(chunk), group.dofs.shape[1]))
                if loads.body_force is not None:
                    bf = np.asarray(loads.body_force(pts)).reshape(*w.shape, 2)
                    N, _ = lagrange_eval(group.kind, U_ORDER, rule.points)
                    for i in range(2):
                        fe[:, i : group.n_u_local : 2] += np.einsum("cq,qa,cq->ca", w, N, bf[..., i])
                if loads.body_moment is not None and not dofmap.formulation.elastic:
                    bm = np.asarray(loads.body_moment(pts)).reshape(*w.shape, 4)
                    fe += np.einsum("cq,cqk,cqkn->cn", w, bm, kin.B[:, :, 4:8, :])
                np.add.at(f, group.dofs[chunk], fe)
    for tag, traction in loads.tractions.items():
        f += _traction_vector(dofmap, tag, traction)
    return f


def _traction_vector(dofmap: DofMap, tag: str, traction: Field) -> np.ndarray:
    mesh = dofmap.mesh
    edges = mesh.tagged_edges(tag)
    nodes = dofmap.edge_unodes(edges)
    s, w = gauss_line(4)
    # 1D quadratic shape functions for (start, end, midpoint)
    N = np.column_stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])
    a, b = mesh.nodes[mesh.edge_nodes[edges, 0]], mesh.nodes[mesh.edge_nodes[edges, 1]]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    t = np.asarray(traction(pts.reshape(-1, 2))).reshape(len(edges), len(s), 2)
    L = mesh.edge_length[edges]
    fe = np.einsum("e,q,qa,eqi->eai", L, w, N, t)
    f = np.zeros(dofmap.n_dofs)
    np.add.at(f, dofmap.u_dofs(nodes.ravel()).reshape(len(edges), 3, 2), fe)
    return f
