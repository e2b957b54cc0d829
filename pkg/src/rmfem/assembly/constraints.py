"""Linear constraints and their exact elimination.

A constraint is a row ``sum_j c_j x_{d_j} = g``.  Prescribed values are
single-entry rows; the nodal consistent-coupling ties are multi-entry rows.
:func:`eliminate_constraints` resolves all rows into ``x = T y + g`` with a
reduced unknown ``y``, so the reduced matrix ``T^T K T`` keeps the symmetry
and definiteness of ``K`` on the admissible subspace.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..elements.quadrature import gauss_line
from ..elements.reference import NEDELEC
from ..errors import ConstraintError, ParameterError
from .dofmap import DofMap

CONSTRAINT_TOL = 1e-10
RANK_TOL = 1e-12
TANGENT_TOL = 1e-8


@dataclass
class ConstraintSet:
    dofs: list = field(default_factory=list)  # int arrays
    coeffs: list = field(default_factory=list)  # float arrays
    rhs: list = field(default_factory=list)  # floats
    labels: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rhs)

    def fix(self, dofs, values, label: str = "") -> None:
        for d, v in zip(np.ravel(dofs), np.ravel(values)):
            self.dofs.append(np.array([int(d)]))
            self.coeffs.append(np.array([1.0]))
            self.rhs.append(float(v))
            self.labels.append(label)

    def tie(self, dofs, coeffs, rhs: float, label: str = "") -> None:
        """Impose sum(coeffs * x[dofs]) = rhs."""
        dofs = np.asarray(dofs, dtype=np.int64).ravel()
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        if dofs.shape != coeffs.shape:
            raise ParameterError("tie needs one coefficient per dof")
        keep = np.abs(coeffs) > RANK_TOL * max(float(np.max(np.abs(coeffs), initial=0.0)), 1e-300)
        dofs, coeffs = dofs[keep], coeffs[keep]
        if not dofs.size:
            if abs(rhs) > 0:
                raise ConstraintError(f"empty constraint row with nonzero value {rhs} ({label})")
            return
        self.dofs.append(dofs)
        self.coeffs.append(coeffs)
        self.rhs.append(float(rhs))
        self.labels.append(label)

    def extend(self, other: "ConstraintSet") -> "ConstraintSet":
        self.dofs += other.dofs
        self.coeffs += other.coeffs
        self.rhs += other.rhs
        self.labels += other.labels
        return self

    def matrix(self, n_dofs: int) -> sp.csr_matrix:
        if not len(self):
            return sp.csr_matrix((0, n_dofs))
        lens = [len(d) for d in self.dofs]
        rows = np.repeat(np.arange(len(self)), lens)
        cols = np.concatenate(self.dofs)
        if cols.size and (cols.min() < 0 or cols.max() >= n_dofs):
            raise ParameterError("constraint references a dof outside the system")
        C = sp.csr_matrix((np.concatenate(self.coeffs), (rows, cols)), shape=(len(self), n_dofs))
        C.sum_duplicates()
        C.eliminate_zeros()
        return C


VectorField = Callable[[np.ndarray], np.ndarray]
TensorField = Callable[[np.ndarray], np.ndarray]


def dirichlet_u(dofmap: DofMap, tag: str, u_bar: VectorField) -> ConstraintSet:
    """u = u_bar at every quadratic node on the tagged edges."""
    edges = dofmap.mesh.tagged_edges(tag)
    nodes = np.unique(dofmap.edge_unodes(edges))
    values = np.asarray(u_bar(dofmap.unode_coords[nodes]), dtype=float).reshape(len(nodes), 2)
    cs = ConstraintSet()
    cs.fix(dofmap.u_dofs(nodes), values, f"u:{tag}")
    return cs


def consistent_coupling(dofmap: DofMap, tag: str, grad_u_bar: TensorField, n_points: int = 6) -> ConstraintSet:
    """Tie the tangential trace of P to that of grad(u_bar) on tagged edges.

    ``grad_u_bar(x)`` returns (n, 2, 2) with entries d u_i / d x_j.
    """
    f = dofmap.formulation
    if f.elastic:
        raise ParameterError("the elasticity formulation has no micro-distortion")
    if f.p_family == NEDELEC:
        return _coupling_nedelec(dofmap, tag, grad_u_bar, n_points)
    return _coupling_nodal(dofmap, tag, grad_u_bar)


def nedelec_edge_values(dofmap: DofMap, edges, grad_u_bar: TensorField, n_points: int = 6) -> np.ndarray:
    """Edge dof functionals of a tensor field: (ne, order, 2) [edge, moment slot, row].

    Slot ``s`` weights with the hat of ``edge_nodes[e, s]`` for order 2 and
    with 1 for order 1; division by beta makes the k=1 value the mean
    tangential component.
    """
    mesh, k = dofmap.mesh, dofmap.formulation.p_order
    edges = np.asarray(edges, dtype=np.int64)
    s, w = gauss_line(n_points)
    a, b = mesh.nodes[mesh.edge_nodes[edges, 0]], mesh.nodes[mesh.edge_nodes[edges, 1]]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    G = np.asarray(grad_u_bar(pts.reshape(-1, 2)), dtype=float).reshape(len(edges), len(s), 2, 2)
    tau = mesh.edge_tangent[edges]
    Gt = np.einsum("eqij,ej->eqi", G, tau)
    L = mesh.edge_length[edges]
    if k == 1:
        weights = np.ones((1, len(s)))
    else:
        weights = np.stack([1 - s, s])  # hats of edge_nodes[e, 0] and edge_nodes[e, 1]
    beta = L / k
    return np.einsum("eq,mq,eqi->emi", L[:, None] * w[None, :], weights, Gt) / beta[:, None, None]


def _coupling_nedelec(dofmap, tag, grad_u_bar, n_points) -> ConstraintSet:
    edges = dofmap.mesh.tagged_edges(tag)
    values = nedelec_edge_values(dofmap, edges, grad_u_bar, n_points)
    dofs = dofmap.p_basis_dofs(dofmap.p_edge_bases(edges))
    cs = ConstraintSet()
    cs.fix(dofs, values, f"P:{tag}")
    return cs


def _coupling_nodal(dofmap, tag, grad_u_bar) -> ConstraintSet:
    mesh = dofmap.mesh
    edges = mesh.tagged_edges(tag)
    k = dofmap.formulation.p_order
    node_edges: dict[int, list[int]] = {}
    for e in edges:
        ids = list(mesh.edge_nodes[e]) + ([mesh.n_nodes + e] if k == 2 else [])
        for n in ids:
            node_edges.setdefault(int(n), []).append(int(e))
    nodes = np.array(sorted(node_edges), dtype=np.int64)
    G = np.asarray(grad_u_bar(dofmap.pnode_coords[nodes]), dtype=float).reshape(len(nodes), 2, 2)
    pd = dofmap.p_nodal_dofs(nodes)
    cs = ConstraintSet()
    for i, n in enumerate(nodes):
        tangents = distinct_tangents(mesh.edge_tangent[node_edges[int(n)]])
        if len(tangents) > 2:
            raise ConstraintError(f"boundary node {n} on tag {tag!r} has {len(tangents)} distinct tangents")
        for t in tangents:
            target = G[i] @ t
            for r in range(2):
                cs.tie(pd[i, r], t, target[r], f"P:{tag}")
    return cs


def distinct_tangents(tangents) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for t in np.asarray(tangents, dtype=float):
        if all(abs(abs(float(t @ u)) - 1.0) > TANGENT_TOL for u in out):
            out.append(t)
    return out


@dataclass
class ReducedSystem:
    """Reduced unknowns y with x = T y + g."""

    K: sp.csr_matrix
    f: np.ndarray
    T: sp.csr_matrix
    g: np.ndarray
    free: np.ndarray  # global dofs that are plain copies of y entries

    def recover(self, y) -> np.ndarray:
        return self.T @ np.asarray(y) + self.g

    @property
    def n_reduced(self) -> int:
        return self.T.shape[1]


def resolve_constraints(cs: ConstraintSet, n_dofs: int, tol: float = CONSTRAINT_TOL):
    """Affine parametrization (T, g) of {x : C x = b}.

    Each connected group of coupled dofs is resolved by a column-pivoted QR
    factorization; pivot columns become dependent dofs.  Raises
    :class:`ConstraintError` naming the dofs of a contradictory group.
    """
    C = cs.matrix(n_dofs)
    b = np.asarray(cs.rhs, dtype=float)
    scale = max(float(np.max(np.abs(b))) if b.size else 0.0, 1.0e-300)
    involved = np.flatnonzero(np.diff(C.tocsc().indptr) > 0)
    g = np.zeros(n_dofs)
    dependent = np.zeros(n_dofs, dtype=bool)
    dep_rows, dep_cols, dep_vals = [], [], []  # dependent dof <- free dof coefficients

    if involved.size:
        Cs = C[:, involved].tocsr()
        A = (abs(Cs.T) @ abs(Cs)).tocsr()
        n_comp, label = connected_components(A, directed=False)
        order = np.argsort(label, kind="stable")
        bounds = np.searchsorted(label[order], np.arange(n_comp + 1))
        row_of = Cs.tocsc()
        single = np.diff(bounds) == 1

        # fast path: groups with one dof
        idx = order[bounds[:-1][single]]
        if idx.size:
            sub = row_of[:, idx].tocsc()
            for j, col in enumerate(idx):
                lo, hi = sub.indptr[j], sub.indptr[j + 1]
                r, c = sub.indices[lo:hi], sub.data[lo:hi]
                vals = b[r] / c
                if np.ptp(vals) > tol * scale or np.any(np.abs(c) <= RANK_TOL * np.max(np.abs(c))):
                    d = int(involved[col])
                    raise ConstraintError(
                        f"contradictory constraints on dof {d}: values {sorted(set(np.round(vals, 15)))}"
                    )
                g[involved[col]] = float(np.mean(vals))
                dependent[involved[col]] = True

        for comp in np.flatnonzero(~single):
            cols_local = order[bounds[comp] : bounds[comp + 1]]
            dofs = involved[cols_local]
            rows = np.unique(row_of[:, cols_local].tocoo().row)
            M = Cs[rows][:, cols_local].toarray()
            rhs = b[rows]
            Q, R, piv = la.qr(M, pivoting=True)
            diag = np.abs(np.diag(R))
            rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag.size and diag[0] > 0 else 0
            qb = Q.T @ rhs
            if np.any(np.abs(qb[rank:]) > tol * scale):
                raise ConstraintError(f"contradictory constraints among dofs {dofs.tolist()}")
            dep, fr = piv[:rank], piv[rank:]
            R11, R12 = R[:rank, :rank], R[:rank, rank:]
            x0 = la.solve_triangular(R11, qb[:rank])
            S = -la.solve_triangular(R11, R12) if fr.size else np.zeros((rank, 0))
            g[dofs[dep]] = x0
            dependent[dofs[dep]] = True
            for a, da in enumerate(dofs[dep]):
                for bb, db in enumerate(dofs[fr]):
                    if S[a, bb] != 0.0:
                        dep_rows.append(int(da))
                        dep_cols.append(int(db))
                        dep_vals.append(float(S[a, bb]))

    free = np.flatnonzero(~dependent)
    col_of = -np.ones(n_dofs, dtype=np.int64)
    col_of[free] = np.arange(len(free))
    rows = np.concatenate([free, np.asarray(dep_rows, dtype=np.int64)])
    cols = np.concatenate([np.arange(len(free)), col_of[np.asarray(dep_cols, dtype=np.int64)]])
    vals = np.concatenate([np.ones(len(free)), np.asarray(dep_vals, dtype=float)])
    T = sp.csr_matrix((vals, (rows, cols)), shape=(n_dofs, len(free)))
    return T, g, free


def eliminate_constraints(K, f, cs: ConstraintSet, tol: float = CONSTRAINT_TOL) -> ReducedSystem:
    """Reduce K x = f under the constraint rows of ``cs``."""
    K = sp.csr_matrix(K)
    n = K.shape[0]
    T, g, free = resolve_constraints(cs, n, tol)
    Kr = (T.T @ K @ T).tocsr()
    Kr = 0.5 * (Kr + Kr.T)
    fr = T.T @ (np.asarray(f, dtype=float) - K @ g)
    return ReducedSystem(sp.csr_matrix(Kr), np.asarray(fr).ravel(), T, g, free)


__all__ = [
    "CONSTRAINT_TOL",
    "ConstraintSet",
    "ReducedSystem",
    "consistent_coupling",
    "dirichlet_u",
    "distinct_tangents",
    "eliminate_constraints",
    "nedelec_edge_values",
    "resolve_constraints",
]
