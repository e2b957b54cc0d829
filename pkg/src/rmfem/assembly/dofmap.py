"""Global degree-of-freedom numbering for displacement and micro-distortion.

Layout of the global vector::

    [ u : 2 per quadratic Lagrange node | P : formulation dependent ]

Quadratic Lagrange nodes are the mesh vertices, then one node per edge
(midpoint), then one node per quadrilateral (centre).  Nodal P stores the
four entries (P11, P12, P21, P22) per P-node.  Nedelec P stores two
coefficients (row 1, row 2) per vectorial basis function: edge bases first
(``order`` per edge), then inner bases cell by cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..elements import nedelec
from ..elements.reference import LAGRANGE, NEDELEC
from ..errors import ElementError, ParameterError
from ..mesh import NVERT, QUAD, TRI, Mesh2D

U_ORDER = 2

# local vertex pairs of the quadratic mid-edge nodes, mapped to local edge ids
_MID_EDGE = {TRI: (2, 0, 1), QUAD: (0, 1, 2, 3)}


@dataclass(frozen=True)
class Formulation:
    """Displacement is always quadratic Lagrange; ``p_family`` selects P.

    ``p_family`` is ``None`` for the displacement-only elasticity problem.
    """

    p_family: str | None = NEDELEC
    p_order: int = 1

    def __post_init__(self):
        if self.p_family is None:
            return
        if self.p_family not in (LAGRANGE, NEDELEC):
            raise ElementError(f"unknown P family {self.p_family!r}")
        if self.p_order not in (1, 2):
            raise ElementError(f"unsupported P order {self.p_order}")

    @property
    def elastic(self) -> bool:
        return self.p_family is None

    @property
    def n_components(self) -> int:
        """Length of the generalized strain (grad u, P, curl P rows)."""
        return 4 if self.elastic else 10

    def name(self, kind: str) -> str:
        head = "T2" if kind == TRI else "Q2"
        if self.elastic:
            return f"{head}-elastic"
        if self.p_family == LAGRANGE:
            return f"{head}{'T' if kind == TRI else 'Q'}{self.p_order}"
        return f"{head}N{'T' if kind == TRI else 'Q'}{self.p_order}"

    @property
    def quadrature_degree(self) -> int:
        return 2 * max(U_ORDER, self.p_order) + 2


# named element pairings and the cell kind they require
PAIRINGS = {
    "T2T1": (TRI, Formulation(LAGRANGE, 1)),
    "T2T2": (TRI, Formulation(LAGRANGE, 2)),
    "T2NT1": (TRI, Formulation(NEDELEC, 1)),
    "T2NT2": (TRI, Formulation(NEDELEC, 2)),
    "Q2NQ1": (QUAD, Formulation(NEDELEC, 1)),
    "Q2NQ2": (QUAD, Formulation(NEDELEC, 2)),
    "T2-elastic": (TRI, Formulation(None, 0)),
}


def pairing(name: str) -> Formulation:
    try:
        return PAIRINGS[name][1]
    except KeyError:
        raise ParameterError(f"unknown element pairing {name!r}; valid: {sorted(PAIRINGS)}") from None


@dataclass(frozen=True)
class CellGroup:
    """All cells of one kind with their local-to-global dof tables."""

    kind: str
    cells: np.ndarray  # (nc,) global cell ids
    dofs: np.ndarray  # (nc, nloc) global dof ids
    n_u_local: int  # number of local u dofs (leading block of ``dofs``)
    alpha: np.ndarray | None = None  # (nc, nb) Nedelec orientation signs
    beta: np.ndarray | None = None  # (nc, nb) Nedelec normalizations


class DofMap:
    """Dense, unique global numbering for a mesh and a formulation."""

    def __init__(self, mesh: Mesh2D, formulation: Formulation):
        self.mesh = mesh
        self.formulation = formulation
        self.n_unodes = mesh.n_nodes + mesh.n_edges + len(mesh.cells_of_kind(QUAD))
        self.n_u = 2 * self.n_unodes
        quads = mesh.cells_of_kind(QUAD)
        self._centre = -np.ones(mesh.n_cells, dtype=np.int64)
        self._centre[quads] = mesh.n_nodes + mesh.n_edges + np.arange(len(quads))

        f = formulation
        if f.elastic:
            self.n_pbasis = 0
        elif f.p_family == LAGRANGE:
            self.n_pnodes = mesh.n_nodes if f.p_order == 1 else self.n_unodes
            self.n_pbasis = self.n_pnodes
        else:
            n_inner = np.array(
                [nedelec.n_basis(k, f.p_order) - nedelec.n_edge_basis(k, f.p_order) for k in mesh.cell_kinds],
                dtype=np.int64,
            )
            self._inner_start = f.p_order * mesh.n_edges + np.concatenate([[0], np.cumsum(n_inner)[:-1]])
            self.n_pbasis = f.p_order * mesh.n_edges + int(n_inner.sum())
        self.n_p = (4 if f.p_family == LAGRANGE else 2) * self.n_pbasis
        self.p_offset = self.n_u
        self.n_dofs = self.n_u + self.n_p
        self.groups = tuple(self._group(kind) for kind in (TRI, QUAD) if len(mesh.cells_of_kind(kind)))

    # -- Lagrange node tables ---------------------------------------------
    def cell_unodes(self, cells: np.ndarray, kind: str, order: int = U_ORDER) -> np.ndarray:
        """Global quadratic-node ids (nc, n) in reference node order."""
        m = self.mesh
        nv = NVERT[kind]
        verts = m.cell_nodes[cells, :nv]
        if order == 1:
            return verts
        mids = m.n_nodes + m.cell_edges[cells][:, list(_MID_EDGE[kind])]
        cols = [verts, mids]
        if kind == QUAD:
            cols.append(self._centre[cells][:, None])
        return np.concatenate(cols, axis=1)

    @cached_property
    def unode_coords(self) -> np.ndarray:
        m = self.mesh
        mids = 0.5 * (m.nodes[m.edge_nodes[:, 0]] + m.nodes[m.edge_nodes[:, 1]])
        quads = m.cells_of_kind(QUAD)
        centres = m.nodes[m.cell_nodes[quads]].mean(axis=1) if len(quads) else np.empty((0, 2))
        return np.concatenate([m.nodes, mids, centres])

    @property
    def pnode_coords(self) -> np.ndarray:
        return self.unode_coords[: self.n_pnodes]

    def edge_unodes(self, edges) -> np.ndarray:
        """(ne, 3) quadratic nodes along edges: start, end, midpoint."""
        edges = np.asarray(edges, dtype=np.int64)
        m = self.mesh
        return np.column_stack([m.edge_nodes[edges], m.n_nodes + edges])

    # -- dof index helpers ------------------------------------------------
    def u_dofs(self, unodes) -> np.ndarray:
        """(n, 2) global u dofs of quadratic nodes."""
        unodes = np.asarray(unodes, dtype=np.int64)
        return 2 * unodes[:, None] + np.arange(2)

    def p_nodal_dofs(self, pnodes) -> np.ndarray:
        """(n, 2, 2) global dofs of nodal P entries [node, row, col]."""
        if self.formulation.p_family != LAGRANGE:
            raise ParameterError("formulation has no nodal P")
        pnodes = np.asarray(pnodes, dtype=np.int64)
        return self.p_offset + 4 * pnodes[:, None, None] + 2 * np.arange(2)[:, None] + np.arange(2)

    def p_edge_bases(self, edges) -> np.ndarray:
        """(ne, order) global Nedelec basis ids of edges (slot 0: first endpoint)."""
        edges = np.asarray(edges, dtype=np.int64)
        k = self.formulation.p_order
        return k * edges[:, None] + np.arange(k)

    def p_basis_dofs(self, bases) -> np.ndarray:
        """(..., 2) global dofs [row 1, row 2] of Nedelec bases."""
        bases = np.asarray(bases, dtype=np.int64)
        return self.p_offset + 2 * bases[..., None] + np.arange(2)

    def u_dof_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[: self.n_u] = True
        return mask

    # -- per-kind cell tables ---------------------------------------------
    def _group(self, kind: str) -> CellGroup:
        m, f = self.mesh, self.formulation
        cells = m.cells_of_kind(kind)
        un = self.cell_unodes(cells, kind)
        udofs = (2 * un[:, :, None] + np.arange(2)).reshape(len(cells), -1)
        if f.elastic:
            return CellGroup(kind, cells, udofs, udofs.shape[1])
        if f.p_family == LAGRANGE:
            pn = self.cell_unodes(cells, kind, f.p_order)
            pdofs = (self.p_offset + 4 * pn[:, :, None] + np.arange(4)).reshape(len(cells), -1)
            return CellGroup(kind, cells, np.concatenate([udofs, pdofs], axis=1), udofs.shape[1])
        bases, alpha, beta = self._nedelec_tables(kind, cells)
        pdofs = (self.p_offset + 2 * bases[:, :, None] + np.arange(2)).reshape(len(cells), -1)
        return CellGroup(kind, cells, np.concatenate([udofs, pdofs], axis=1), udofs.shape[1], alpha, beta)

    def _nedelec_tables(self, kind, cells):
        m, k = self.mesh, self.formulation.p_order
        ne = NVERT[kind]
        nb = nedelec.n_basis(kind, k)
        bases = np.empty((len(cells), nb), dtype=np.int64)
        alpha = np.ones((len(cells), nb))
        beta = np.ones((len(cells), nb))
        edges = m.cell_edges[cells, :ne]
        sense = m.cell_edge_sense[cells, :ne]
        length = m.edge_length[edges]
        for i in range(ne):
            for j in range(k):
                col = k * i + j
                if k == 1:
                    slot = np.zeros(len(cells), dtype=np.int64)
                else:
                    vert = m.cell_nodes[cells, nedelec.MOMENT_VERTEX[(kind, k)][i][j]]
                    slot = np.where(vert == m.edge_nodes[edges[:, i], 0], 0, 1)
                bases[:, col] = k * edges[:, i] + slot
                alpha[:, col] = sense[:, i]
                beta[:, col] = length[:, i] / k  # beta_normalization, vectorized
        n_inner = nb - ne * k
        if n_inner:
            bases[:, ne * k :] = self._inner_start[cells][:, None] + np.arange(n_inner)
        return bases, alpha, beta

    def describe(self) -> dict:
        return {"n_dofs": self.n_dofs, "n_u": self.n_u, "n_p": self.n_p, "n_cells": self.mesh.n_cells}
