"""Reference element descriptors and Nedelec degree-of-freedom functionals."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ..errors import ElementError
from . import lagrange, nedelec
from .quadrature import gauss_line, quadrature

LAGRANGE, NEDELEC = "lagrange", "nedelec"


@dataclass(frozen=True)
class DofDescriptor:
    entity: str  # "vertex", "edge" or "inner"
    index: int  # local entity index (0-based)
    moment: int  # moment index on that entity (0-based)


@dataclass(frozen=True)
class ReferenceElement:
    family: str
    kind: str
    order: int

    def __post_init__(self):
        if self.family == LAGRANGE:
            lagrange.reference_nodes(self.kind, self.order)
        elif self.family == NEDELEC:
            nedelec.n_basis(self.kind, self.order)
        else:
            raise ElementError(f"unknown element family {self.family!r}")

    @property
    def name(self) -> str:
        if self.family == LAGRANGE:
            return f"{'T' if self.kind == 'tri' else 'Q'}{self.order}"
        return f"N{'T' if self.kind == 'tri' else 'Q'}{self.order}"

    @property
    def n_basis(self) -> int:
        if self.family == LAGRANGE:
            return lagrange.n_nodes(self.kind, self.order)
        return nedelec.n_basis(self.kind, self.order)

    @property
    def dofs(self) -> tuple[DofDescriptor, ...]:
        return _descriptors(self.family, self.kind, self.order)

    def eval(self, xi):
        """(values, derivatives): reference gradients for Lagrange, scalar curls for Nedelec."""
        if self.family == LAGRANGE:
            return lagrange.lagrange_eval(self.kind, self.order, xi)
        return nedelec.nedelec_eval(self.kind, self.order, xi)

    @property
    def default_quadrature_degree(self) -> int:
        return 2 * self.order + 2


@lru_cache(maxsize=None)
def _descriptors(family, kind, order):
    nv = 3 if kind == "tri" else 4
    if family == LAGRANGE:
        out = [DofDescriptor("vertex", i, 0) for i in range(nv)]
        if order == 2:
            out += [DofDescriptor("edge", i, 0) for i in range(nv)]
            if kind == "quad":
                out.append(DofDescriptor("inner", 0, 0))
        return tuple(out)
    out = [DofDescriptor("edge", i, j) for i in range(nv) for j in range(order)]
    if order == 2:
        out += [DofDescriptor("inner", i, 0) for i in range(len(nedelec.INNER_WEIGHTS[(kind, 2)]))]
    return tuple(out)


VectorField = Callable[[np.ndarray], np.ndarray]


def edge_dof_functional(element: ReferenceElement, edge: int, moment: int, field: VectorField, n_points: int = 6) -> float:
    """``int_{e_edge} (v . t) r_moment ds`` on the reference cell (arc length)."""
    if element.family != NEDELEC:
        raise ElementError("edge moments are defined for Nedelec elements only")
    if not 0 <= moment < element.order:
        raise ElementError(f"moment index {moment} out of range for order {element.order}")
    start, end, t = nedelec.REF_EDGES[element.kind][edge]
    r = nedelec.EDGE_WEIGHTS[(element.kind, element.order)][edge][moment]
    s, w = gauss_line(n_points)
    pts = start + s[:, None] * (end - start)
    length = float(np.linalg.norm(end - start))
    v = np.asarray(field(pts))
    return float(np.sum(w * (v @ t) * r(pts[:, 0], pts[:, 1])) * length)


def inner_dof_functional(element: ReferenceElement, index: int, field: VectorField, degree: int = 8) -> float:
    """``int_{B_e} v . q_index da`` on the reference cell."""
    if element.family != NEDELEC:
        raise ElementError("inner moments are defined for Nedelec elements only")
    if element.order < 2:
        raise ElementError(f"{element.name} has no inner degrees of freedom")
    q = nedelec.INNER_WEIGHTS[(element.kind, element.order)][index]
    rule = quadrature(element.kind, degree)
    v = np.asarray(field(rule.points))
    qv = q(rule.points[:, 0], rule.points[:, 1])
    return float(np.sum(rule.weights * np.sum(v * qv, axis=-1)))


def apply_dof(element: ReferenceElement, dof: DofDescriptor, field: VectorField) -> float:
    if dof.entity == "edge":
        return edge_dof_functional(element, dof.index, dof.moment, field)
    return inner_dof_functional(element, dof.index, field)


def basis_field(element: ReferenceElement, b: int) -> VectorField:
    """The ``b``-th reference basis as a callable of reference points."""
    return lambda pts: element.eval(pts)[0][..., b, :]


def duality_matrix(element: ReferenceElement) -> np.ndarray:
    """M[a, b] = dof_a(basis_b); the identity for a correct element."""
    n = element.n_basis
    M = np.empty((n, n))
    for a, dof in enumerate(element.dofs):
        for b in range(n):
            M[a, b] = apply_dof(element, dof, basis_field(element, b))
    return M
