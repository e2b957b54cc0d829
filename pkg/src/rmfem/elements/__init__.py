from .lagrange import lagrange_eval
from .nedelec import nedelec_eval
from .quadrature import QuadratureRule, quadrature
from .reference import (
    LAGRANGE,
    NEDELEC,
    DofDescriptor,
    ReferenceElement,
    duality_matrix,
    edge_dof_functional,
    inner_dof_functional,
)

__all__ = [
    "LAGRANGE",
    "NEDELEC",
    "DofDescriptor",
    "QuadratureRule",
    "ReferenceElement",
    "duality_matrix",
    "edge_dof_functional",
    "inner_dof_functional",
    "lagrange_eval",
    "nedelec_eval",
    "quadrature",
]
