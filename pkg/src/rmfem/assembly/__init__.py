from .constraints import (
    ConstraintSet,
    ReducedSystem,
    consistent_coupling,
    dirichlet_u,
    eliminate_constraints,
    nedelec_edge_values,
    resolve_constraints,
)
from .dofmap import PAIRINGS, CellGroup, DofMap, Formulation, pairing
from .system import (
    LinearSystem,
    Loads,
    assemble,
    element_stiffness,
    energy_matrix,
    group_stiffness,
    load_vector,
    strain_operator,
)

__all__ = [
    "PAIRINGS",
    "CellGroup",
    "ConstraintSet",
    "DofMap",
    "Formulation",
    "LinearSystem",
    "Loads",
    "ReducedSystem",
    "assemble",
    "consistent_coupling",
    "dirichlet_u",
    "element_stiffness",
    "eliminate_constraints",
    "energy_matrix",
    "group_stiffness",
    "load_vector",
    "nedelec_edge_values",
    "pairing",
    "resolve_constraints",
    "strain_operator",
]
