"""First-kind Nedelec bases NT1, NT2 (triangle) and NQ1, NQ2 (square).

The closed forms below are the duals of the edge moments
``int_{e_i} (v . t_i) r_j ds`` and the inner moments ``int v . q_i da``
listed in :data:`EDGE_WEIGHTS` / :data:`INNER_WEIGHTS`.  Basis ordering:
edge 1 moments, edge 2 moments, ..., then inner functionals.
"""
from __future__ import annotations

import numpy as np

from ..errors import ElementError

SQRT2 = np.sqrt(2.0)

# Reference edges: (start point, end point, unit tangent).  Tangents match the
# local edge directions in rmfem.mesh.LOCAL_EDGES.
REF_EDGES = {
    "tri": (
        (np.array([0.0, 1.0]), np.array([1.0, 0.0]), np.array([1.0, -1.0]) / SQRT2),
        (np.array([0.0, 0.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0])),
        (np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 0.0])),
    ),
    "quad": (
        (np.array([-1.0, -1.0]), np.array([1.0, -1.0]), np.array([1.0, 0.0])),
        (np.array([1.0, -1.0]), np.array([1.0, 1.0]), np.array([0.0, 1.0])),
        (np.array([-1.0, 1.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0])),
        (np.array([-1.0, -1.0]), np.array([-1.0, 1.0]), np.array([0.0, 1.0])),
    ),
}

# Edge weights r_j (as functions of reference coordinates).  For order 2 each
# r_j equals 1 at exactly one edge endpoint; MOMENT_VERTEX records which
# local vertex, so shared edges can be matched between neighbouring cells.
EDGE_WEIGHTS = {
    ("tri", 1): ((lambda x, y: 1.0 + 0 * x,),) * 3,
    ("tri", 2): (
        (lambda x, y: x, lambda x, y: y),
        (lambda x, y: y, lambda x, y: 1.0 - y),
        (lambda x, y: 1.0 - x, lambda x, y: x),
    ),
    ("quad", 1): ((lambda x, y: 1.0 + 0 * x,),) * 4,
    ("quad", 2): (
        (lambda x, y: 0.5 * (1 - x), lambda x, y: 0.5 * (1 + x)),
        (lambda x, y: 0.5 * (1 - y), lambda x, y: 0.5 * (1 + y)),
        (lambda x, y: 0.5 * (1 + x), lambda x, y: 0.5 * (1 - x)),
        (lambda x, y: 0.5 * (1 + y), lambda x, y: 0.5 * (1 - y)),
    ),
}

MOMENT_VERTEX = {
    ("tri", 2): ((1, 2), (2, 0), (0, 1)),
    ("quad", 2): ((0, 1), (1, 2), (2, 3), (3, 0)),
}

INNER_WEIGHTS = {
    ("tri", 2): (
        lambda x, y: np.stack([1.0 + 0 * x, 0 * x], axis=-1),
        lambda x, y: np.stack([0 * x, 1.0 + 0 * x], axis=-1),
    ),
    ("quad", 2): (
        lambda x, y: np.stack([0.5 * (1 + x), 0 * x], axis=-1),
        lambda x, y: np.stack([0.5 * (1 - x), 0 * x], axis=-1),
        lambda x, y: np.stack([0 * x, 0.5 * (1 + y)], axis=-1),
        lambda x, y: np.stack([0 * x, 0.5 * (1 - y)], axis=-1),
    ),
}

N_BASIS = {("tri", 1): 3, ("tri", 2): 8, ("quad", 1): 4, ("quad", 2): 12}


def n_basis(kind: str, order: int) -> int:
    try:
        return N_BASIS[(kind, order)]
    except KeyError:
        raise ElementError(f"no Nedelec element for kind={kind!r}, order={order}") from None


def n_edge_basis(kind: str, order: int) -> int:
    return len(REF_EDGES[kind]) * order


def _nt1(x, y):
    one = np.ones_like(x)
    vx = [y, y, 1 - y]
    vy = [-x, 1 - x, x]
    curl = [-2 * one, -2 * one, 2 * one]
    return vx, vy, curl


def _nt2(x, y):
    # printed bases carry an overall factor 2; applied at the end
    vx = [
        -y + 4 * y * x,
        -2 * y + 4 * y * y,
        -2 * y + 4 * y * y,
        3 * y - 4 * y * y - 4 * y * x,
        2 - 6 * y + 4 * y * y - 3 * x + 4 * y * x,
        -1 + y + 3 * x - 4 * y * x,
        8 * y - 8 * y * y - 4 * y * x,
        -4 * y + 4 * y * y + 8 * y * x,
    ]
    vy = [
        2 * x - 4 * x * x,
        x - 4 * y * x,
        -1 + 3 * y + x - 4 * y * x,
        2 - 3 * y - 6 * x + 4 * y * x + 4 * x * x,
        3 * x - 4 * y * x - 4 * x * x,
        -2 * x + 4 * x * x,
        -4 * x + 8 * y * x + 4 * x * x,
        8 * x - 4 * y * x - 8 * x * x,
    ]
    # d(vy)/dx - d(vx)/dy
    dvy_dx = [
        2 - 8 * x,
        1 - 4 * y,
        1 - 4 * y,
        -6 + 4 * y + 8 * x,
        3 - 4 * y - 8 * x,
        -2 + 8 * x,
        -4 + 8 * y + 8 * x,
        8 - 4 * y - 16 * x,
    ]
    dvx_dy = [
        -1 + 4 * x,
        -2 + 8 * y,
        -2 + 8 * y,
        3 - 8 * y - 4 * x,
        -6 + 8 * y + 4 * x,
        1 - 4 * x,
        8 - 16 * y - 4 * x,
        -4 + 8 * y + 8 * x,
    ]
    curl = [a - b for a, b in zip(dvy_dx, dvx_dy)]
    return [2 * v for v in vx], [2 * v for v in vy], [2 * c for c in curl]


def _nq1(x, y):
    zero = np.zeros_like(x)
    vx = [(1 - y) / 4, zero, (1 + y) / 4, zero]
    vy = [zero, (1 + x) / 4, zero, (1 - x) / 4]
    quarter = 0.25 * np.ones_like(x)
    curl = [quarter, quarter, -quarter, -quarter]
    return vx, vy, curl


def _nq2(x, y):
    zero = np.zeros_like(x)

    def ex(c0, cy, cyy, cx, cxy, cxyy):
        # c0 + cy*y + cyy*y^2 + cx*x + cxy*x*y + cxyy*x*y^2 ; returns value and -d/dy
        val = c0 + cy * y + cyy * y * y + cx * x + cxy * x * y + cxyy * x * y * y
        dy = cy + 2 * cyy * y + cxy * x + 2 * cxyy * x * y
        return val, -dy

    def ey(c0, cx, cxx, cy, cxy, cxxy):
        val = c0 + cx * x + cxx * x * x + cy * y + cxy * x * y + cxxy * x * x * y
        dx = cx + 2 * cxx * x + cxy * y + 2 * cxxy * x * y
        return val, dx

    e = 1 / 8
    terms = [
        ("x", ex(-e, -1 / 4, 3 * e, 3 * e, 3 / 4, -9 * e)),
        ("x", ex(-e, -1 / 4, 3 * e, -3 * e, -3 / 4, 9 * e)),
        ("y", ey(-e, 1 / 4, 3 * e, 3 * e, -3 / 4, -9 * e)),
        ("y", ey(-e, 1 / 4, 3 * e, -3 * e, 3 / 4, 9 * e)),
        ("x", ex(-e, 1 / 4, 3 * e, -3 * e, 3 / 4, 9 * e)),
        ("x", ex(-e, 1 / 4, 3 * e, 3 * e, -3 / 4, -9 * e)),
        ("y", ey(-e, -1 / 4, 3 * e, -3 * e, -3 / 4, 9 * e)),
        ("y", ey(-e, -1 / 4, 3 * e, 3 * e, 3 / 4, -9 * e)),
        ("x", ex(3 * e, 0.0, -3 * e, 9 * e, 0.0, -9 * e)),
        ("x", ex(3 * e, 0.0, -3 * e, -9 * e, 0.0, 9 * e)),
        ("y", ey(3 * e, 0.0, -3 * e, 9 * e, 0.0, -9 * e)),
        ("y", ey(3 * e, 0.0, -3 * e, -9 * e, 0.0, 9 * e)),
    ]
    vx, vy, curl = [], [], []
    for comp, (val, c) in terms:
        if comp == "x":
            vx.append(val)
            vy.append(zero)
        else:
            vx.append(zero)
            vy.append(val)
        curl.append(c)
    return vx, vy, curl


_BASES = {("tri", 1): _nt1, ("tri", 2): _nt2, ("quad", 1): _nq1, ("quad", 2): _nq2}


def nedelec_eval(kind: str, order: int, xi) -> tuple[np.ndarray, np.ndarray]:
    """Reference vector values (..., nb, 2) and scalar curls (..., nb)."""
    n_basis(kind, order)
    xi = np.asarray(xi, dtype=float)
    x, y = xi[..., 0], xi[..., 1]
    vx, vy, curl = _BASES[(kind, order)](x, y)
    shape = x.shape
    vx = [np.broadcast_to(v, shape) for v in vx]
    vy = [np.broadcast_to(v, shape) for v in vy]
    curl = [np.broadcast_to(c, shape) for c in curl]
    values = np.stack([np.stack(vx, axis=-1), np.stack(vy, axis=-1)], axis=-1)
    return values, np.stack(curl, axis=-1)
