"""Scalar Lagrange shape functions on the reference triangle and square.

Node orderings
--------------
T1: V1(0,0) V2(1,0) V3(0,1)
T2: T1 vertices, then mid(V1V2), mid(V2V3), mid(V3V1)
Q1: V1(-1,-1) V2(1,-1) V3(1,1) V4(-1,1)
Q2: Q1 vertices, then mid(V1V2), mid(V2V3), mid(V3V4), mid(V4V1), centre
"""
from __future__ import annotations

import numpy as np

from ..errors import ElementError

NODES = {
    ("tri", 1): np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    ("tri", 2): np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
    ("quad", 1): np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
    ("quad", 2): np.array(
        [
            [-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0],
            [0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, 0.0],
        ]
    ),
}


def n_nodes(kind: str, order: int) -> int:
    return len(reference_nodes(kind, order))


def reference_nodes(kind: str, order: int) -> np.ndarray:
    try:
        return NODES[(kind, order)]
    except KeyError:
        raise ElementError(f"no Lagrange element for kind={kind!r}, order={order}") from None


def lagrange_eval(kind: str, order: int, xi) -> tuple[np.ndarray, np.ndarray]:
    """Values (..., n) and reference gradients (..., n, 2) at points ``xi`` (..., 2)."""
    reference_nodes(kind, order)
    xi = np.asarray(xi, dtype=float)
    x, y = xi[..., 0], xi[..., 1]
    if kind == "tri":
        l1, l2, l3 = 1.0 - x - y, x, y
        one = np.ones_like(x)
        zero = np.zeros_like(x)
        if order == 1:
            N = np.stack([l1, l2, l3], axis=-1)
            dx = np.stack([-one, one, zero], axis=-1)
            dy = np.stack([-one, zero, one], axis=-1)
        else:
            N = np.stack(
                [l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1],
                axis=-1,
            )
            dx = np.stack([1 - 4 * l1, 4 * l2 - 1, zero, 4 * (l1 - l2), 4 * l3, -4 * l3], axis=-1)
            dy = np.stack([1 - 4 * l1, zero, 4 * l3 - 1, -4 * l2, 4 * l2, 4 * (l1 - l3)], axis=-1)
        return N, np.stack([dx, dy], axis=-1)

    # tensor-product square
    nodes = NODES[(kind, order)]
    if order == 1:
        fx = [lambda t: 0.5 * (1 - t), lambda t: 0.5 * (1 + t)]
        gx = [lambda t: -0.5 + 0 * t, lambda t: 0.5 + 0 * t]
        key = {-1.0: 0, 1.0: 1}
    else:
        fx = [lambda t: 0.5 * t * (t - 1), lambda t: 1 - t * t, lambda t: 0.5 * t * (t + 1)]
        gx = [lambda t: t - 0.5, lambda t: -2 * t, lambda t: t + 0.5]
        key = {-1.0: 0, 0.0: 1, 1.0: 2}
    vals, dxs, dys = [], [], []
    for a, b in nodes:
        i, j = key[a], key[b]
        vals.append(fx[i](x) * fx[j](y))
        dxs.append(gx[i](x) * fx[j](y))
        dys.append(fx[i](x) * gx[j](y))
    N = np.stack(vals, axis=-1)
    return N, np.stack([np.stack(dxs, axis=-1), np.stack(dys, axis=-1)], axis=-1)
