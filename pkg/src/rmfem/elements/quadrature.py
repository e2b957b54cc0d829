"""Quadrature on the reference triangle and square.

Triangle: {0 <= xi, 0 <= eta, xi + eta <= 1}, measure 1/2.
Square:   [-1, 1]^2, measure 4.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ElementError

MAX_DEGREE = 8


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _orbits(centroid=None, s21=(), s111=()):
    """Expand symmetric orbits given in barycentric form (weights normalized to 1)."""
    pts, wts = [], []
    if centroid is not None:
        pts.append((1 / 3, 1 / 3))
        wts.append(centroid)
    for a, w in s21:
        b = 1.0 - 2.0 * a
        for p in ((a, a), (b, a), (a, b)):
            pts.append(p)
            wts.append(w)
    for (a, b), w in s111:
        c = 1.0 - a - b
        for p in ((a, b), (b, a), (b, c), (c, b), (a, c), (c, a)):
            pts.append(p)
            wts.append(w)
    return np.array(pts), 0.5 * np.array(wts)


# Symmetric Gauss rules with positive weights (Strang-Fix / Dunavant tables).
_TRI_RULES = {
    1: dict(centroid=1.0),
    2: dict(s21=[(1 / 6, 1 / 3)]),
    4: dict(
        s21=[
            (0.445948490915965, 0.223381589678011),
            (0.091576213509771, 0.109951743655322),
        ]
    ),
    5: dict(
        centroid=0.225,
        s21=[
            (0.470142064105115, 0.132394152788506),
            (0.101286507323456, 0.125939180544827),
        ],
    ),
    6: dict(
        s21=[
            (0.249286745170910, 0.116786275726379),
            (0.063089014491502, 0.050844906370207),
        ],
        s111=[((0.053145049844817, 0.310352451033784), 0.082851075618374)],
    ),
    8: dict(
        centroid=0.144315607677787,
        s21=[
            (0.459292588292723, 0.095091634267285),
            (0.170569307751760, 0.103217370534718),
            (0.050547228317031, 0.032458497623198),
        ],
        s111=[((0.008394777409958, 0.263112829634638), 0.027230314174435)],
    ),
}


@lru_cache(maxsize=None)
def quadrature(kind: str, degree: int) -> QuadratureRule:
    """Rule on the reference ``kind`` cell exact for polynomials of ``degree``."""
    if not 0 <= degree <= MAX_DEGREE:
        raise ElementError(f"quadrature degree {degree} not in [0, {MAX_DEGREE}]")
    if kind == "tri":
        use = min(d for d in _TRI_RULES if d >= max(degree, 1))
        pts, wts = _orbits(**_TRI_RULES[use])
        return QuadratureRule(pts, wts, use)
    if kind == "quad":
        n = degree // 2 + 1
        x, w = np.polynomial.legendre.leggauss(n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel(), 2 * n - 1)
    raise ElementError(f"unknown cell kind {kind!r}")


@lru_cache(maxsize=None)
def gauss_line(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w
