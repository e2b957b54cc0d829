"""Isotropic constitutive tensors of the relaxed micromorphic model.

Two-dimensional fields use the plane-strain reduction: in-plane strains
only, out-of-plane components of grad u and P vanish.  Symmetric tensors are
stored as (e11, e22, e12) with the *tensorial* shear component, and
:class:`ElasticityTensor2D` holds the matrix mapping those components to
(s11, s22, s12).  The energy pairing therefore weights the shear entry by 2.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError

SHEAR_WEIGHT = np.array([1.0, 1.0, 2.0])


@dataclass(frozen=True)
class ElasticityTensor2D:
    matrix: np.ndarray  # (3, 3)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ParameterError("elasticity matrix must be 3x3")
        object.__setattr__(self, "matrix", m)

    def apply(self, eps) -> np.ndarray:
        """Stress tensor(s) (..., 2, 2) for symmetric strain tensor(s) (..., 2, 2)."""
        eps = np.asarray(eps, dtype=float)
        v = np.stack([eps[..., 0, 0], eps[..., 1, 1], 0.5 * (eps[..., 0, 1] + eps[..., 1, 0])], axis=-1)
        s = v @ self.matrix.T
        return np.stack(
            [np.stack([s[..., 0], s[..., 2]], axis=-1), np.stack([s[..., 2], s[..., 1]], axis=-1)], axis=-2
        )

    def energy_matrix(self) -> np.ndarray:
        """Symmetric D with eps:C:eps = v^T D v for v = (e11, e22, e12)."""
        return SHEAR_WEIGHT[:, None] * self.matrix

    def lame(self) -> tuple[float, float]:
        m = self.matrix
        return float(m[0, 1]), 0.5 * float(m[2, 2])

    def __mul__(self, factor: float) -> "ElasticityTensor2D":
        return ElasticityTensor2D(self.matrix * factor)

    __rmul__ = __mul__


def build_tensor(lam: float, mu: float) -> ElasticityTensor2D:
    """Plane-strain isotropic tensor: sigma = lam tr(e) I + 2 mu e."""
    if mu < 0 or 3 * lam + 2 * mu <= 0:
        raise ParameterError(f"inadmissible Lame pair (lambda={lam}, mu={mu})")
    m = np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, 2 * mu]])
    return ElasticityTensor2D(m)


def reuss_macro(c_e: ElasticityTensor2D, c_micro: ElasticityTensor2D) -> ElasticityTensor2D:
    """Harmonic combination (C_e^-1 + C_micro^-1)^-1."""
    try:
        inv = np.linalg.inv(c_e.matrix) + np.linalg.inv(c_micro.matrix)
        out = np.linalg.inv(inv)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("singular elasticity tensor in Reuss combination") from exc
    return ElasticityTensor2D(0.5 * (out + out.T))


@dataclass(frozen=True)
class IsotropicParams:
    """Material block; field names mirror the run-config keys."""

    lambda_micro: float
    mu_micro: float
    lambda_e: float
    mu_e: float
    mu_c: float = 0.0
    mu: float = 1.0
    Lc: float = 1.0
    L_scale: float = 1.0

    def __post_init__(self):
        if self.mu_micro <= 0 or self.mu_e <= 0:
            raise ParameterError("mu_micro and mu_e must be positive")
        for lam, mu, name in ((self.lambda_micro, self.mu_micro, "micro"), (self.lambda_e, self.mu_e, "e")):
            if 3 * lam + 2 * mu <= 0:
                raise ParameterError(f"C_{name} not positive definite (3 lambda + 2 mu <= 0)")
        if self.mu_c < 0:
            raise ParameterError("mu_c must be >= 0")
        if self.Lc < 0:
            raise ParameterError("Lc must be >= 0")
        if self.L_scale < 0:
            raise ParameterError("L_scale must be >= 0")

    @property
    def c_e(self) -> ElasticityTensor2D:
        return build_tensor(self.lambda_e, self.mu_e)

    @property
    def c_micro(self) -> ElasticityTensor2D:
        return build_tensor(self.lambda_micro, self.mu_micro)

    @property
    def c_macro(self) -> ElasticityTensor2D:
        return reuss_macro(self.c_e, self.c_micro)

    def with_lc(self, lc: float) -> "IsotropicParams":
        return IsotropicParams(**{**asdict(self), "Lc": float(lc)})

    def scaled(self, factor: float) -> "IsotropicParams":
        """All moduli (lambda's, mu's, mu_c, mu) multiplied by ``factor``."""
        d = asdict(self)
        for key in ("lambda_micro", "mu_micro", "lambda_e", "mu_e", "mu_c", "mu"):
            d[key] *= factor
        return IsotropicParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def moment_modulus(params: IsotropicParams) -> float:
    """Coefficient mu * Lc^2 * (curvature scale) of the Curl P energy."""
    return params.mu * params.Lc**2 * params.L_scale


# Parameter sets of the two benchmark problems.
BVP1_MATERIALS = {
    1: IsotropicParams(lambda_micro=555.55, mu_micro=833.33, lambda_e=486.11, mu_e=729.17, mu_c=0.0, mu=833.33, Lc=1.0),
    2: IsotropicParams(lambda_micro=1111.11, mu_micro=1667.67, lambda_e=972.22, mu_e=1458.33, mu_c=0.0, mu=1666.67, Lc=1.0),
}
BVP2_MATERIALS = {
    1: IsotropicParams(lambda_micro=555.55, mu_micro=833.33, lambda_e=486.11, mu_e=729.17, mu_c=0.0, mu=833.33, Lc=5.0),
    2: IsotropicParams(lambda_micro=2777.78, mu_micro=4166.67, lambda_e=2430.555, mu_e=3645.85, mu_c=0.0, mu=4166.67, Lc=5.0),
}
