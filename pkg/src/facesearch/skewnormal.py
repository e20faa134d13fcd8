"""Multivariate skew-normal family and the conditional face generator.

The family is parameterized by per-coordinate skewness delta in (-1, 1)
and a positive-definite correlation-scale matrix Psi. Its density is
2 phi(y; Omega) Phi(alpha^T y) with Omega = Delta (Psi + lambda lambda^T)
Delta; delta = 0 recovers the multivariate normal. Sampling uses the exact
half-normal stochastic representation, so no rejection step is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from . import eigenspace
from .eigenspace import EigenModel
from .faceio import FaceVector
from .gaussmodel import MVNModel

#: default stability margin keeping |delta| away from 1
DEFAULT_ZETA = 0.01

_SQRT_HALF_PI = np.sqrt(np.pi / 2.0)


@dataclass
class SNParams:
    """Skew-normal parameter bundle derived from (delta, Psi)."""

    delta: np.ndarray  # (K,), each in (-1, 1)
    lam: np.ndarray  # (K,), delta / sqrt(1 - delta^2)
    scale_diag: np.ndarray  # (K,), sqrt(1 - delta^2): diagonal of Delta
    psi: np.ndarray  # (K, K), positive definite, unit diagonal
    omega: np.ndarray  # (K, K), Delta (Psi + lam lam^T) Delta
    alpha: np.ndarray  # (K,)

    @property
    def K(self) -> int:
        return self.delta.size


def delta_from_mu(mu_tilde, zeta: float = DEFAULT_ZETA) -> tuple[np.ndarray, float]:
    """Skewness vector for a desired standardized mean displacement.

    raw = sqrt(pi/2) * mu_tilde; the whole vector is rescaled by
    k* = min(1, (1 - zeta) / max|raw|) so the result stays strictly inside
    the unit cube while preserving direction. Returns (delta, k*).
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must be in (0, 1), got {zeta}")
    raw = _SQRT_HALF_PI * np.asarray(mu_tilde, dtype=np.float64).reshape(-1)
    peak = float(np.max(np.abs(raw), initial=0.0))
    k_star = 1.0 if peak == 0.0 else min(1.0, (1.0 - zeta) / peak)
    return k_star * raw, k_star


def build_sn_params(delta, psi) -> SNParams:
    """Derive (lambda, Delta, Omega, alpha) from delta and Psi.

    Psi must be positive definite with unit diagonal; |delta_i| < 1. The
    alpha denominator is evaluated through a linear solve, never an
    explicit inverse.
    """
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    psi = np.asarray(psi, dtype=np.float64)
    k = delta.size
    if psi.shape != (k, k):
        raise ValueError(f"Psi shape {psi.shape} does not match delta length {k}")
    if np.max(np.abs(delta), initial=0.0) >= 1.0:
        raise ValueError("every |delta_i| must be strictly less than 1")
    if np.max(np.abs(np.diag(psi) - 1.0)) > 1e-8:
        raise ValueError("Psi must have unit diagonal")
    try:
        cho = linalg.cho_factor(psi, lower=True)
    except np.linalg.LinAlgError:
        raise ValueError("Psi is not positive definite") from None
    scale = np.sqrt(1.0 - delta**2)
    lam = delta / scale
    omega = (psi + np.outer(lam, lam)) * np.outer(scale, scale)
    w = linalg.cho_solve(cho, lam)
    denom = np.sqrt(1.0 + float(lam @ w))
    alpha = w / scale / denom
    return SNParams(
        delta=delta, lam=lam, scale_diag=scale, psi=psi, omega=omega, alpha=alpha
    )


def sn_density(params: SNParams, y) -> float | np.ndarray:
    """Density 2 phi(y; Omega) Phi(alpha^T y); vectorized over rows of y."""
    y = np.asarray(y, dtype=np.float64)
    pdf = stats.multivariate_normal.pdf(y, mean=np.zeros(params.K), cov=params.omega)
    tail = stats.norm.cdf(y @ params.alpha)
    return 2.0 * pdf * tail


def sample_sn(params: SNParams, n: int, seed) -> np.ndarray:
    """n draws via Y = delta |Z0| + sqrt(1 - delta^2) Z, Z ~ N(0, Psi).

    Deterministic given seed; returns an (n, K) array whose second-moment
    matrix is Omega and whose mean is sqrt(2/pi) delta.
    """
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(params.psi)
    z0 = np.abs(rng.standard_normal(n))
    z = rng.standard_normal((n, params.K)) @ L.T
    return z0[:, None] * params.delta + z * params.scale_diag


@dataclass
class SkewTarget:
    """Desired standardized mean displacement plus the applied clamp."""

    mu_tilde: np.ndarray
    zeta: float = DEFAULT_ZETA
    k_star: float = field(init=False)
    delta: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mu_tilde = np.asarray(self.mu_tilde, dtype=np.float64).reshape(-1)
        self.delta, self.k_star = delta_from_mu(self.mu_tilde, self.zeta)


def generate_faces(
    eig: EigenModel, mvn: MVNModel, target: SkewTarget, n: int, seed
) -> list[tuple[FaceVector, np.ndarray]]:
    """Generate faces whose coordinates skew toward the target displacement.

    Draws standardized skew-normal samples with Psi = corr(sigma), rescales
    by the marginal standard deviations, shifts by mu, and reconstructs
    through the eigenface basis. Returns [(face, coordinates), ...].
    """
    if mvn.K != eig.K:
        raise ValueError(f"model dimension mismatch: mvn K={mvn.K}, eigen K={eig.K}")
    if target.mu_tilde.size != mvn.K:
        raise ValueError(
            f"displacement length {target.mu_tilde.size} != model K {mvn.K}"
        )
    params = build_sn_params(target.delta, mvn.corr)
    y = sample_sn(params, n, seed)
    coords = mvn.mu + mvn.marginal_sd * y
    return [(eigenspace.reconstruct(eig, c), c) for c in coords]
