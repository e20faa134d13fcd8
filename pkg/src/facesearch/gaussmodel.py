"""Multivariate-normal coordinate model and normality diagnostics.

Fits the maximum-likelihood Gaussian to reduced coordinates, samples from
it, and provides the Shapiro-Wilk test (Royston's polynomial approximation,
valid for 3 <= n <= 5000), Royston's multivariate H test, and a bootstrap
of per-coordinate p-values.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .eigenspace import ModelFormatError

_MVN_MAGIC = b"FACEMVN\x00"
_MVN_VERSION = 1

#: covariance eigenvalues may undershoot zero by this much (times scale)
PSD_TOL = 1e-8


@dataclass
class MVNModel:
    """MLE mean/covariance of reduced coordinates plus derived scales."""

    mu: np.ndarray  # (K,)
    sigma: np.ndarray  # (K, K), symmetric PSD
    marginal_sd: np.ndarray  # (K,) sqrt of diagonal
    corr: np.ndarray  # (K, K) correlation matrix, unit diagonal
    n_train: int = 0

    @property
    def K(self) -> int:
        return self.mu.size

    @property
    def zero_variance(self) -> np.ndarray:
        """Boolean mask of coordinates with zero marginal variance."""
        return self.marginal_sd == 0.0


def _derive(mu, sigma, n_train) -> MVNModel:
    sd = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
    safe = np.where(sd > 0.0, sd, 1.0)
    corr = sigma / np.outer(safe, safe)
    corr[sd == 0.0, :] = 0.0
    corr[:, sd == 0.0] = 0.0
    np.fill_diagonal(corr, 1.0)
    return MVNModel(mu=mu, sigma=sigma, marginal_sd=sd, corr=corr, n_train=n_train)


def fit_mvn(coords) -> MVNModel:
    """Maximum-likelihood Gaussian fit (covariance divisor N) to coordinates.

    `coords` is an (N, K) array or a sequence of K-vectors; N >= 2.
    Zero-variance coordinates are flagged on the model, not rejected.
    """
    X = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples to fit, got {n}")
    mu = X.mean(axis=0)
    centered = X - mu
    sigma = centered.T @ centered / n
    sigma = (sigma + sigma.T) / 2.0
    return _derive(mu, sigma, n)


def _psd_factor(sigma: np.ndarray) -> np.ndarray:
    """A matrix L with L L^T = sigma, tolerating PSD-singular input."""
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, u = np.linalg.eigh(sigma)
        tol = PSD_TOL * max(1.0, float(np.max(np.diag(sigma), initial=0.0)))
        if w.min() < -tol:
            raise ValueError(
                f"covariance is not PSD: min eigenvalue {w.min():.3e}"
            ) from None
        return u * np.sqrt(np.clip(w, 0.0, None))


def sample_mvn(model: MVNModel, n: int, seed) -> np.ndarray:
    """n iid draws from N(mu, sigma); deterministic given seed. Shape (n, K)."""
    rng = np.random.default_rng(seed)
    L = _psd_factor(model.sigma)
    z = rng.standard_normal((n, model.K))
    return model.mu + z @ L.T


def standardize(model: MVNModel, coords: np.ndarray) -> np.ndarray:
    """Map coordinates to standardized units: (c - mu) / marginal_sd.

    Zero-variance coordinates map to 0 (they carry no information).
    """
    safe = np.where(model.marginal_sd > 0.0, model.marginal_sd, 1.0)
    z = (np.asarray(coords, dtype=np.float64) - model.mu) / safe
    if model.zero_variance.any():
        z = np.where(model.zero_variance, 0.0, z)
    return z


def unstandardize(model: MVNModel, z: np.ndarray) -> np.ndarray:
    """Inverse of standardize: mu + sd * z (zero-variance coords stay at mu)."""
    return model.mu + model.marginal_sd * np.asarray(z, dtype=np.float64)


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's polynomial approximation, AS R94 uncensored path)

_C_AN = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C_AN1 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582663)
_C_MU_SMALL = (0.5440, -0.39978, 0.025054, -0.0006714)
_C_SIG_SMALL = (1.3822, -0.77857, 0.062767, -0.0020322)
_C_MU_BIG = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C_SIG_BIG = (-0.4803, -0.082676, 0.0030302)


def _poly(coeffs, x) -> float:
    return float(sum(c * x**i for i, c in enumerate(coeffs)))


def _sw_weights(n: int) -> np.ndarray:
    m = stats.norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    if n == 3:
        return np.array([-np.sqrt(0.5), 0.0, np.sqrt(0.5)])
    mm = float(m @ m)
    c = m / np.sqrt(mm)
    u = 1.0 / np.sqrt(n)
    a = np.empty(n)
    a_n = c[-1] + _poly(_C_AN, u)
    if n <= 5:
        phi = (mm - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        a[1:-1] = m[1:-1] / np.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
    else:
        a_n1 = c[-2] + _poly(_C_AN1, u)
        phi = (mm - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        a[2:-2] = m[2:-2] / np.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
        a[-2], a[1] = a_n1, -a_n1
    return a


def _sw_z_score(w: float, n: int) -> float:
    """Normalizing transform of W; the upper-tail area of z is the p-value."""
    one_minus_w = max(1.0 - w, 1e-300)
    if n <= 11:
        g = -2.273 + 0.459 * n
        y = -np.log(max(g - np.log(one_minus_w), 1e-300))
        mu = _poly(_C_MU_SMALL, float(n))
        sig = np.exp(_poly(_C_SIG_SMALL, float(n)))
    else:
        ln = np.log(n)
        y = np.log(one_minus_w)
        mu = _poly(_C_MU_BIG, ln)
        sig = np.exp(_poly(_C_SIG_BIG, ln))
    return float((y - mu) / sig)


def shapiro_wilk(sample) -> tuple[float, float]:
    """Shapiro-Wilk test of univariate normality. Returns (W, p-value).

    Valid for 3 <= n <= 5000. For n = 3 the exact small-sample p-value is
    used; otherwise the normalizing approximation.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if not 3 <= n <= 5000:
        raise ValueError(f"sample size {n} outside the valid range 3..5000")
    ss = float(np.sum((x - x.mean()) ** 2))
    if ss == 0.0:
        raise ValueError("all sample values are identical")
    a = _sw_weights(n)
    w = float((a @ x) ** 2 / ss)
    w = min(w, 1.0)
    if n == 3:
        p = 6.0 / np.pi * (np.arcsin(np.sqrt(w)) - np.arcsin(np.sqrt(0.75)))
        p = float(np.clip(p, 0.0, 1.0))
    else:
        p = float(stats.norm.sf(_sw_z_score(w, n)))
    return w, p


# ---------------------------------------------------------------------------
# Royston's multivariate normality test (1992 revision)


def royston_test(samples) -> tuple[float, float]:
    """Royston's H test of multivariate normality. Returns (H, p-value).

    Combines per-coordinate Shapiro-Wilk statistics through the equivalent
    degrees of freedom correction based on average inter-coordinate
    correlation; p comes from the chi-square upper tail.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    n, k = X.shape
    r = np.empty(k)
    for j in range(k):
        _, p_j = shapiro_wilk(X[:, j])
        p_j = float(np.clip(p_j, 1e-300, 1.0))
        r[j] = stats.norm.ppf(p_j / 2.0) ** 2
    if k == 1:
        edf = 1.0
    else:
        ln = np.log(n)
        u, lam = 0.715, 5.0
        v = 0.21364 + 0.015124 * ln**2 - 0.0018034 * ln**3
        c = np.corrcoef(X.T)
        nc = np.sign(c) * np.abs(c) ** lam * (1.0 - u * (1.0 - c) ** u / v)
        mean_nc = (np.sum(nc) - k) / (k * k - k)
        mean_nc = min(max(mean_nc, 0.0), 1.0)
        edf = k / (1.0 + (k - 1) * mean_nc)
    h = float(edf * np.sum(r) / k)
    return h, float(stats.chi2.sf(h, edf))


# ---------------------------------------------------------------------------
# Bootstrap report


@dataclass
class NormalityReport:
    """Per-coordinate bootstrap p-value summary plus the Royston test."""

    p_min: np.ndarray  # (K,)
    p_mean: np.ndarray  # (K,)
    p_max: np.ndarray  # (K,)
    royston_h: float
    royston_p: float
    replications: int
    subsample: int
    n: int

    def to_json(self) -> dict:
        return {
            "p_min": self.p_min.tolist(),
            "p_mean": self.p_mean.tolist(),
            "p_max": self.p_max.tolist(),
            "royston_h": self.royston_h,
            "royston_p": self.royston_p,
            "replications": self.replications,
            "subsample": self.subsample,
            "n": self.n,
        }

    def to_json_str(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json(), indent=indent)


def bootstrap_normality(coords, replications: int, subsample: int, seed) -> NormalityReport:
    """Bootstrap the per-coordinate Shapiro-Wilk p-values.

    Draws `replications` resamples of `subsample` rows (with replacement,
    per-replication RNG streams derived from the master seed), tests each
    coordinate, and reports min/mean/max p-value per coordinate. Royston's
    test runs once on the full sample (or on one seeded subsample when the
    sample exceeds the test's validity range).
    """
    X = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    n, k = X.shape
    if subsample > n:
        raise ValueError(f"subsample size {subsample} exceeds sample size {n}")
    if replications < 1:
        raise ValueError("need at least one replication")
    pvals = np.empty((replications, k))
    for b in range(replications):
        rng = np.random.default_rng([seed, b])
        rows = X[rng.integers(0, n, size=subsample)]
        for j in range(k):
            _, pvals[b, j] = shapiro_wilk(rows[:, j])
    if n <= 5000:
        royston_x = X
    else:
        rng = np.random.default_rng([seed, replications])
        royston_x = X[rng.choice(n, size=subsample, replace=False)]
    h, p = royston_test(royston_x)
    return NormalityReport(
        p_min=pvals.min(axis=0),
        p_mean=pvals.mean(axis=0),
        p_max=pvals.max(axis=0),
        royston_h=h,
        royston_p=p,
        replications=replications,
        subsample=subsample,
        n=n,
    )


# ---------------------------------------------------------------------------
# Persistence


def save_mvn(model: MVNModel, path: str):
    """Write the model to a single versioned binary file (lossless)."""
    head = _MVN_MAGIC + struct.pack("<IQQ", _MVN_VERSION, model.K, model.n_train)
    body = model.mu.astype("<f8").tobytes() + np.ascontiguousarray(
        model.sigma, dtype="<f8"
    ).tobytes()
    payload = head + body
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_mvn(path: str) -> MVNModel:
    """Read a model written by save_mvn, verifying version and checksum."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MVN_MAGIC) + 4:
        raise ModelFormatError("truncated file: header incomplete")
    if blob[: len(_MVN_MAGIC)] != _MVN_MAGIC:
        raise ModelFormatError(
            f"bad magic {blob[:len(_MVN_MAGIC)]!r}: not an MVN model file"
        )
    off = len(_MVN_MAGIC)
    (version,) = struct.unpack_from("<I", blob, off)
    if version != _MVN_VERSION:
        raise ModelFormatError(f"version mismatch: file v{version}, reader v{_MVN_VERSION}")
    off += 4
    k, n_train = struct.unpack_from("<QQ", blob, off)
    off += 16
    expected = off + 8 * (k + k * k) + 4
    if len(blob) < expected:
        raise ModelFormatError(f"truncated file: {len(blob)} bytes, expected {expected}")
    (stored_crc,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(blob[: expected - 4]) != stored_crc:
        raise ModelFormatError("checksum failure: file is corrupt")
    mu = np.frombuffer(blob, dtype="<f8", count=k, offset=off).copy()
    off += 8 * k
    sigma = np.frombuffer(blob, dtype="<f8", count=k * k, offset=off).reshape(k, k).copy()
    return _derive(mu, sigma, int(n_train))
