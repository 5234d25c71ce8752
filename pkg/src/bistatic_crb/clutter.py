"""Structured clutter: spatial covariance at BS2, per-bin covariances, whitening."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comm_channel import build_spatial_covariance
from .errors import ConfigError, DomainError
from .numerics import psd_sqrt, toeplitz_hermitian, whitener

# Fig. 3 clutter patch centres (metres).
DEFAULT_PATCHES = (
    (90.0, -155.884572681199),
    (125.038506682619, -129.481164060957),
    (150.960702230176, -98.0350263027049),
    (169.144671741464, -61.5636257986204),
)


@dataclass(frozen=True)
class ClutterConfig:
    """Clutter statistics. Texture and kappa are linear power ratios."""

    patch_positions: tuple = DEFAULT_PATCHES
    texture: float = 1e-12
    kappa: float = 1e-2
    angular_spread: float = float(np.deg2rad(0.1))
    temporal_corr: float = 0.9
    frequency_corr: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigError("clutter kappa must lie in (0, 1]")
        if self.texture < 0:
            raise ConfigError("clutter texture must be non-negative")
        if not (0.0 <= self.temporal_corr < 1.0 and 0.0 <= self.frequency_corr < 1.0):
            raise ConfigError("clutter correlation coefficients must lie in [0, 1)")
        if len(self.patch_positions) == 0:
            raise ConfigError("at least one clutter patch is required")


def patch_angles(patches, bs2_pos) -> np.ndarray:
    """Patch directions in the same convention as the target angle psi.

    psi is measured as atan2(q - t), so patches use atan2(q - patch).
    """
    pts = np.asarray(patches, dtype=float).reshape(-1, 2)
    d = np.asarray(bs2_pos, dtype=float)[None, :] - pts
    return np.arctan2(d[:, 1], d[:, 0])


def build_spatial_clutter(patches, spread: float, m_rx: int, bs2_pos) -> np.ndarray:
    """Normalized sum of local-scattering covariances, one per clutter patch."""
    angles = patch_angles(patches, bs2_pos)
    if angles.size == 0:
        raise DomainError("at least one clutter patch is required")
    return build_spatial_covariance(angles, spread, m_rx)


@dataclass(frozen=True)
class PerBinClutterCov:
    """R_UL and R_DL for every bin, plus the eigen-structure used for solves.

    Both covariances share B_sp, so R^{-1} is applied through one
    eigendecomposition of B_sp. This keeps the noise-floor directions accurate
    when the clutter-to-noise ratio is ~1e12.
    """

    b_sp: np.ndarray
    scale_ul: float
    scale_dl: float
    noise_var: float
    _vals: np.ndarray = field(repr=False, compare=False, default=None)
    _vecs: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        vals, vecs = np.linalg.eigh(self.b_sp)
        object.__setattr__(self, "_vals", np.clip(vals, 0.0, None))
        object.__setattr__(self, "_vecs", vecs)

    @property
    def r_ul(self) -> np.ndarray:
        return self.scale_ul * self.b_sp + self.noise_var * np.eye(self.b_sp.shape[0])

    @property
    def r_dl(self) -> np.ndarray:
        return self.scale_dl * self.b_sp + self.noise_var * np.eye(self.b_sp.shape[0])

    def cov(self, link: str) -> np.ndarray:
        return self.r_ul if link == "UL" else self.r_dl

    def _spectrum(self, link: str) -> np.ndarray:
        scale = self.scale_ul if link == "UL" else self.scale_dl
        return scale * self._vals + self.noise_var

    def inv_quadratic(self, a: np.ndarray, link: str, b: np.ndarray | None = None) -> np.ndarray:
        """``a^H R^{-1} b`` for the given link (``b`` defaults to ``a``)."""
        b = a if b is None else b
        lam = self._spectrum(link)
        ua = self._vecs.conj().T @ a
        ub = self._vecs.conj().T @ b
        return ua.conj().T @ (ub / lam[:, None] if ub.ndim == 2 else ub / lam)

    def eig_whitener(self, link: str) -> np.ndarray:
        """Symmetric-root whitener; an alternative to the Cholesky factor."""
        lam = self._spectrum(link)
        return (self._vecs / np.sqrt(lam)) @ self._vecs.conj().T


def per_bin_cov(cl: ClutterConfig, b_sp: np.ndarray, noise_var: float) -> PerBinClutterCov:
    """R_DL = cbrt(texture) B_sp + s2 I and R_UL = cbrt(kappa texture) B_sp + s2 I."""
    if not noise_var > 0:
        raise DomainError("noise variance must be positive")
    return PerBinClutterCov(
        b_sp=np.asarray(b_sp),
        scale_ul=float(np.cbrt(cl.kappa * cl.texture)),
        scale_dl=float(np.cbrt(cl.texture)),
        noise_var=float(noise_var),
    )


def noise_only_cov(m_rx: int, noise_var: float) -> PerBinClutterCov:
    """R_UL = R_DL = s2 I."""
    return PerBinClutterCov(
        b_sp=np.zeros((m_rx, m_rx), dtype=complex), scale_ul=0.0, scale_dl=0.0,
        noise_var=float(noise_var),
    )


def whiten_bin(y_or_mu: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Apply the Cholesky whitener of ``cov`` to a vector or to matrix columns."""
    return whitener(cov) @ y_or_mu


def sample_clutter(cl: ClutterConfig, b_sp: np.ndarray, link: str, n_time: int,
                   n_freq: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a clutter cube ``[n_time, n_freq, m_rx]`` (no receiver noise).

    The spatial factor carries the cube-rooted texture so that every bin's
    marginal covariance is exactly the R_UL/R_DL clutter term; the temporal and
    frequency factors are unit-diagonal exponential correlations.
    """
    texture = cl.texture * (cl.kappa if link == "UL" else 1.0)
    spatial = np.cbrt(texture) * np.asarray(b_sp)
    lt = psd_sqrt(toeplitz_hermitian(cl.temporal_corr ** np.arange(n_time)))
    lf = psd_sqrt(toeplitz_hermitian(cl.frequency_corr ** np.arange(n_freq)))
    ls = psd_sqrt(spatial)
    m = spatial.shape[0]
    w = (rng.standard_normal((n_time, n_freq, m)) + 1j * rng.standard_normal((n_time, n_freq, m))) / np.sqrt(2)
    # (Lt ⊗ Lf ⊗ Ls) applied to the cube without forming the product
    out = np.einsum("ta,fb,mc,abc->tfm", lt, lf, ls, w, optimize=True)
    return out
