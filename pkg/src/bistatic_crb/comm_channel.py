"""UE-BS1 channel statistics and correlated channel trajectories.

Channels use the column-stacked vectorization h = vec(H) with H of shape
``[m_bs_tx, m_ue]``, so index ``u * m_bs_tx + m`` addresses BS antenna m and UE
antenna u, and C = kron(C_UE, C_BS). Stacked trajectories put the block index
outermost: ``[h_b; h_{b-1}; ...; h_{b-p}]`` with covariance kron(T(zeta), C).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError
from .numerics import bessel_j0, kronecker, psd_sqrt, toeplitz_hermitian

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import ScenarioConfig

SPEED_OF_LIGHT = 3e8
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


def build_spatial_covariance(cluster_centers, angular_spread: float, array_size: int) -> np.ndarray:
    """Gaussian local-scattering covariance of a half-wavelength ULA.

    Each cluster contributes E[a(phi) a(phi)^H] with phi ~ N(centre, spread^2);
    clusters are weighted equally. The trace equals ``array_size``.
    """
    centers = np.atleast_1d(np.asarray(cluster_centers, dtype=float))
    if centers.size == 0:
        raise DomainError("need at least one cluster")
    if angular_spread < 0:
        raise DomainError("angular spread must be non-negative")
    lag = np.arange(array_size)[:, None] - np.arange(array_size)[None, :]
    cov = np.zeros((array_size, array_size), dtype=complex)
    for phi0 in centers:
        if angular_spread == 0.0:
            a = np.exp(1j * np.pi * np.arange(array_size) * np.sin(phi0))
            cov += np.outer(a, a.conj())
            continue
        phis = phi0 + np.sqrt(2.0) * angular_spread * _GH_NODES
        phase = np.exp(1j * np.pi * lag[None, :, :] * np.sin(phis)[:, None, None])
        cov += np.tensordot(_GH_WEIGHTS / np.sqrt(np.pi), phase, axes=1)
    cov /= centers.size
    cov = 0.5 * (cov + cov.conj().T)
    return cov * (array_size / np.real(np.trace(cov)))


@dataclass(frozen=True)
class SpatialCovariance:
    c_bs: np.ndarray
    c_ue: np.ndarray

    @cached_property
    def c_full(self) -> np.ndarray:
        return kronecker(self.c_ue, self.c_bs)

    @cached_property
    def factor(self) -> np.ndarray:
        return psd_sqrt(self.c_full)

    @property
    def dim(self) -> int:
        return self.c_full.shape[0]


def ue_spatial_covariance(cfg: ScenarioConfig, k: int) -> SpatialCovariance:
    """C_k for UE k from its scattering clusters as seen from BS1."""
    pts = np.asarray(cfg.ue_clusters[k], dtype=float).reshape(-1, 2)
    angles = np.arctan2(pts[:, 1] - cfg.bs1_pos[1], pts[:, 0] - cfg.bs1_pos[0])
    c_bs = build_spatial_covariance(angles, cfg.channel_spread, cfg.m_bs_tx)
    ue_angles = cfg.ue_side_clusters[k] if cfg.ue_side_clusters else ()
    if len(ue_angles) == 0:
        c_ue = np.eye(cfg.m_ue, dtype=complex)
    else:
        c_ue = build_spatial_covariance(ue_angles, cfg.channel_spread, cfg.m_ue)
    return SpatialCovariance(c_bs=c_bs, c_ue=c_ue)


def temporal_zeta(cfg: ScenarioConfig, k: int, lag: int) -> float:
    """Block-lag correlation J0(2 pi tau_c T lag |w_k| / lambda)."""
    if lag < 0:
        raise DomainError("lag must be non-negative")
    speed = float(np.linalg.norm(cfg.ue_vel[k]))
    wavelength = SPEED_OF_LIGHT / cfg.f_c
    return bessel_j0(2.0 * np.pi * cfg.tau_c * cfg.symbol_duration * lag * speed / wavelength)


def zeta_vector(cfg: ScenarioConfig, k: int, depth: int) -> np.ndarray:
    """[zeta(0), ..., zeta(depth)]."""
    return np.array([temporal_zeta(cfg, k, d) for d in range(depth + 1)])


def temporal_factor(zeta_vec, p_tot: int) -> np.ndarray:
    zeta_vec = np.asarray(zeta_vec, dtype=float)
    if zeta_vec.size < p_tot:
        raise DomainError("zeta vector shorter than the trajectory length")
    return psd_sqrt(toeplitz_hermitian(zeta_vec[:p_tot]))


def sample_trajectory(cov: SpatialCovariance, zeta_vec, p_tot: int,
                      rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw stacked channels ``[h_b; ...; h_{b-p_tot+1}]`` ~ CN(0, kron(T(zeta), C)).

    Returns shape ``[p_tot * n]`` or ``[size, p_tot * n]``.
    """
    lt = temporal_factor(zeta_vec, p_tot)
    lc = cov.factor
    n = lc.shape[0]
    count = 1 if size is None else size
    w = (rng.standard_normal((count, p_tot, n)) + 1j * rng.standard_normal((count, p_tot, n))) / np.sqrt(2)
    # kron(Lt, Lc) @ vec_rowmajor(W) == vec_rowmajor(Lt W Lc^T)
    h = np.einsum("ab,sbc,dc->sad", lt, w, lc, optimize=True).reshape(count, p_tot * n)
    return h[0] if size is None else h
