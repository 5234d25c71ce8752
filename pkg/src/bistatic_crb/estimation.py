"""Pilot despreading, multi-block MMSE channel estimation, combining, precoding and SE.

Stacked observations follow the trajectory convention of ``comm_channel``:
block index outermost, newest block first. With that ordering the trajectory
covariance is kron(T(zeta), C) and the cross-covariance between the current
channel and the trajectory is kron(zeta^T, C).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .comm_channel import SpatialCovariance, sample_trajectory, ue_spatial_covariance, zeta_vector
from .errors import ConfigError, ContractError, DomainError
from .numerics import kronecker, toeplitz_hermitian
from .scenario import ScenarioConfig, pathloss, pilot_subcarrier_mask, ue_amplitude


# --- pilots ------------------------------------------------------------------

@dataclass(frozen=True)
class PilotBook:
    pilots: tuple  # K arrays [m_ue, tau_p]

    @property
    def tau_p(self) -> int:
        return self.pilots[0].shape[1] if self.pilots else 0


def generate_pilots(num_ues: int, m_ue: int, tau_p: int) -> PilotBook:
    """Disjoint rows of the tau_p-point DFT matrix, so each block has gram tau_p I."""
    if tau_p < num_ues * m_ue:
        raise ConfigError(f"tau_p={tau_p} cannot hold {num_ues} x {m_ue} orthogonal pilots")
    n = np.arange(tau_p)
    dft = np.exp(-2j * np.pi * np.outer(n, n) / tau_p) if tau_p else np.zeros((0, 0))
    return PilotBook(tuple(dft[k * m_ue:(k + 1) * m_ue] for k in range(num_ues)))


def despread(y: np.ndarray, pilot: np.ndarray) -> np.ndarray:
    """Y pilot^H / sqrt(tau_p)."""
    if y.shape[1] != pilot.shape[1]:
        raise ContractError("observation and pilot lengths differ")
    return y @ pilot.conj().T / np.sqrt(pilot.shape[1])


def pilot_matrix(nu_p: int, pilot_precoder: np.ndarray, m_bs: int) -> np.ndarray:
    """D = 1_{nu_p} kron (W P)^T kron I_{m_bs}."""
    return kronecker(kronecker(np.ones((nu_p, 1)), pilot_precoder.T), np.eye(m_bs))


# --- MMSE estimation ----------------------------------------------------------

@dataclass(frozen=True)
class ChannelEstimate:
    h_hat: np.ndarray
    xi_hat: np.ndarray
    xi_tilde: np.ndarray


@dataclass(frozen=True)
class MmseFilter:
    """Linear map from stacked observations to the current-block estimate."""

    gain: np.ndarray          # [n, p_tot * rows(D)]
    xi_hat: np.ndarray
    xi_tilde: np.ndarray
    obs_scale: float          # alpha sqrt(tau_p)
    d_stack: np.ndarray = field(repr=False)

    def apply(self, y_stack: np.ndarray) -> np.ndarray:
        """Estimates for one stacked observation or for rows of a batch."""
        return y_stack @ self.gain.T if y_stack.ndim == 2 else self.gain @ y_stack


def mmse_filter(c: np.ndarray, zeta, d: np.ndarray, alpha: float, tau_p: int,
                noise_var: float) -> MmseFilter:
    """Precompute the multi-block MMSE estimator and its covariances.

    ``zeta`` has one entry per stacked block (length p + 1).
    """
    zeta = np.asarray(zeta, dtype=float)
    p_tot = zeta.size
    n = c.shape[0]
    if d.shape[1] != n:
        raise ContractError(f"pilot matrix has {d.shape[1]} columns, channel has {n} entries")
    if not noise_var > 0:
        raise DomainError("noise variance must be positive")
    g = alpha * np.sqrt(tau_p)
    d_stack = kronecker(np.eye(p_tot), d)
    m_cov = kronecker(toeplitz_hermitian(zeta), c)
    e_cross = kronecker(zeta[None, :], c)
    a_bar = g ** 2 * d_stack @ m_cov @ d_stack.conj().T + noise_var * np.eye(d_stack.shape[0])
    ed = e_cross @ d_stack.conj().T
    # gain = g E D^H A^{-1}; A Hermitian PD
    sol = scipy.linalg.solve(a_bar, ed.conj().T, assume_a="pos").conj().T
    xi_hat = g ** 2 * sol @ ed.conj().T
    xi_hat = 0.5 * (xi_hat + xi_hat.conj().T)
    xi_tilde = c - xi_hat
    return MmseFilter(gain=g * sol, xi_hat=xi_hat, xi_tilde=0.5 * (xi_tilde + xi_tilde.conj().T),
                      obs_scale=g, d_stack=d_stack)


def mmse_estimate(y_stack: np.ndarray, c: np.ndarray, zeta, d: np.ndarray, alpha: float,
                  tau_p: int, noise_var: float) -> ChannelEstimate:
    filt = mmse_filter(c, zeta, d, alpha, tau_p, noise_var)
    if y_stack.shape[-1] != filt.gain.shape[1]:
        raise ContractError("stacked observation length does not match the estimator")
    return ChannelEstimate(filt.apply(y_stack), filt.xi_hat, filt.xi_tilde)


def observe(filt: MmseFilter, h_stack: np.ndarray, noise_var: float,
            rng: np.random.Generator) -> np.ndarray:
    """Despread pilot observations g D h + n for stacked channels (rows of a batch)."""
    clean = filt.obs_scale * h_stack @ filt.d_stack.T
    noise = (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return clean + np.sqrt(noise_var / 2) * noise


# --- error statistics ------------------------------------------------------------

def error_gram(xi_tilde: np.ndarray, w_tilde: np.ndarray, m_bs: int) -> np.ndarray:
    """E[H~ W~ H~^H]: entry (m, m') = sum_{u,u'} W~[u,u'] Xi~[(u,m),(u',m')]."""
    m_ue = w_tilde.shape[0]
    blocks = xi_tilde.reshape(m_ue, m_bs, m_ue, m_bs)
    return np.einsum("uv,umvn->mn", w_tilde, blocks)


def error_partial_trace(xi_tilde: np.ndarray, m_bs: int, m_ue: int) -> np.ndarray:
    """E[H~ H~^H], the trace of Xi~ over the UE dimension."""
    return error_gram(xi_tilde, np.eye(m_ue), m_bs)


def as_matrix(h: np.ndarray, m_bs: int) -> np.ndarray:
    """Un-vectorize h (UE antenna outer) into H with shape [m_bs, m_ue]."""
    return h.reshape(-1, m_bs).T


# --- combining and precoding -------------------------------------------------------

def mmse_combiner(h_hats, error_grams, alpha, w_bar, noise_var: float) -> list:
    """Per-UE combiners (sum_l a_l^2 (H_l W~_l H_l^H + E_l) + s2 I)^{-1} H_k W_bar_k."""
    m_bs = h_hats[0].shape[0]
    inner = noise_var * np.eye(m_bs, dtype=complex)
    for h, e, a, wb in zip(h_hats, error_grams, alpha, w_bar):
        inner += a ** 2 * (h @ wb @ wb.conj().T @ h.conj().T + e)
    return [np.linalg.solve(inner, h @ wb) for h, wb in zip(h_hats, w_bar)]


def mmse_precoder(h_hats, error_traces, alpha, noise_var: float) -> np.ndarray:
    """Stacked DL precoder ``[m_bs, K m_ue]`` with unit-norm columns."""
    m_bs = h_hats[0].shape[0]
    inner = noise_var * np.eye(m_bs, dtype=complex)
    for h, e, a in zip(h_hats, error_traces, alpha):
        inner += a ** 2 * (h @ h.conj().T + e)
    f = np.linalg.solve(inner, np.concatenate([a * h for h, a in zip(h_hats, alpha)], axis=1))
    norms = np.linalg.norm(f, axis=0)
    norms[norms == 0] = 1.0
    return f / norms


def uplink_se(h_hats, error_grams, alpha, w_bar, noise_var: float) -> np.ndarray:
    """Per-UE log2 det(I + a_k^2 W_k^H H_k^H Psi_k^{-1} H_k W_k) with Psi_k excluding UE k's signal."""
    m_bs = h_hats[0].shape[0]
    total = noise_var * np.eye(m_bs, dtype=complex)
    signal = []
    for h, e, a, wb in zip(h_hats, error_grams, alpha, w_bar):
        s = a ** 2 * h @ wb @ wb.conj().T @ h.conj().T
        signal.append(s)
        total += s + a ** 2 * e
    out = np.zeros(len(h_hats))
    for k, (h, a, wb) in enumerate(zip(h_hats, alpha, w_bar)):
        psi = total - signal[k]
        hw = a * h @ wb
        gram = hw.conj().T @ np.linalg.solve(psi, hw)
        gram = 0.5 * (gram + gram.conj().T) + np.eye(gram.shape[0])
        out[k] = np.linalg.slogdet(gram)[1] / np.log(2)
    return out


# --- per-UE estimation setup -------------------------------------------------------

@dataclass(frozen=True)
class UeEstimator:
    """Channel statistics and the MMSE filter for one UE."""

    cov: SpatialCovariance
    zeta: np.ndarray
    alpha: float
    filt: MmseFilter


def build_estimators(cfg: ScenarioConfig, depth: int | None = None) -> list[UeEstimator]:
    """MMSE estimators for every UE with depth ``cfg.p`` (or ``depth``)."""
    depth = cfg.p if depth is None else depth
    rho = ue_amplitude(cfg)
    d = pilot_matrix(cfg.nu_p, rho * np.eye(cfg.m_ue), cfg.m_bs_tx)
    out = []
    for k in range(cfg.num_ues):
        cov = ue_spatial_covariance(cfg, k)
        zeta = zeta_vector(cfg, k, depth)
        alpha = pathloss(cfg, k)
        filt = mmse_filter(cov.c_full, zeta, d, alpha, cfg.tau_p, cfg.noise_var)
        out.append(UeEstimator(cov=cov, zeta=zeta, alpha=alpha, filt=filt))
    return out


def pre_log_factors(cfg: ScenarioConfig) -> np.ndarray:
    """beta_v for each subcarrier of one UE PRB."""
    pil = pilot_subcarrier_mask(cfg)[:cfg.v_cho]
    return np.where(pil, 1 - (cfg.tau_p + cfg.tau_dl) / cfg.tau_c, 1 - cfg.tau_dl / cfg.tau_c)


# --- spectral efficiency -----------------------------------------------------------

@dataclass(frozen=True)
class SeResult:
    mean_se: np.ndarray          # [K, v_cho] pre-log weighted bits/s/Hz
    sum_se: np.ndarray           # [n_real]
    per_ue: np.ndarray           # [n_real, K] log-det SE before pre-log


def spectral_efficiency(cfg: ScenarioConfig, realizations: int, rng: np.random.Generator,
                        perfect_csi: bool = False) -> SeResult:
    """Monte-Carlo uplink SE with aged, multi-block MMSE channel estimates.

    Subcarriers of a PRB share one channel, so each realization evaluates the
    log-det once per UE and the subcarrier dependence enters only through the
    pre-log. Sum SE averages the pre-log over the PRB.
    """
    if realizations < 1:
        raise DomainError("need at least one realization")
    if cfg.num_ues == 0:
        raise ConfigError("spectral efficiency needs at least one UE")
    ests = build_estimators(cfg)
    rho = ue_amplitude(cfg)
    w_bar = [rho * np.eye(cfg.m_ue)] * cfg.num_ues
    alpha = [e.alpha for e in ests]
    m = cfg.m_bs_tx
    if perfect_csi:
        grams = [np.zeros((m, m), dtype=complex)] * cfg.num_ues
    else:
        grams = [error_gram(e.filt.xi_tilde, w @ w.conj().T, m) for e, w in zip(ests, w_bar)]

    per_ue = np.zeros((realizations, cfg.num_ues))
    for r in range(realizations):
        h_hats = []
        for e in ests:
            traj = sample_trajectory(e.cov, e.zeta, e.zeta.size, rng)
            y = observe(e.filt, traj[None, :], cfg.noise_var, rng)[0]
            h = traj[:e.cov.dim] if perfect_csi else e.filt.apply(y)
            h_hats.append(as_matrix(h, m))
        per_ue[r] = uplink_se(h_hats, grams, alpha, w_bar, cfg.noise_var)

    beta_v = pre_log_factors(cfg)
    mean_se = per_ue.mean(axis=0)[:, None] * beta_v[None, :]
    sum_se = per_ue.sum(axis=1) * beta_v.mean()
    return SeResult(mean_se=mean_se, sum_se=sum_se, per_ue=per_ue)
