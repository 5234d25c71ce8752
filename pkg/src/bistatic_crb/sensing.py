"""Bistatic target geometry, sensing channels, per-bin means and their Jacobians.

Parameter vector layout (``K`` UEs, ``n = 4(K+1)+3`` entries)::

    [theta_BS, theta_1..theta_K, psi, tau_BS, tau_1..tau_K, omega_x, omega_y,
     Re beta_BS, Re beta_1..K, Im beta_BS, Im beta_1..K]

Velocity enters only through the Doppler shifts; the line-of-sight unit
vectors that project it are fixed by the scenario geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .comm_channel import SPEED_OF_LIGHT
from .errors import ContractError, GeometryError
from .scenario import ScenarioConfig


def steering(array_size: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, entry m = exp(j pi m sin(angle))."""
    return np.exp(1j * np.pi * np.arange(array_size) * np.sin(angle))


def steering_derivative(array_size: int, angle: float) -> np.ndarray:
    m = np.arange(array_size)
    return 1j * np.pi * m * np.cos(angle) * steering(array_size, angle)


@dataclass(frozen=True)
class DopplerGeometry:
    """Fixed projections mapping the target velocity to Doppler shifts."""

    u_bs: np.ndarray          # t / |t|
    u_rx: np.ndarray          # (q - t) / |q - t|
    u_ue: np.ndarray          # rows (t - e_k) / |t - e_k|
    ue_vel: np.ndarray        # rows omega_k
    wavelength: float

    def grad_bs(self) -> np.ndarray:
        """d f_D / d omega."""
        return (self.u_bs - self.u_rx) / self.wavelength

    def grad_ue(self) -> np.ndarray:
        """Rows d f_{D,k} / d omega."""
        return (self.u_ue - self.u_rx[None, :]) / self.wavelength

    def f_bs(self, omega) -> float:
        return float(self.grad_bs() @ np.asarray(omega))

    def f_ue(self, omega) -> np.ndarray:
        omega = np.asarray(omega)
        own = np.einsum("kd,kd->k", self.u_ue, self.ue_vel)
        return (self.grad_ue() @ omega - own / self.wavelength)


@dataclass(frozen=True)
class TargetParams:
    theta: np.ndarray     # [theta_BS, theta_1..theta_K]
    psi: float
    tau: np.ndarray       # [tau_BS, tau_1..tau_K]
    omega: np.ndarray
    beta: np.ndarray      # complex [beta_BS, beta_1..beta_K]
    doppler: DopplerGeometry = field(repr=False)

    @property
    def num_ues(self) -> int:
        return self.theta.size - 1

    @property
    def dim(self) -> int:
        return 4 * (self.num_ues + 1) + 3

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.theta, [self.psi], self.tau, self.omega,
                               self.beta.real, self.beta.imag])

    def with_vector(self, vec) -> "TargetParams":
        idx = ParamIndex(self.num_ues)
        vec = np.asarray(vec, dtype=float)
        if vec.size != idx.dim:
            raise ContractError(f"expected {idx.dim} parameters, got {vec.size}")
        return replace(
            self,
            theta=vec[idx.theta].copy(),
            psi=float(vec[idx.psi]),
            tau=vec[idx.tau].copy(),
            omega=vec[idx.omega].copy(),
            beta=vec[idx.beta_re] + 1j * vec[idx.beta_im],
        )


class ParamIndex:
    """Slices into the flattened parameter vector for ``num_ues`` UEs."""

    def __init__(self, num_ues: int):
        k1 = num_ues + 1
        self.num_ues = num_ues
        self.theta = slice(0, k1)
        self.psi = k1
        self.tau = slice(k1 + 1, 2 * k1 + 1)
        self.omega = slice(2 * k1 + 1, 2 * k1 + 3)
        self.beta_re = slice(2 * k1 + 3, 3 * k1 + 3)
        self.beta_im = slice(3 * k1 + 3, 4 * k1 + 3)
        self.dim = 4 * k1 + 3

    def theta_of(self, path: int) -> int:
        """Index of theta for path 0 (BS) or UE path k >= 1."""
        return path

    def tau_of(self, path: int) -> int:
        return self.tau.start + path

    def beta_re_of(self, path: int) -> int:
        return self.beta_re.start + path

    def beta_im_of(self, path: int) -> int:
        return self.beta_im.start + path

    def names(self) -> list[str]:
        paths = ["BS"] + [str(k + 1) for k in range(self.num_ues)]
        return ([f"theta_{p}" for p in paths] + ["psi"] + [f"tau_{p}" for p in paths]
                + ["omega_x", "omega_y"] + [f"re_beta_{p}" for p in paths]
                + [f"im_beta_{p}" for p in paths])


def beta_variance(cfg: ScenarioConfig, range_tx: float, range_rx: float) -> float:
    """Radar-equation power c^2 rcs / ((4 pi)^3 f_c^2 r^4).

    ``gain_range`` picks r^4: "path_length" uses the full bistatic path
    (r_tx + r_rx)^4, "leg_product" the two-leg product r_tx^2 r_rx^2.
    """
    if cfg.gain_range == "path_length":
        r4 = (range_tx + range_rx) ** 4
    else:
        r4 = range_tx ** 2 * range_rx ** 2
    return SPEED_OF_LIGHT ** 2 * cfg.rcs / ((4 * np.pi) ** 3 * cfg.f_c ** 2 * r4)


def _unit(vec, what: str) -> tuple[np.ndarray, float]:
    norm = float(np.linalg.norm(vec))
    if norm < 1e-9:
        raise GeometryError(f"target coincides with {what}")
    return np.asarray(vec) / norm, norm


def derive_geometry(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> TargetParams:
    """True target parameters for the scenario.

    Gains are drawn from ``rng`` (default: seeded by ``cfg.rng_seed``) as a
    standardized complex draw scaled by the radar-equation amplitude, so a
    fixed seed gives a geometry-consistent gain across target positions.
    """
    rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
    t = np.asarray(cfg.target_pos, dtype=float)
    q = np.asarray(cfg.bs2_pos, dtype=float)
    bs1 = np.asarray(cfg.bs1_pos, dtype=float)
    ues = cfg.ue_pos_array

    u_bs, r_bs = _unit(t - bs1, "BS1")
    u_rx, r_rx = _unit(q - t, "BS2")
    u_ue = np.zeros((cfg.num_ues, 2))
    r_ue = np.zeros(cfg.num_ues)
    for k in range(cfg.num_ues):
        u_ue[k], r_ue[k] = _unit(t - ues[k], f"UE {k}")

    theta = np.concatenate([[np.arctan2(u_bs[1], u_bs[0])], np.arctan2(u_ue[:, 1], u_ue[:, 0])])
    psi = float(np.arctan2(u_rx[1], u_rx[0]))
    tau = np.concatenate([[r_bs + r_rx], r_ue + r_rx]) / SPEED_OF_LIGHT

    ranges_tx = np.concatenate([[r_bs], r_ue])
    std = np.sqrt([beta_variance(cfg, r, r_rx) for r in ranges_tx])
    draw = (rng.standard_normal(ranges_tx.size) + 1j * rng.standard_normal(ranges_tx.size)) / np.sqrt(2)
    if cfg.gain_model == "rms":
        draw = draw / np.abs(draw)
    beta = std * draw

    doppler = DopplerGeometry(
        u_bs=u_bs, u_rx=u_rx, u_ue=u_ue,
        ue_vel=np.asarray(cfg.ue_vel, dtype=float).reshape(-1, 2),
        wavelength=cfg.wavelength,
    )
    return TargetParams(theta=theta, psi=psi, tau=tau,
                        omega=np.asarray(cfg.target_vel, dtype=float), beta=beta, doppler=doppler)


# --- channels ----------------------------------------------------------------

def _path_phase(cfg: ScenarioConfig, f_d: float, tau: float, i, v):
    return np.exp(-2j * np.pi * f_d * cfg.symbol_duration * np.asarray(i)
                  + 2j * np.pi * cfg.delta_f * np.asarray(v) * tau)


def channel_g_bs(params: TargetParams, i: int, v: int, cfg: ScenarioConfig) -> np.ndarray:
    """BS1-target-BS2 channel, ``[m_bs_rx, m_bs_tx]``."""
    f_d = params.doppler.f_bs(params.omega)
    gain = params.beta[0] * _path_phase(cfg, f_d, params.tau[0], i, v)
    return gain * np.outer(steering(cfg.m_bs_rx, params.psi),
                           steering(cfg.m_bs_tx, params.theta[0]).conj())


def channel_g_ue(params: TargetParams, k: int, i: int, v: int, cfg: ScenarioConfig) -> np.ndarray:
    """UE k-target-BS2 channel, ``[m_bs_rx, m_ue]`` (k is zero-based)."""
    f_d = params.doppler.f_ue(params.omega)[k]
    gain = params.beta[k + 1] * _path_phase(cfg, f_d, params.tau[k + 1], i, v)
    return gain * np.outer(steering(cfg.m_bs_rx, params.psi),
                           steering(cfg.m_ue, params.theta[k + 1]).conj())


@dataclass
class BinContext:
    """Everything attached to one time-frequency bin.

    DL: ``precoder`` is ``[m_bs_tx, S]`` with unit-norm columns, ``power`` and
    ``symbols`` have length S. UL: ``precoder`` is ``[K, m_ue, m_ue]``,
    ``power`` is ``[K, m_ue]`` and ``symbols`` stacks the K UE vectors.
    """

    i: int
    v: int
    link: str
    precoder: np.ndarray
    power: np.ndarray
    symbols: np.ndarray
    clutter_cov: np.ndarray | None = None
    known_symbols: bool = True


def _check(ctx: BinContext, cfg: ScenarioConfig) -> None:
    if ctx.link == "DL":
        if ctx.precoder.shape[0] != cfg.m_bs_tx or ctx.precoder.shape[1] != ctx.symbols.size \
                or ctx.power.size != ctx.symbols.size:
            raise ContractError("DL precoder/power/symbol dimensions disagree")
    elif ctx.link == "UL":
        if ctx.precoder.shape != (cfg.num_ues, cfg.m_ue, cfg.m_ue) \
                or ctx.power.shape != (cfg.num_ues, cfg.m_ue) \
                or ctx.symbols.size != cfg.num_ues * cfg.m_ue:
            raise ContractError("UL precoder/power/symbol dimensions disagree")
    else:
        raise ContractError(f"unknown link {ctx.link!r}")


def mean_vector(ctx: BinContext, params: TargetParams, cfg: ScenarioConfig) -> np.ndarray:
    """Noise- and clutter-free BS2 observation for the bin."""
    _check(ctx, cfg)
    if ctx.link == "DL":
        return channel_g_bs(params, ctx.i, ctx.v, cfg) @ ctx.precoder @ (ctx.power * ctx.symbols)
    x = ctx.symbols.reshape(cfg.num_ues, cfg.m_ue)
    mu = np.zeros(cfg.m_bs_rx, dtype=complex)
    for k in range(cfg.num_ues):
        mu += channel_g_ue(params, k, ctx.i, ctx.v, cfg) @ ctx.precoder[k] @ (ctx.power[k] * x[k])
    return mu


def jacobian_eta(ctx: BinContext, params: TargetParams, cfg: ScenarioConfig) -> np.ndarray:
    """Analytic ``d mu / d eta^T``, shape ``[m_bs_rx, 4(K+1)+3]``."""
    _check(ctx, cfg)
    idx = ParamIndex(cfg.num_ues)
    jac = np.zeros((cfg.m_bs_rx, idx.dim), dtype=complex)
    a_rx = steering(cfg.m_bs_rx, params.psi)
    da_rx = steering_derivative(cfg.m_bs_rx, params.psi)
    T = cfg.symbol_duration
    dop = params.doppler

    if ctx.link == "DL":
        paths = [(0, dop.f_bs(params.omega), dop.grad_bs(),
                  steering(cfg.m_bs_tx, params.theta[0]),
                  steering_derivative(cfg.m_bs_tx, params.theta[0]),
                  ctx.precoder @ (ctx.power * ctx.symbols))]
    else:
        x = ctx.symbols.reshape(cfg.num_ues, cfg.m_ue)
        f_ue, g_ue = dop.f_ue(params.omega), dop.grad_ue()
        paths = [(k + 1, f_ue[k], g_ue[k],
                  steering(cfg.m_ue, params.theta[k + 1]),
                  steering_derivative(cfg.m_ue, params.theta[k + 1]),
                  ctx.precoder[k] @ (ctx.power[k] * x[k]))
                 for k in range(cfg.num_ues)]

    for path, f_d, grad, a_tx, da_tx, tx in paths:
        phase = _path_phase(cfg, f_d, params.tau[path], ctx.i, ctx.v)
        c = a_tx.conj() @ tx
        c_theta = da_tx.conj() @ tx
        unit_mu = phase * c * a_rx                # d mu / d beta (complex)
        mu = params.beta[path] * unit_mu
        jac[:, idx.theta_of(path)] = params.beta[path] * phase * c_theta * a_rx
        jac[:, idx.psi] += params.beta[path] * phase * c * da_rx
        jac[:, idx.tau_of(path)] = 2j * np.pi * cfg.delta_f * ctx.v * mu
        jac[:, idx.omega] += np.outer(-2j * np.pi * T * ctx.i * mu, grad)
        jac[:, idx.beta_re_of(path)] = unit_mu
        jac[:, idx.beta_im_of(path)] = 1j * unit_mu
    return jac


def jacobian_symbols(ctx: BinContext, params: TargetParams, cfg: ScenarioConfig) -> np.ndarray:
    """``d mu / d z^T`` with z = [Re x; Im x], shape ``[m_bs_rx, 2 dim(x)]``."""
    _check(ctx, cfg)
    if ctx.link == "DL":
        base = channel_g_bs(params, ctx.i, ctx.v, cfg) @ ctx.precoder * ctx.power[None, :]
    else:
        blocks = [channel_g_ue(params, k, ctx.i, ctx.v, cfg) @ ctx.precoder[k] * ctx.power[k][None, :]
                  for k in range(cfg.num_ues)]
        base = np.concatenate(blocks, axis=1)
    return np.concatenate([base, 1j * base], axis=1)
