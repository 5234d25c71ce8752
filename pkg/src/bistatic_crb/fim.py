"""Fisher information for the target parameters under three symbol-knowledge regimes.

Every bin mean has the form a_rx(psi) * s with s a scalar, so the Jacobian is
``a_rx g^T + a_rx' s e_psi^T``. Only three receive-side numbers per link enter
the FIM: ``Q00 = a^H R^-1 a``, ``Q01 = a^H R^-1 a'``, ``Q11 = a'^H R^-1 a'``.
The fast assembler builds the row vectors g and scalars s for whole groups of
bins and contracts them with Q. When the symbols are unknown, the nuisance
columns span the complex line of a_rx, and what survives marginalization is
``2 |s|^2 (Q11 - |Q01|^2 / Q00)`` on the psi entry alone.

The per-bin functions below build the explicit whitened Jacobians instead.
They serve as the reference implementation and as a cross-check.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clutter import PerBinClutterCov, build_spatial_clutter, noise_only_cov, per_bin_cov
from .comm_channel import SPEED_OF_LIGHT, sample_trajectory, zeta_vector
from .errors import ContractError, DomainError
from .estimation import (build_estimators, error_partial_trace, generate_pilots, mmse_precoder,
                         pilot_matrix)
from .numerics import whitener
from .scenario import (FrameSchedule, ScenarioConfig, bs_comm_amplitude, bs_sensing_amplitude,
                       build_schedule, sweep_angle_at, ue_amplitude)
from .sensing import (BinContext, ParamIndex, TargetParams, derive_geometry, jacobian_eta,
                      jacobian_symbols, steering, steering_derivative)

REGIMES = ("clairvoyant", "hybrid", "unknown")
CLUTTER_MODES = ("clutter", "noise_only")
PINV_CUTOFF = 1e-10


# --- per-bin reference path ------------------------------------------------------

def _whitened(ctx: BinContext, jac: np.ndarray) -> np.ndarray:
    if ctx.clutter_cov is None:
        raise ContractError("bin has no covariance attached")
    return whitener(ctx.clutter_cov) @ jac


def fim_clairvoyant_bin(ctx: BinContext, params: TargetParams, cfg: ScenarioConfig) -> np.ndarray:
    """2 Re(J_w^H J_w) for the whitened parameter Jacobian."""
    jw = _whitened(ctx, jacobian_eta(ctx, params, cfg))
    out = 2.0 * np.real(jw.conj().T @ jw)
    return 0.5 * (out + out.T)


def augmented_fim(ctx: BinContext, params: TargetParams, cfg: ScenarioConfig) -> np.ndarray:
    """FIM over [eta; Re x; Im x] for one bin."""
    jac = np.concatenate([jacobian_eta(ctx, params, cfg), jacobian_symbols(ctx, params, cfg)], axis=1)
    jw = _whitened(ctx, jac)
    out = 2.0 * np.real(jw.conj().T @ jw)
    return 0.5 * (out + out.T)


def pinv_psd(mat: np.ndarray, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    """Eigen pseudo-inverse dropping eigenvalues below ``cutoff`` x the largest."""
    vals, vecs = np.linalg.eigh(mat)
    top = vals[-1] if vals.size else 0.0
    keep = vals > cutoff * top if top > 0 else np.zeros_like(vals, dtype=bool)
    return (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T


def schur_complement(aug: np.ndarray, n_eta: int, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    j_ee = aug[:n_eta, :n_eta]
    j_ez = aug[:n_eta, n_eta:]
    out = j_ee - j_ez @ pinv_psd(aug[n_eta:, n_eta:], cutoff) @ j_ez.T
    return 0.5 * (out + out.T)


def fim_effective_bin(ctx: BinContext, params: TargetParams, cfg: ScenarioConfig) -> np.ndarray:
    """Information on eta left after marginalizing the bin's unknown symbols."""
    if ctx.known_symbols:
        raise ContractError("effective FIM requested for a bin with known symbols")
    return schur_complement(augmented_fim(ctx, params, cfg), ParamIndex(cfg.num_ues).dim)


# --- waveform realizations ---------------------------------------------------------

@dataclass(frozen=True)
class Waveform:
    """One draw of every transmitted quantity in the frame.

    ``symbols[i, v]`` holds the DL stream vector on UE subcarriers, the stacked
    UE vectors on UL bins (pilot columns on pilot bins) and the sensing symbol
    in entry 0 on sensing subcarriers.
    """

    symbols: np.ndarray              # [I, V, S]
    dl_precoders: np.ndarray         # [n_blocks, n_prb_ue, m_tx, K m_ue]
    sensing_precoders: np.ndarray    # [I, m_tx]


@dataclass(frozen=True)
class FrameModel:
    """Realization-independent quantities shared by every Monte-Carlo draw."""

    cfg: ScenarioConfig
    schedule: FrameSchedule
    estimators: list = field(repr=False)
    pilots: tuple = field(repr=False)

    @classmethod
    def build(cls, cfg: ScenarioConfig) -> "FrameModel":
        schedule = build_schedule(cfg)
        ests = build_estimators(cfg) if cfg.num_ues and cfg.n_prb_ue and cfg.tau_dl else []
        pilots = generate_pilots(cfg.num_ues, cfg.m_ue, cfg.tau_p).pilots if cfg.num_ues else ()
        return cls(cfg=cfg, schedule=schedule, estimators=ests, pilots=pilots)


def _dl_precoders(model: FrameModel, rng: np.random.Generator) -> np.ndarray:
    """MMSE precoders per (block, PRB) from aged multi-block channel estimates."""
    cfg = model.cfg
    nb, n_prb, m = cfg.n_blocks, cfg.n_prb_ue, cfg.m_bs_tx
    out = np.zeros((nb, n_prb, m, cfg.n_streams), dtype=complex)
    if not model.estimators:
        return out
    p_tot = cfg.p + 1
    length = nb + cfg.p
    # window for block b: trajectory blocks b+p, ..., b (newest first)
    windows = np.arange(nb)[:, None] + cfg.p - np.arange(p_tot)[None, :]
    h_hat = np.zeros((cfg.num_ues, n_prb, nb, m, cfg.m_ue), dtype=complex)
    d = pilot_matrix(cfg.nu_p, ue_amplitude(cfg) * np.eye(cfg.m_ue), m)
    for k, est in enumerate(model.estimators):
        traj = sample_trajectory(est.cov, zeta_vector(cfg, k, length - 1), length, rng, size=n_prb)
        traj = traj.reshape(n_prb, length, est.cov.dim)
        clean = est.filt.obs_scale * traj @ d.T
        noise = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
        obs = clean + np.sqrt(cfg.noise_var / 2) * noise           # [n_prb, length, rows]
        stacked = obs[:, windows, :].reshape(n_prb, nb, -1)
        est_vec = stacked @ est.filt.gain.T                          # [n_prb, nb, dim]
        h_hat[k] = est_vec.reshape(n_prb, nb, cfg.m_ue, m).transpose(0, 1, 3, 2)
    traces = [error_partial_trace(e.filt.xi_tilde, m, cfg.m_ue) for e in model.estimators]
    alpha = [e.alpha for e in model.estimators]
    for b in range(nb):
        for n in range(n_prb):
            out[b, n] = mmse_precoder([h_hat[k, n, b] for k in range(cfg.num_ues)],
                                      traces, alpha, cfg.noise_var)
    return out


def draw_waveform(model: FrameModel, rng: np.random.Generator) -> Waveform:
    """Fresh symbols, channel trajectories and precoders for one realization."""
    cfg, sched = model.cfg, model.schedule
    s = max(cfg.n_streams, 1)
    shape = (cfg.n_symbols, cfg.n_subcarriers, s)
    symbols = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    if model.pilots:
        pil_i, pil_v = np.nonzero(sched.pilot)
        slots = pil_i % cfg.tau_c
        book = np.concatenate(model.pilots, axis=0)                  # [K m_ue, tau_p]
        symbols[pil_i, pil_v, :cfg.n_streams] = book[:, slots].T
    angles = sweep_angle_at(cfg, np.arange(cfg.n_symbols))
    sensing = np.exp(1j * np.pi * np.arange(cfg.m_bs_tx)[None, :] * np.sin(angles)[:, None])
    sensing /= np.sqrt(cfg.m_bs_tx)
    return Waveform(symbols=symbols, dl_precoders=_dl_precoders(model, rng),
                    sensing_precoders=sensing)


# --- structured fast assembly ---------------------------------------------------------

GROUPS = tuple((link, known) for link in ("UL", "DL") for known in (True, False))


@dataclass
class GroupSums:
    """Sufficient statistics of one bin group for the structured FIM."""

    gg: np.ndarray      # sum conj(g) g^T
    gs: np.ndarray      # sum conj(g) s
    ss: float           # sum |s|^2
    gg_free: np.ndarray  # same three over bins without a nuisance direction
    gs_free: np.ndarray
    ss_free: float

    @classmethod
    def zeros(cls, dim: int) -> "GroupSums":
        z = np.zeros((dim, dim), dtype=complex)
        return cls(z, np.zeros(dim, dtype=complex), 0.0, z.copy(), np.zeros(dim, dtype=complex), 0.0)

    def add(self, g: np.ndarray, s: np.ndarray, free: np.ndarray) -> None:
        self.gg += g.conj().T @ g
        self.gs += g.conj().T @ s
        self.ss += float(np.sum(np.abs(s) ** 2))
        if np.any(free):
            gf, sf = g[free], s[free]
            self.gg_free += gf.conj().T @ gf
            self.gs_free += gf.conj().T @ sf
            self.ss_free += float(np.sum(np.abs(sf) ** 2))


def link_quadratics(cov: PerBinClutterCov, psi: float, m_rx: int, link: str) -> np.ndarray:
    """[[Q00, Q01], [Q10, Q11]] for a_rx(psi) and its derivative."""
    basis = np.stack([steering(m_rx, psi), steering_derivative(m_rx, psi)], axis=1)
    return cov.inv_quadratic(basis, link)


def _clair_from(gg, gs, ss, q: np.ndarray, psi_idx: int) -> np.ndarray:
    out = q[0, 0] * gg
    col = q[0, 1] * gs
    out[:, psi_idx] += col
    out[psi_idx, :] += col.conj()
    out[psi_idx, psi_idx] += q[1, 1] * ss
    out = 2.0 * np.real(out)
    return 0.5 * (out + out.T)


def fims_from_sums(sums: dict, quads: dict, psi_idx: int) -> dict:
    """Clairvoyant, hybrid and fully-unknown FIMs from group statistics."""
    dim = next(iter(sums.values())).gg.shape[0]
    clair = {g: np.zeros((dim, dim)) for g in GROUPS}
    eff = {g: np.zeros((dim, dim)) for g in GROUPS}
    for (link, known), gsum in sums.items():
        q = quads[link]
        clair[(link, known)] = _clair_from(gsum.gg, gsum.gs, gsum.ss, q, psi_idx)
        free = _clair_from(gsum.gg_free, gsum.gs_free, gsum.ss_free, q, psi_idx)
        loss = q[1, 1].real - abs(q[0, 1]) ** 2 / q[0, 0].real
        e = free.copy()
        e[psi_idx, psi_idx] += 2.0 * (gsum.ss - gsum.ss_free) * max(loss, 0.0)
        eff[(link, known)] = e
    return {
        "clairvoyant": sum(clair.values()),
        "hybrid": sum(clair[g] if g[1] else eff[g] for g in GROUPS),
        "unknown": sum(eff.values()),
    }


def _path_tables(params: TargetParams, cfg: ScenarioConfig):
    """Per-path Doppler, Doppler gradient and transmit steering pair."""
    dop = params.doppler
    paths = [(dop.f_bs(params.omega), dop.grad_bs(),
              steering(cfg.m_bs_tx, params.theta[0]), steering_derivative(cfg.m_bs_tx, params.theta[0]))]
    f_ue, g_ue = dop.f_ue(params.omega), dop.grad_ue()
    for k in range(cfg.num_ues):
        paths.append((f_ue[k], g_ue[k], steering(cfg.m_ue, params.theta[k + 1]),
                      steering_derivative(cfg.m_ue, params.theta[k + 1])))
    return paths


def group_sums(model: FrameModel, params: TargetParams, wf: Waveform,
               bins: np.ndarray | None = None, chunk: int = 20) -> dict:
    """Accumulate group statistics over all bins (or a boolean ``[I, V]`` subset)."""
    cfg, sched = model.cfg, model.schedule
    idx = ParamIndex(cfg.num_ues)
    sums = {g: GroupSums.zeros(idx.dim) for g in GROUPS}
    paths = _path_tables(params, cfg)
    v_all = np.arange(cfg.n_subcarriers)
    v_ue = cfg.n_ue_subcarriers
    prb = v_all[:v_ue] // cfg.v_cho
    rho_c, rho_s, rho_u = bs_comm_amplitude(cfg), bs_sensing_amplitude(cfg), ue_amplitude(cfg)
    T = cfg.symbol_duration
    known_mask = sched.known_in_hybrid
    s_ue = cfg.n_streams

    # per-(block, PRB) DL coefficients a^H F and a'^H F
    f_dl = wf.dl_precoders
    a_bs, da_bs = paths[0][2], paths[0][3]
    u_dl = rho_c * np.einsum("m,bnms->bns", a_bs.conj(), f_dl)
    ut_dl = rho_c * np.einsum("m,bnms->bns", da_bs.conj(), f_dl)
    u_s = rho_s * wf.sensing_precoders @ a_bs.conj()
    ut_s = rho_s * wf.sensing_precoders @ da_bs.conj()

    for start in range(0, cfg.n_symbols, chunk):
        ii = np.arange(start, min(start + chunk, cfg.n_symbols))
        ni = ii.size
        x = wf.symbols[ii]
        c = np.zeros((cfg.num_ues + 1, ni, cfg.n_subcarriers), dtype=complex)
        ct = np.zeros_like(c)
        nuis = np.zeros((ni, cfg.n_subcarriers))
        dl = sched.dl[ii]
        # BS path on UE subcarriers (DL times only)
        if v_ue and s_ue:
            blk = ii // cfg.tau_c
            u = u_dl[blk][:, prb, :]
            ut = ut_dl[blk][:, prb, :]
            xd = x[:, :v_ue, :s_ue]
            m = dl[:, :v_ue]
            c[0, :, :v_ue] = np.where(m, np.einsum("ivs,ivs->iv", u, xd), 0)
            ct[0, :, :v_ue] = np.where(m, np.einsum("ivs,ivs->iv", ut, xd), 0)
            nuis[:, :v_ue] = np.where(m, abs(params.beta[0]) * np.linalg.norm(u, axis=2), 0)
        # sensing subcarriers
        c[0, :, v_ue:] = u_s[ii, None] * x[:, v_ue:, 0]
        ct[0, :, v_ue:] = ut_s[ii, None] * x[:, v_ue:, 0]
        nuis[:, v_ue:] = abs(params.beta[0] * u_s[ii, None])
        # UE paths on UL bins
        ul = sched.ul[ii]
        for k in range(cfg.num_ues):
            a_u, da_u = paths[k + 1][2], paths[k + 1][3]
            xk = x[:, :, k * cfg.m_ue:(k + 1) * cfg.m_ue]
            c[k + 1] = np.where(ul, rho_u * xk @ a_u.conj(), 0)
            ct[k + 1] = np.where(ul, rho_u * xk @ da_u.conj(), 0)
            nuis = np.where(ul, np.maximum(nuis, abs(params.beta[k + 1]) * rho_u), nuis)

        g = np.zeros((ni, cfg.n_subcarriers, idx.dim), dtype=complex)
        s_tot = np.zeros((ni, cfg.n_subcarriers), dtype=complex)
        for p, (f_d, grad, _, _) in enumerate(paths):
            phase = np.exp(-2j * np.pi * f_d * T * ii[:, None]
                           + 2j * np.pi * cfg.delta_f * v_all[None, :] * params.tau[p])
            unit = phase * c[p]
            s_p = params.beta[p] * unit
            s_tot += s_p
            g[:, :, idx.theta_of(p)] = params.beta[p] * phase * ct[p]
            g[:, :, idx.tau_of(p)] = 2j * np.pi * cfg.delta_f * v_all[None, :] * s_p
            g[:, :, idx.omega] += (-2j * np.pi * T * ii[:, None] * s_p)[:, :, None] * grad[None, None, :]
            g[:, :, idx.beta_re_of(p)] = unit
            g[:, :, idx.beta_im_of(p)] = 1j * unit

        sel = np.ones((ni, cfg.n_subcarriers), dtype=bool) if bins is None else bins[ii]
        for link, lmask in (("UL", ul), ("DL", dl)):
            for known in (True, False):
                m = sel & lmask & (known_mask[ii] == known)
                if np.any(m):
                    sums[(link, known)].add(g[m], s_tot[m], nuis[m] == 0)
    return sums


def assemble_fims(model: FrameModel, params: TargetParams, wf: Waveform, covs: dict,
                  bins: np.ndarray | None = None) -> dict:
    """FIMs for every regime and every covariance in ``covs`` (name -> PerBinClutterCov)."""
    cfg = model.cfg
    sums = group_sums(model, params, wf, bins)
    psi_idx = ParamIndex(cfg.num_ues).psi
    out = {}
    for name, cov in covs.items():
        quads = {link: link_quadratics(cov, params.psi, cfg.m_bs_rx, link) for link in ("UL", "DL")}
        for regime, fim in fims_from_sums(sums, quads, psi_idx).items():
            out[(regime, name)] = fim
    return out


def assemble_fim(regime: str, schedule: FrameSchedule, params: TargetParams, cfg: ScenarioConfig,
                 waveform: Waveform, cov: PerBinClutterCov) -> np.ndarray:
    """Single-regime convenience wrapper around the structured assembler."""
    if regime not in REGIMES:
        raise ContractError(f"unknown regime {regime!r}")
    model = FrameModel(cfg=cfg, schedule=schedule, estimators=[], pilots=())
    return assemble_fims(model, params, waveform, {"cov": cov})[(regime, "cov")]


def bin_context(model: FrameModel, wf: Waveform, i: int, v: int, cov: PerBinClutterCov,
                known: bool) -> BinContext:
    """Explicit per-bin context matching the structured assembler's conventions."""
    cfg, sched = model.cfg, model.schedule
    if sched.ul[i, v]:
        eye = np.tile(np.eye(cfg.m_ue, dtype=complex), (cfg.num_ues, 1, 1))
        power = np.full((cfg.num_ues, cfg.m_ue), ue_amplitude(cfg))
        return BinContext(i, v, "UL", eye, power, wf.symbols[i, v, :cfg.n_streams].copy(),
                          cov.r_ul, known)
    if v < cfg.n_ue_subcarriers:
        f = wf.dl_precoders[i // cfg.tau_c, v // cfg.v_cho]
        power = np.full(cfg.n_streams, bs_comm_amplitude(cfg))
        return BinContext(i, v, "DL", f, power, wf.symbols[i, v, :cfg.n_streams].copy(),
                          cov.r_dl, known)
    f = wf.sensing_precoders[i][:, None]
    return BinContext(i, v, "DL", f, np.array([bs_sensing_amplitude(cfg)]),
                      wf.symbols[i, v, :1].copy(), cov.r_dl, known)


def assemble_fim_reference(regime: str, model: FrameModel, params: TargetParams, wf: Waveform,
                           cov: PerBinClutterCov, bins: np.ndarray | None = None) -> np.ndarray:
    """Bin-by-bin assembly with explicit Jacobians; slow, for validation."""
    cfg, sched = model.cfg, model.schedule
    dim = ParamIndex(cfg.num_ues).dim
    total = np.zeros((dim, dim))
    known_mask = sched.known_in_hybrid
    for i in range(cfg.n_symbols):
        for v in range(cfg.n_subcarriers):
            if bins is not None and not bins[i, v]:
                continue
            if not (sched.ul[i, v] or sched.dl[i, v]):
                continue
            known = regime == "clairvoyant" or (regime == "hybrid" and known_mask[i, v])
            ctx = bin_context(model, wf, i, v, cov, known)
            if known:
                total += fim_clairvoyant_bin(ctx, params, cfg)
            else:
                total += fim_effective_bin(ctx, params, cfg)
    return total


# --- accumulation and CRB extraction ------------------------------------------------

@dataclass
class FimAccumulator:
    dim: int
    regime: str = "clairvoyant"
    sum: np.ndarray = None
    count: int = 0

    def __post_init__(self):
        if self.sum is None:
            self.sum = np.zeros((self.dim, self.dim))

    def add(self, fim: np.ndarray) -> None:
        if fim.shape != (self.dim, self.dim):
            raise ContractError("FIM dimension mismatch")
        if not np.all(np.isfinite(fim)):
            raise DomainError("FIM has non-finite entries")
        scale = max(np.max(np.abs(fim)), 1e-300)
        if np.max(np.abs(fim - fim.T)) > 1e-10 * scale:
            raise ContractError("FIM is not symmetric")
        self.sum += fim
        self.count += 1

    def mean(self) -> np.ndarray:
        if self.count == 0:
            raise DomainError("no FIMs accumulated")
        return self.sum / self.count


def parameter_units(num_ues: int) -> list[tuple[str, str, float]]:
    """(name, unit, factor) per parameter; factor converts the raw CRB."""
    idx = ParamIndex(num_ues)
    deg = 180.0 / np.pi
    out = []
    for l, name in enumerate(idx.names()):
        if name.startswith("theta") or name == "psi":
            out.append((name, "deg", deg))
        elif name.startswith("tau"):
            out.append((name, "m", SPEED_OF_LIGHT))
        elif name.startswith("omega"):
            out.append((name, "m/s", 1.0))
        else:
            out.append((name, "", 1.0))
    return out


@dataclass(frozen=True)
class CrbReport:
    names: tuple
    units: tuple
    values: np.ndarray            # physical units; inf when unidentifiable
    raw: np.ndarray               # natural units (rad, s, m/s)
    unidentifiable: tuple
    fim: np.ndarray = field(repr=False)
    regime: str = ""

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    @property
    def diagnostic(self) -> str:
        if not self.unidentifiable:
            return "all parameters identifiable"
        return "unidentifiable: " + ", ".join(self.unidentifiable)


def crb_from_fim(fim: np.ndarray, num_ues: int, regime: str = "",
                 rel_tol: float = 1e-10, null_tol: float = 1e-6) -> CrbReport:
    """Square-rooted diagonal of the inverse FIM with a rank diagnostic.

    The FIM is Jacobi-scaled before the eigendecomposition. Parameters with a
    non-negligible component in the numerical null space get an infinite bound.
    """
    fim = 0.5 * (fim + fim.T)
    diag = np.diag(fim).copy()
    d = np.sqrt(np.where(diag > 0, diag, 1.0))
    scaled = fim / np.outer(d, d)
    vals, vecs = np.linalg.eigh(scaled)
    top = max(vals[-1], 0.0)
    null = vals <= rel_tol * top if top > 0 else np.ones_like(vals, dtype=bool)
    null_weight = np.sum(vecs[:, null] ** 2, axis=1)
    var = np.sum(vecs[:, ~null] ** 2 / vals[~null], axis=1) / d ** 2
    raw = np.sqrt(var)
    bad = (null_weight > null_tol) | (diag <= 0)
    raw[bad] = np.inf
    units = parameter_units(num_ues)
    values = raw * np.array([u[2] for u in units])
    names = tuple(u[0] for u in units)
    return CrbReport(names=names, units=tuple(u[1] for u in units), values=values, raw=raw,
                     unidentifiable=tuple(n for n, b in zip(names, bad) if b), fim=fim,
                     regime=regime)


def scenario_covariances(cfg: ScenarioConfig, modes=CLUTTER_MODES) -> dict:
    out = {}
    for mode in modes:
        if mode == "clutter":
            b_sp = build_spatial_clutter(cfg.clutter.patch_positions, cfg.clutter.angular_spread,
                                         cfg.m_bs_rx, cfg.bs2_pos)
            out[mode] = per_bin_cov(cfg.clutter, b_sp, cfg.noise_var)
        elif mode == "noise_only":
            out[mode] = noise_only_cov(cfg.m_bs_rx, cfg.noise_var)
        else:
            raise ContractError(f"unknown clutter mode {mode!r}")
    return out


def monte_carlo_fims(cfg: ScenarioConfig, n_real: int, rng: np.random.Generator,
                     modes=CLUTTER_MODES, params: TargetParams | None = None,
                     threads: int = 1) -> dict:
    """Average FIMs over ``n_real`` waveform draws, keyed by (regime, mode).

    Realization r uses the r-th spawned child of ``rng`` and the sum is taken
    in realization order, so results do not depend on ``threads``.
    """
    if n_real < 1:
        raise DomainError("need at least one realization")
    params = derive_geometry(cfg) if params is None else params
    model = FrameModel.build(cfg)
    covs = scenario_covariances(cfg, modes)
    children = rng.spawn(n_real)

    def one(child):
        return assemble_fims(model, params, draw_waveform(model, child), covs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(c) for c in children]
    dim = ParamIndex(cfg.num_ues).dim
    accs = {key: FimAccumulator(dim, key[0]) for key in results[0]}
    for res in results:
        for key, fim in res.items():
            accs[key].add(fim)
    return {key: acc.mean() for key, acc in accs.items()}


def monte_carlo_crb(regime: str, cfg: ScenarioConfig, n_real: int, rng: np.random.Generator,
                    clutter_mode: str = "clutter", threads: int = 1) -> CrbReport:
    if regime not in REGIMES:
        raise ContractError(f"unknown regime {regime!r}")
    fims = monte_carlo_fims(cfg, n_real, rng, modes=(clutter_mode,), threads=threads)
    return crb_from_fim(fims[(regime, clutter_mode)], cfg.num_ues, regime)

