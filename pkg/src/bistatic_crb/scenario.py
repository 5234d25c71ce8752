"""Scenario configuration, frame schedule, pathloss and BS/UE power allocation.

Internal units are SI (metres, seconds, hertz, watts, radians). Config files
use dBm for powers, dB for power ratios and degrees for angles; see
:func:`config_from_dict`.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .clutter import ClutterConfig
from .errors import ConfigError, DomainError

# Fig. 3 layout.
DEFAULT_UE_POS = (
    (234.389509671047, -279.334540216866),
    (320.51584763567, -166.849989458794),
    (354.669697176238, -31.0295777990933),
    (348.690036111733, 109.941546080199),
    (275.743431570397, 231.376211730278),
)
_CLUSTER_NEAR = (
    (23.7202376879278, -32.0875865467068),
    (22.5809625508804, -32.2332889578661),
    (23.9433311571438, -26.3107133019434),
    (27.3690000903447, -26.5035858683089),
    (26.3812123971537, -27.2671304409952),
)
_CLUSTER_FAR = (
    (240.463996161255, 60.2996419328793),
    (240.275605727513, 62.1868635268402),
    (236.587271931054, 64.7959557197263),
    (238.185112582204, 60.6002034861002),
    (237.715390279068, 67.5562701477462),
)
# UE k scatters off one point of each cluster group.
DEFAULT_UE_CLUSTERS = tuple((a, b) for a, b in zip(_CLUSTER_NEAR, _CLUSTER_FAR))


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    bs2_pos: tuple = (10.0, 30.0)
    ue_pos: tuple = DEFAULT_UE_POS
    target_pos: tuple = (157.6848, 157.6848)
    target_vel: tuple = (-30.0, 0.0)
    ue_vel: tuple = ((-1.0, 0.0),) * 5
    m_bs_tx: int = 32
    m_bs_rx: int = 8
    m_ue: int = 2
    f_c: float = 2e9
    delta_f: float = 20e3
    t_cp: float = 2e-6
    n_prb: int = 30
    v_cho: int = 20
    n_prb_ue: int = 15
    tau_c: int = 60
    tau_p: int = 10
    tau_dl: int = 30
    nu_p: int = 1
    p: int = 2
    n_symbols: int = 300
    gamma: float = 0.5
    p_bs: float = 1.0
    p_ue: float = 0.01
    noise_var: float = 1e-16
    rcs: float = 10.0 ** 0.1
    sweep_width: float = float(np.deg2rad(110.0))
    clutter: ClutterConfig = field(default_factory=ClutterConfig)
    ue_clusters: tuple = DEFAULT_UE_CLUSTERS
    ue_side_clusters: tuple = ()
    channel_spread: float = float(np.deg2rad(10.0))
    pathloss_model: str = "umi_los"
    gain_model: str = "rms"
    gain_range: str = "path_length"
    rng_seed: int = 0
    bs1_pos: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.validate()

    # --- derived quantities -------------------------------------------------
    @property
    def num_ues(self) -> int:
        return len(self.ue_pos)

    @property
    def n_subcarriers(self) -> int:
        return self.n_prb * self.v_cho

    @property
    def n_ue_subcarriers(self) -> int:
        return self.n_prb_ue * self.v_cho

    @property
    def n_sensing_subcarriers(self) -> int:
        return self.n_subcarriers - self.n_ue_subcarriers

    @property
    def n_blocks(self) -> int:
        return self.n_symbols // self.tau_c

    @property
    def symbol_duration(self) -> float:
        return 1.0 / self.delta_f + self.t_cp

    @property
    def wavelength(self) -> float:
        from .comm_channel import SPEED_OF_LIGHT

        return SPEED_OF_LIGHT / self.f_c

    @property
    def n_streams(self) -> int:
        return self.num_ues * self.m_ue

    def validate(self) -> None:
        if self.num_ues != len(self.ue_vel):
            raise ConfigError("ue_vel must have one entry per UE")
        if self.num_ues and len(self.ue_clusters) < self.num_ues:
            raise ConfigError("ue_clusters must have one entry per UE")
        if min(self.m_bs_tx, self.m_bs_rx, self.m_ue, self.tau_c, self.v_cho) < 1:
            raise ConfigError("antenna counts, tau_c and v_cho must be positive")
        if self.tau_p < 0 or self.tau_dl < 0 or self.p < 0:
            raise ConfigError("tau_p, tau_dl and p must be non-negative")
        if self.tau_p + self.tau_dl > self.tau_c:
            raise ConfigError("tau_p + tau_dl exceeds tau_c")
        if not 1 <= self.nu_p <= self.v_cho:
            raise ConfigError("nu_p must lie in [1, v_cho]")
        if not 0 <= self.n_prb_ue <= self.n_prb:
            raise ConfigError("n_prb_ue must lie in [0, n_prb]")
        if self.n_symbols <= 0 or self.n_symbols % self.tau_c:
            raise ConfigError("n_symbols must be a positive multiple of tau_c")
        has_uplink = self.tau_c - self.tau_dl > 0 and self.num_ues > 0
        if has_uplink and self.tau_p < self.num_ues * self.m_ue:
            raise ConfigError("tau_p must be at least K * m_ue for orthogonal pilots")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not self.noise_var > 0:
            raise ConfigError("noise variance must be positive")
        if self.pathloss_model not in ("umi_los", "umi_nlos"):
            raise ConfigError(f"unknown pathloss model {self.pathloss_model!r}")
        if self.gain_model not in ("rms", "random"):
            raise ConfigError(f"unknown gain model {self.gain_model!r}")
        if self.gain_range not in ("path_length", "leg_product"):
            raise ConfigError(f"unknown gain range convention {self.gain_range!r}")
        if not self.symbol_duration > 0:
            raise ConfigError("symbol duration must be positive")

    # --- array views ----------------------------------------------------------
    @cached_property
    def ue_pos_array(self) -> np.ndarray:
        return np.asarray(self.ue_pos, dtype=float).reshape(-1, 2)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def config_hash(self) -> str:
        """Short stable hash of every field, used as run provenance."""
        blob = json.dumps(_to_jsonable(dataclasses.asdict(self)), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def default_config(**changes) -> ScenarioConfig:
    return ScenarioConfig(**changes)


# --- config files -------------------------------------------------------------

_DBM_FIELDS = ("p_bs", "p_ue", "noise_var")
_DB_FIELDS = ("rcs",)
_DEG_FIELDS = ("sweep_width", "channel_spread")
_TUPLE_FIELDS = ("bs2_pos", "ue_pos", "target_pos", "target_vel", "ue_vel", "ue_clusters",
                 "ue_side_clusters", "bs1_pos")


def _tuplify(value):
    if isinstance(value, (list, tuple)):
        return tuple(_tuplify(v) for v in value)
    return value


def clutter_from_dict(doc: dict) -> ClutterConfig:
    doc = dict(doc)
    kwargs = {}
    if "patch_positions" in doc:
        kwargs["patch_positions"] = _tuplify(doc.pop("patch_positions"))
    if "texture" in doc:
        kwargs["texture"] = db_to_linear(doc.pop("texture"))
    if "kappa" in doc:
        kwargs["kappa"] = db_to_linear(doc.pop("kappa"))
    if "angular_spread" in doc:
        kwargs["angular_spread"] = float(np.deg2rad(doc.pop("angular_spread")))
    for key in ("temporal_corr", "frequency_corr"):
        if key in doc:
            kwargs[key] = float(doc.pop(key))
    if doc:
        raise ConfigError(f"unknown clutter keys: {sorted(doc)}")
    return ClutterConfig(**kwargs)


def config_from_dict(doc: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from file units (dBm, dB, degrees) over ``base`` defaults.

    ``ue_side_clusters`` entries are angles in degrees.
    """
    base = base or ScenarioConfig()
    names = {f.name for f in dataclasses.fields(ScenarioConfig)}
    doc = dict(doc)
    unknown = set(doc) - names
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key == "clutter":
            kwargs[key] = clutter_from_dict(value)
        elif key in _DBM_FIELDS:
            kwargs[key] = dbm_to_watt(float(value))
        elif key in _DB_FIELDS:
            kwargs[key] = db_to_linear(float(value))
        elif key in _DEG_FIELDS:
            kwargs[key] = float(np.deg2rad(value))
        elif key == "ue_side_clusters":
            kwargs[key] = tuple(tuple(float(np.deg2rad(a)) for a in row) for row in value)
        elif key in _TUPLE_FIELDS:
            kwargs[key] = _tuplify(value)
        else:
            kwargs[key] = value
    if "ue_pos" in kwargs and "ue_vel" not in kwargs:
        kwargs["ue_vel"] = (tuple(base.ue_vel[0]) if base.ue_vel else (0.0, 0.0),) * len(kwargs["ue_pos"])
    try:
        return dataclasses.replace(base, **kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_document(path) -> dict:
    """Read a JSON or TOML document."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def load_config(path) -> ScenarioConfig:
    return config_from_dict(load_document(path))


# --- schedule -------------------------------------------------------------------

UL, DL = 0, 1


@dataclass(frozen=True)
class FrameSchedule:
    """Per-bin link map over the ``[n_symbols, n_subcarriers]`` grid.

    ``ul``, ``dl`` and ``pilot`` are boolean masks; ``pilot`` is a subset of
    ``ul``. Sensing subcarriers are downlink at every symbol time.
    """

    ul: np.ndarray
    dl: np.ndarray
    pilot: np.ndarray
    sensing_subcarriers: np.ndarray
    ue_subcarriers: np.ndarray
    tau_c: int
    v_cho: int

    def block_of(self, i):
        return np.asarray(i) // self.tau_c

    def prb_of(self, v):
        return np.asarray(v) // self.v_cho

    @staticmethod
    def _as_set(mask) -> frozenset:
        return frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(mask))))

    @property
    def U(self) -> frozenset:
        return self._as_set(self.ul)

    @property
    def D(self) -> frozenset:
        return self._as_set(self.dl)

    @property
    def P(self) -> frozenset:
        return self._as_set(self.pilot)

    @property
    def V_S(self) -> frozenset:
        return frozenset(self.sensing_subcarriers.tolist())

    @property
    def V_UE(self) -> frozenset:
        return frozenset(self.ue_subcarriers.tolist())

    @property
    def known_in_hybrid(self) -> np.ndarray:
        """Bins whose symbols BS2 knows in the hybrid regime."""
        mask = self.pilot.copy()
        mask[:, self.sensing_subcarriers] = True
        return mask


def pilot_subcarrier_mask(cfg: ScenarioConfig) -> np.ndarray:
    """True for the first nu_p subcarriers of every UE PRB."""
    mask = np.zeros(cfg.n_subcarriers, dtype=bool)
    for n in range(cfg.n_prb_ue):
        mask[n * cfg.v_cho: n * cfg.v_cho + cfg.nu_p] = True
    return mask


def build_schedule(cfg: ScenarioConfig) -> FrameSchedule:
    """Lay out UL pilots, UL data and DL symbols for every block and subcarrier."""
    if cfg.tau_p + cfg.tau_dl > cfg.tau_c:
        raise ConfigError("tau_p + tau_dl exceeds tau_c")
    n_i, n_v = cfg.n_symbols, cfg.n_subcarriers
    ue_sc = np.arange(cfg.n_ue_subcarriers)
    s_sc = np.arange(cfg.n_ue_subcarriers, n_v)
    slot = np.arange(n_i) % cfg.tau_c
    dl_time = slot >= cfg.tau_c - cfg.tau_dl
    pilot_time = slot < cfg.tau_p

    ul = np.zeros((n_i, n_v), dtype=bool)
    dl = np.zeros((n_i, n_v), dtype=bool)
    pilot = np.zeros((n_i, n_v), dtype=bool)
    ul[np.ix_(~dl_time, ue_sc)] = True
    dl[np.ix_(dl_time, ue_sc)] = True
    dl[:, s_sc] = True
    pil_sc = np.nonzero(pilot_subcarrier_mask(cfg))[0]
    pilot[np.ix_(pilot_time, pil_sc)] = True
    return FrameSchedule(ul=ul, dl=dl, pilot=pilot, sensing_subcarriers=s_sc,
                         ue_subcarriers=ue_sc, tau_c=cfg.tau_c, v_cho=cfg.v_cho)


def sweep_angles(cfg: ScenarioConfig) -> np.ndarray:
    """The discretized sector [-sweep/2, +sweep/2] swept by the sensing beam."""
    count = cfg.tau_dl if cfg.tau_dl > 0 else cfg.tau_c
    return np.linspace(-cfg.sweep_width / 2, cfg.sweep_width / 2, count)


def sweep_angle_at(cfg: ScenarioConfig, i) -> np.ndarray:
    grid = sweep_angles(cfg)
    return grid[np.asarray(i) % grid.size]


# --- link budget ---------------------------------------------------------------

def pathloss_db(cfg: ScenarioConfig, k: int) -> float:
    """3GPP UMi street-canyon pathloss in dB between BS1 and UE k."""
    d = float(np.linalg.norm(cfg.ue_pos_array[k] - np.asarray(cfg.bs1_pos)))
    if d < 10.0:
        raise ConfigError(f"UE {k} at {d:.2f} m is inside the 10 m model limit")
    fc_ghz = cfg.f_c / 1e9
    los = 32.4 + 21.0 * np.log10(d) + 20.0 * np.log10(fc_ghz)
    if cfg.pathloss_model == "umi_los":
        return float(los)
    nlos = 35.3 * np.log10(d) + 22.4 + 21.3 * np.log10(fc_ghz)
    return float(max(los, nlos))


def pathloss(cfg: ScenarioConfig, k: int) -> float:
    """Amplitude gain alpha_k = 10^(-PL/20)."""
    return 10.0 ** (-pathloss_db(cfg, k) / 20.0)


def bs_comm_amplitude(cfg: ScenarioConfig) -> float:
    """Per-stream amplitude on a UE subcarrier in DL."""
    if cfg.n_ue_subcarriers == 0 or cfg.n_streams == 0:
        return 0.0
    return float(np.sqrt(cfg.gamma * cfg.p_bs / (cfg.n_ue_subcarriers * cfg.n_streams)))


def bs_sensing_amplitude(cfg: ScenarioConfig) -> float:
    if cfg.n_sensing_subcarriers == 0:
        return 0.0
    return float(np.sqrt((1.0 - cfg.gamma) * cfg.p_bs / cfg.n_sensing_subcarriers))


def ue_amplitude(cfg: ScenarioConfig) -> float:
    """Per-stream UE amplitude: P_UE spread over its subcarriers and antennas."""
    if cfg.n_ue_subcarriers == 0:
        return 0.0
    return float(np.sqrt(cfg.p_ue / (cfg.n_ue_subcarriers * cfg.m_ue)))


def power_allocation(cfg: ScenarioConfig, schedule: FrameSchedule, bin) -> np.ndarray:
    """Amplitude vector rho for a DL bin (K*m_ue entries, or one for sensing)."""
    i, v = bin
    if not schedule.dl[i, v]:
        raise DomainError(f"bin {bin} is not a downlink bin")
    if v >= cfg.n_ue_subcarriers:
        return np.array([bs_sensing_amplitude(cfg)])
    return np.full(cfg.n_streams, bs_comm_amplitude(cfg))
