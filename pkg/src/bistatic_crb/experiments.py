"""Seeded experiment runners that emit CSV tables.

Three kinds are supported: CRB versus target angle, CRB versus the power
split gamma, and sum-SE samples for a set of configuration cells. Every
row carries the seed, the realization count and the hash of the scenario
it was computed for.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .estimation import spectral_efficiency
from .fim import CLUTTER_MODES, REGIMES, crb_from_fim, monte_carlo_fims
from .scenario import ScenarioConfig, config_from_dict, default_config, load_document

KINDS = ("crb_angle_sweep", "crb_gamma_sweep", "se_cdf")
SE_FIELDS = ("p_ue", "nu_p", "p", "ue_speed")


def fmt(x) -> str:
    """Nine significant digits, '.' as decimal separator."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    grid: tuple
    regimes: tuple = ("clairvoyant", "hybrid")
    clutter_modes: tuple = CLUTTER_MODES
    n_realizations: int = 100
    seed: int = 0
    parameters: tuple = ("theta_BS", "tau_BS")
    sweep_field: str = ""          # se_cdf only
    series: tuple = ({},)          # se_cdf only: scenario overrides per series
    output: str = "results.csv"
    scenario: ScenarioConfig = field(default_factory=default_config)
    scenario_doc: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        grid = np.asarray(self.grid, dtype=float)
        if grid.size == 0:
            raise ConfigError("experiment grid is empty")
        if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
            raise ConfigError("experiment grid must be strictly monotone")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be at least 1")
        for r in self.regimes:
            if r not in REGIMES:
                raise ConfigError(f"unknown regime {r!r}")
        for m in self.clutter_modes:
            if m not in CLUTTER_MODES:
                raise ConfigError(f"unknown clutter mode {m!r}")
        if self.kind == "crb_gamma_sweep" and (grid.min() < 0 or grid.max() > 1):
            raise ConfigError("gamma grid must lie in [0, 1]")
        if self.kind == "se_cdf" and self.sweep_field not in SE_FIELDS:
            raise ConfigError(f"se_cdf sweep_field must be one of {SE_FIELDS}")


def spec_from_dict(doc: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from a document with [experiment] and [scenario] tables."""
    if "experiment" not in doc:
        raise ConfigError("missing [experiment] table")
    exp = dict(doc["experiment"])
    scen_doc = dict(doc.get("scenario", {}))
    try:
        kind = exp.pop("kind")
        grid = tuple(exp.pop("grid"))
    except KeyError as exc:
        raise ConfigError(f"experiment is missing {exc.args[0]!r}") from exc
    kwargs = {}
    for key in ("regimes", "clutter_modes", "parameters"):
        if key in exp:
            kwargs[key] = tuple(exp.pop(key))
    for key in ("n_realizations", "seed"):
        if key in exp:
            kwargs[key] = int(exp.pop(key))
    for key in ("sweep_field", "output"):
        if key in exp:
            kwargs[key] = str(exp.pop(key))
    if "series" in exp:
        kwargs["series"] = tuple(dict(s) for s in exp.pop("series"))
    if exp:
        raise ConfigError(f"unknown experiment keys: {sorted(exp)}")
    if kind == "se_cdf" and "n_realizations" not in kwargs:
        kwargs["n_realizations"] = 1000
    return ExperimentSpec(kind=kind, grid=grid, scenario=config_from_dict(scen_doc),
                          scenario_doc=scen_doc, **kwargs)


def load_spec(path) -> ExperimentSpec:
    return spec_from_dict(load_document(path))


# --- CRB sweeps --------------------------------------------------------------------

CRB_HEADER = ["sweep_variable", "regime", "clutter_mode", "parameter_name", "crb_value", "units",
              "seed", "n_real", "config_hash"]


def target_on_arc(cfg: ScenarioConfig, angle_deg: float) -> ScenarioConfig:
    """Move the target to ``angle_deg`` (from BS1) keeping its distance to BS1."""
    bs1 = np.asarray(cfg.bs1_pos, dtype=float)
    radius = float(np.linalg.norm(np.asarray(cfg.target_pos) - bs1))
    a = np.deg2rad(angle_deg)
    return cfg.replace(target_pos=(float(bs1[0] + radius * np.cos(a)),
                                   float(bs1[1] + radius * np.sin(a))))


def _crb_rows(spec: ExperimentSpec, cfg: ScenarioConfig, sweep_value, threads: int) -> list:
    fims = monte_carlo_fims(cfg, spec.n_realizations, np.random.default_rng(spec.seed),
                            modes=spec.clutter_modes, threads=threads)
    rows = []
    h = cfg.config_hash()
    for regime in spec.regimes:
        for mode in spec.clutter_modes:
            rep = crb_from_fim(fims[(regime, mode)], cfg.num_ues, regime)
            for name in spec.parameters:
                if name not in rep.names:
                    raise ConfigError(f"unknown parameter {name!r}")
                unit = rep.units[rep.names.index(name)]
                rows.append([fmt(sweep_value), regime, mode, name, fmt(rep[name]), unit,
                             spec.seed, spec.n_realizations, h])
    return rows


def run_crb_angle_sweep(spec: ExperimentSpec, cfg: ScenarioConfig | None = None,
                        threads: int = 1) -> list:
    cfg = spec.scenario if cfg is None else cfg
    rows = []
    for angle in spec.grid:
        rows.extend(_crb_rows(spec, target_on_arc(cfg, float(angle)), angle, threads))
    return rows


def run_crb_gamma_sweep(spec: ExperimentSpec, cfg: ScenarioConfig | None = None,
                        threads: int = 1) -> list:
    cfg = spec.scenario if cfg is None else cfg
    rows = []
    for gamma in spec.grid:
        rows.extend(_crb_rows(spec, cfg.replace(gamma=float(gamma)), gamma, threads))
    return rows


# --- SE CDF -----------------------------------------------------------------------

SE_HEADER = ["series", "sweep_variable", "realization_id", "sum_se_bits_per_hz",
             "seed", "n_real", "config_hash"]
SE_SUMMARY_HEADER = ["series", "sweep_variable", "k", "v", "mean_se", "seed", "n_real", "config_hash"]


def _se_cell(spec: ExperimentSpec, base_doc: dict, overrides: dict, value) -> ScenarioConfig:
    doc = dict(base_doc)
    doc.update(overrides)
    if spec.sweep_field == "ue_speed":
        cfg = config_from_dict(doc)
        vel = tuple((-float(value), 0.0) for _ in range(cfg.num_ues))
        return cfg.replace(ue_vel=vel)
    doc[spec.sweep_field] = value if spec.sweep_field == "p_ue" else int(value)
    return config_from_dict(doc)


def run_se_cdf(spec: ExperimentSpec, threads: int = 1) -> tuple[list, list]:
    """Raw sum-SE samples and the per-(k, v) mean table for every cell.

    Cells share the seed, so paired comparisons use common randomness.
    """
    rows, summary = [], []
    for s_idx, overrides in enumerate(spec.series):
        for value in spec.grid:
            cfg = _se_cell(spec, spec.scenario_doc, overrides, value)
            res = spectral_efficiency(cfg, spec.n_realizations, np.random.default_rng(spec.seed))
            h = cfg.config_hash()
            for r, x in enumerate(res.sum_se):
                rows.append([s_idx, fmt(value), r, fmt(x), spec.seed, spec.n_realizations, h])
            for k in range(res.mean_se.shape[0]):
                for v in range(res.mean_se.shape[1]):
                    summary.append([s_idx, fmt(value), k, v, fmt(res.mean_se[k, v]),
                                    spec.seed, spec.n_realizations, h])
    return rows, summary


# --- dispatch ------------------------------------------------------------------------

def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_summary" + path.suffix)


def run_experiment(spec: ExperimentSpec, out=None, threads: int = 1) -> list[Path]:
    """Run the experiment and write its CSV file(s); returns the written paths."""
    out = Path(out if out is not None else spec.output)
    if spec.kind == "crb_angle_sweep":
        write_csv(out, CRB_HEADER, run_crb_angle_sweep(spec, threads=threads))
        return [out]
    if spec.kind == "crb_gamma_sweep":
        write_csv(out, CRB_HEADER, run_crb_gamma_sweep(spec, threads=threads))
        return [out]
    rows, summary = run_se_cdf(spec, threads=threads)
    write_csv(out, SE_HEADER, rows)
    write_csv(summary_path(out), SE_SUMMARY_HEADER, summary)
    return [out, summary_path(out)]
