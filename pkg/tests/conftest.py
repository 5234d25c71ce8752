import sys

import numpy as np
import pytest

from bistatic_crb.clutter import ClutterConfig
from bistatic_crb.scenario import default_config
from bistatic_crb.sensing import BinContext, ParamIndex


def tiny_config(**changes):
    """A frame small enough for bin-by-bin reference computations."""
    base = dict(
        ue_pos=((60.0, -80.0), (120.0, 40.0)),
        ue_vel=((-1.0, 0.0), (0.0, 2.0)),
        ue_clusters=(((50.0, -90.0), (70.0, -60.0)), ((110.0, 60.0), (130.0, 20.0))),
        m_bs_tx=4, m_bs_rx=3, m_ue=1,
        n_prb=2, v_cho=3, n_prb_ue=1,
        tau_c=6, tau_p=2, tau_dl=3, nu_p=1, p=1, n_symbols=12,
        clutter=ClutterConfig(texture=1e-36, kappa=0.1, angular_spread=float(np.deg2rad(1.0))),
    )
    base.update(changes)
    return default_config(**base)


@pytest.fixture
def tiny():
    return tiny_config()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_context(cfg, rng, link, known=True, cov=None, streams=2):
    """A bin with random symbols, precoders and powers for the given link."""
    i = int(rng.integers(0, cfg.n_symbols))
    v = int(rng.integers(0, cfg.n_subcarriers))
    if link == "DL":
        f = rng.standard_normal((cfg.m_bs_tx, streams)) + 1j * rng.standard_normal((cfg.m_bs_tx, streams))
        f /= np.linalg.norm(f, axis=0)
        power = rng.uniform(0.5, 1.5, streams)
        n_sym = streams
    else:
        f = (rng.standard_normal((cfg.num_ues, cfg.m_ue, cfg.m_ue))
             + 1j * rng.standard_normal((cfg.num_ues, cfg.m_ue, cfg.m_ue)))
        power = rng.uniform(0.5, 1.5, (cfg.num_ues, cfg.m_ue))
        n_sym = cfg.num_ues * cfg.m_ue
    x = (rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)) / np.sqrt(2)
    return BinContext(i, v, link, f, power, x, cov, known)


def parameter_scales(params):
    """Per-parameter step scales so one finite-difference step size suits every column."""
    idx = ParamIndex(params.num_ues)
    scale = np.ones(idx.dim)
    scale[idx.tau] = 1e-9
    scale[idx.beta_re] = np.abs(params.beta)
    scale[idx.beta_im] = np.abs(params.beta)
    return scale


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
