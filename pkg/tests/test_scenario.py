import json

import numpy as np
import pytest

from bistatic_crb.errors import ConfigError, DomainError
from bistatic_crb.scenario import (bs_comm_amplitude, bs_sensing_amplitude, build_schedule,
                                   config_from_dict, dbm_to_watt, default_config, load_config,
                                   pathloss, pathloss_db, power_allocation, sweep_angle_at,
                                   sweep_angles)


def test_defaults_are_consistent():
    cfg = default_config()
    assert cfg.num_ues == 5
    assert cfg.symbol_duration == pytest.approx(52e-6)
    assert cfg.n_blocks == 5
    assert cfg.p_bs == pytest.approx(1.0) and cfg.p_ue == pytest.approx(0.01)


def test_schedule_block_partition():
    cfg = default_config()
    s = build_schedule(cfg)
    v = 20  # a data subcarrier of UE PRB 1
    for b in range(cfg.n_blocks):
        col = slice(b * 60, (b + 1) * 60)
        assert s.ul[col, v].sum() == 30 and s.dl[col, v].sum() == 30
        assert s.pilot[col, v].sum() == 10          # pilot subcarrier (first of its PRB)
        assert s.pilot[col, v + 1].sum() == 0
        # 20 UL data symbols on pilot subcarriers
        assert (s.ul[col, v] & ~s.pilot[col, v]).sum() == 20
    assert len(s.V_UE) == 300 and len(s.V_S) == 300


def test_schedule_invariants():
    s = build_schedule(default_config())
    assert not np.any(s.ul & s.dl)
    assert np.all(s.ul[s.pilot])
    assert np.all(s.ul[:, :300] ^ s.dl[:, :300])
    assert np.all(s.dl[:, 300:])
    assert np.array_equal(s.block_of(np.arange(120)), np.repeat([0, 1], 60))
    assert s.P <= s.U and not (s.U & s.D)


def test_all_downlink_frame():
    cfg = default_config(tau_dl=60, tau_p=0)
    s = build_schedule(cfg)
    assert not s.ul.any() and s.dl.all()


def test_infeasible_schedule():
    with pytest.raises(ConfigError):
        default_config(tau_p=40, tau_dl=30)
    with pytest.raises(ConfigError):
        default_config(tau_p=8)           # fewer than K * m_ue pilots


def test_pathloss_examples():
    cfg = default_config(ue_pos=((100.0, 0.0),), ue_vel=((0.0, 0.0),))
    assert pathloss_db(cfg, 0) == pytest.approx(80.42, abs=0.005)
    assert pathloss(cfg, 0) == pytest.approx(9.53e-5, abs=1e-7)
    near = cfg.replace(ue_pos=((10.0, 0.0),))
    assert pathloss_db(near, 0) == pytest.approx(59.42, abs=0.005)
    far = cfg.replace(ue_pos=((200.0, 0.0),))
    assert pathloss_db(far, 0) - pathloss_db(cfg, 0) == pytest.approx(21 * np.log10(2))
    with pytest.raises(ConfigError):
        pathloss_db(cfg.replace(ue_pos=((5.0, 0.0),)), 0)


def test_power_allocation():
    cfg = default_config()
    s = build_schedule(cfg)
    comm = power_allocation(cfg, s, (59, 0))
    assert comm.shape == (10,)
    assert comm[0] ** 2 == pytest.approx(0.5 / 3000)
    sens = power_allocation(cfg, s, (0, 400))
    assert sens[0] ** 2 == pytest.approx(0.5 / 300)
    assert bs_sensing_amplitude(cfg.replace(gamma=1.0)) == 0.0
    with pytest.raises(DomainError):
        power_allocation(cfg, s, (0, 0))   # UL bin


def test_total_dl_power():
    cfg = default_config(gamma=0.3)
    total = (cfg.n_ue_subcarriers * cfg.n_streams * bs_comm_amplitude(cfg) ** 2
             + cfg.n_sensing_subcarriers * bs_sensing_amplitude(cfg) ** 2)
    assert total == pytest.approx(cfg.p_bs, rel=1e-9)


def test_sweep_grid():
    cfg = default_config()
    grid = sweep_angles(cfg)
    assert grid.size == cfg.tau_dl
    assert np.rad2deg(grid[[0, -1]]) == pytest.approx([-55.0, 55.0])
    assert sweep_angle_at(cfg, 31) == grid[1]


def test_config_file_units(tmp_path):
    doc = {"p_bs": 30.0, "p_ue": 10.0, "noise_var": -130.0, "rcs": 1.0, "sweep_width": 110.0,
           "clutter": {"texture": -120.0, "kappa": -20.0, "angular_spread": 0.5}}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(path)
    assert cfg.p_bs == pytest.approx(1.0)
    assert cfg.noise_var == pytest.approx(1e-16)
    assert cfg.rcs == pytest.approx(10 ** 0.1)
    assert cfg.clutter.texture == pytest.approx(1e-12)
    assert cfg.clutter.kappa == pytest.approx(1e-2)
    assert cfg.clutter.angular_spread == pytest.approx(np.deg2rad(0.5))
    assert dbm_to_watt(10.0) == pytest.approx(0.01)


def test_config_file_toml(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text("tau_c = 30\ntau_dl = 15\ntarget_pos = [100.0, 50.0]\n")
    cfg = load_config(path)
    assert cfg.tau_c == 30 and cfg.target_pos == (100.0, 50.0)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"bogus": 1})


def test_config_hash_tracks_content():
    a, b = default_config(), default_config(gamma=0.4)
    assert a.config_hash() == default_config().config_hash()
    assert a.config_hash() != b.config_hash()
