import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bistatic_crb.comm_channel import (SpatialCovariance, build_spatial_covariance, sample_trajectory,
                                       temporal_zeta, ue_spatial_covariance, zeta_vector)
from bistatic_crb.errors import DomainError
from bistatic_crb.scenario import default_config


def frob_rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_zero_spread_single_cluster_is_rank_one():
    cov = build_spatial_covariance([0.4], 0.0, 6)
    a = np.exp(1j * np.pi * np.arange(6) * np.sin(0.4))
    assert np.allclose(cov, np.outer(a, a.conj()))
    assert np.allclose(build_spatial_covariance([0.0], 0.0, 2), np.ones((2, 2)))


def test_small_spread_approaches_rank_one():
    cov = build_spatial_covariance([0.3], 1e-6, 8)
    vals = np.linalg.eigvalsh(cov)
    assert vals[-1] == pytest.approx(8, rel=1e-6)


def test_spread_cluster_properties():
    cov = build_spatial_covariance([np.deg2rad(30)], np.deg2rad(10), 4)
    assert np.trace(cov).real == pytest.approx(4)
    assert np.linalg.eigvalsh(cov).min() > -1e-10
    off = np.abs(cov[~np.eye(4, dtype=bool)])
    assert np.all(off < 1)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        build_spatial_covariance([], 0.1, 4)
    with pytest.raises(DomainError):
        build_spatial_covariance([0.0], -0.1, 4)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1.4, 1.4), min_size=1, max_size=4), st.floats(0, 0.3), st.integers(1, 10))
def test_covariance_property(centers, spread, m):
    cov = build_spatial_covariance(centers, spread, m)
    assert np.allclose(cov, cov.conj().T)
    assert np.trace(cov).real == pytest.approx(m)
    assert np.linalg.eigvalsh(cov).min() >= -1e-9 * m


def test_zeta_examples():
    cfg = default_config(ue_vel=((1.0, 0.0),), ue_pos=((60.0, -80.0),),
                         ue_clusters=(((50.0, -90.0),),), tau_c=30, tau_dl=15, tau_p=2, m_ue=2)
    assert temporal_zeta(cfg, 0, 0) == 1.0
    # scipy oracle: J0(0.0653451271946677) = 0.998932788441337
    assert temporal_zeta(cfg, 0, 1) == pytest.approx(0.998932788441337, abs=1e-9)
    assert temporal_zeta(cfg, 0, 1) == pytest.approx(0.99893, abs=1e-5)
    static = cfg.replace(ue_vel=((0.0, 0.0),))
    assert np.all(zeta_vector(static, 0, 5) == 1.0)
    with pytest.raises(DomainError):
        temporal_zeta(cfg, 0, -1)


def test_ue_covariance_kron_structure():
    cfg = default_config()
    cov = ue_spatial_covariance(cfg, 0)
    assert cov.c_full.shape == (cfg.m_bs_tx * cfg.m_ue,) * 2
    assert np.allclose(cov.c_full[:cfg.m_bs_tx, :cfg.m_bs_tx], cov.c_bs)
    assert np.allclose(cov.c_full[:cfg.m_bs_tx, cfg.m_bs_tx:], 0)


def small_cov(rng, m=3):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    c = a @ a.conj().T + np.eye(m)
    return SpatialCovariance(c_bs=c * m / np.trace(c).real, c_ue=np.eye(1, dtype=complex))


def test_single_block_draw(rng):
    cov = small_cov(rng)
    h = sample_trajectory(cov, [1.0], 1, rng, size=20000)
    emp = h.T @ h.conj() / h.shape[0]
    assert frob_rel(emp, cov.c_full) < 0.05


def test_perfectly_correlated_blocks_identical(rng):
    cov = small_cov(rng)
    h = sample_trajectory(cov, [1.0, 1.0, 1.0], 3, rng)
    assert np.allclose(h[:3], h[3:6]) and np.allclose(h[:3], h[6:])


def test_cross_covariance_between_blocks(rng):
    cov = small_cov(rng)
    h = sample_trajectory(cov, [1.0, 0.9], 2, rng, size=10000)
    cross = h[:, :3].T @ h[:, 3:].conj() / h.shape[0]
    assert frob_rel(cross, 0.9 * cov.c_full) < 0.05


def test_three_block_covariance(rng):
    cov = small_cov(rng)
    zeta = [1.0, 0.8, 0.5]
    h = sample_trajectory(cov, zeta, 3, rng, size=10000)
    emp = h.T @ h.conj() / h.shape[0]
    full = np.kron(np.array([[1, .8, .5], [.8, 1, .8], [.5, .8, 1]]), cov.c_full)
    assert frob_rel(emp, full) < 0.05


def test_independent_frequency_blocks(rng):
    cov = small_cov(rng)
    a = sample_trajectory(cov, [1.0], 1, rng, size=10000)
    b = sample_trajectory(cov, [1.0], 1, rng, size=10000)
    cross = a.T @ b.conj() / a.shape[0]
    assert np.linalg.norm(cross) / np.linalg.norm(cov.c_full) < 0.05


def test_kron_sampling_matches_dense_cholesky(rng):
    cov = small_cov(rng)
    zeta = np.array([1.0, 0.7])
    full = np.kron(np.array([[1, .7], [.7, 1]]), cov.c_full)
    lc = np.linalg.cholesky(full)
    w = (rng.standard_normal((10000, 6)) + 1j * rng.standard_normal((10000, 6))) / np.sqrt(2)
    dense = w @ lc.T
    kron = sample_trajectory(cov, zeta, 2, rng, size=10000)
    for s in (dense, kron):
        assert np.abs(s.mean(axis=0)).max() < 0.05
        assert frob_rel(s.T @ s.conj() / 10000, full) < 0.05


def test_deterministic_given_seed():
    cov = small_cov(np.random.default_rng(0))
    a = sample_trajectory(cov, [1.0, 0.9], 2, np.random.default_rng(7))
    b = sample_trajectory(cov, [1.0, 0.9], 2, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_short_zeta_rejected(rng):
    with pytest.raises(DomainError):
        sample_trajectory(small_cov(rng), [1.0], 2, rng)
