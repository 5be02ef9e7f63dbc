"""Tests for the ZF and MRC/MRT processing pairs."""
import dataclasses

import numpy as np
import pytest

from fdrelay import (
    ProcessingPair,
    SingularGramError,
    SystemConfig,
    alpha_mrt,
    alpha_zf,
    make_profile,
    mr_pair,
    sample_estimate_direct,
    zf_pair,
)

CFG = SystemConfig(K=4, Nrx=24, Ntx=20, tau=8, Pp=10.0)
PROF = make_profile([0.5, 1.0, 2.0, 0.8], [1.5, 0.8, 1.2, 0.4], CFG.tau, CFG.Pp)


def test_zf_inverts_estimated_channels():
    rng = np.random.default_rng(7)
    cs = sample_estimate_direct(CFG, PROF, rng)
    pair = zf_pair(cs, PROF, CFG)
    assert pair.scheme == "zf"
    assert pair.w_t.shape == (CFG.K, CFG.Nrx)
    assert pair.a.shape == (CFG.Ntx, CFG.K)
    # receive side: W^T Ghat_SR = I
    np.testing.assert_allclose(pair.w_t @ cs.ghat_sr, np.eye(CFG.K), atol=1e-8)
    # transmit side: Ghat_RD^T A = alpha I
    np.testing.assert_allclose(
        cs.ghat_rd.T @ pair.a, pair.alpha * np.eye(CFG.K), atol=1e-8
    )


def test_mr_matrices_are_conjugate_estimates():
    rng = np.random.default_rng(8)
    cs = sample_estimate_direct(CFG, PROF, rng)
    pair = mr_pair(cs, PROF, CFG)
    assert pair.scheme == "mr"
    np.testing.assert_array_equal(pair.w_t, cs.ghat_sr.conj().T)
    np.testing.assert_array_equal(pair.a, pair.alpha * cs.ghat_rd.conj())
    assert pair.alpha == alpha_mrt(CFG, PROF)


def test_alpha_formulas_by_hand():
    # alpha_zf^2 = (Ntx - K) / sum(1/sigma_rd^2), alpha_mrt^2 = 1 / (Ntx sum sigma_rd^2)
    s2 = PROF.sigma_rd_sq
    assert alpha_zf(CFG, PROF) == pytest.approx(
        np.sqrt((CFG.Ntx - CFG.K) / np.sum(1.0 / s2))
    )
    assert alpha_mrt(CFG, PROF) == pytest.approx(
        np.sqrt(1.0 / (CFG.Ntx * np.sum(s2)))
    )


def test_alpha_is_realization_independent():
    rng = np.random.default_rng(9)
    pairs = [zf_pair(sample_estimate_direct(CFG, PROF, rng), PROF, CFG) for _ in range(3)]
    assert len({p.alpha for p in pairs}) == 1
    assert pairs[0].alpha == alpha_zf(CFG, PROF)


@pytest.mark.parametrize("builder", [zf_pair, mr_pair])
def test_average_transmit_power_is_unit(builder):
    # E{||A s||^2} = E{tr(A^H A)} = 1 with unit-power symbols, long-term average
    rng = np.random.default_rng(10)
    total = 0.0
    trials = 3000
    for _ in range(trials):
        pair = builder(sample_estimate_direct(CFG, PROF, rng), PROF, CFG)
        total += float(np.sum(np.abs(pair.a) ** 2))
    assert total / trials == pytest.approx(1.0, rel=0.05)


def test_zf_requires_more_antennas_than_pairs():
    cfg = SystemConfig(K=4, Nrx=4, Ntx=20, tau=8, Pp=10.0)
    prof = make_profile([1.0] * 4, [1.0] * 4, cfg.tau, cfg.Pp)
    cs = sample_estimate_direct(cfg, prof, np.random.default_rng(0))
    with pytest.raises(ValueError):
        zf_pair(cs, prof, cfg)
    cfg = SystemConfig(K=4, Nrx=24, Ntx=4, tau=8, Pp=10.0)
    cs = sample_estimate_direct(cfg, prof, np.random.default_rng(0))
    with pytest.raises(ValueError):
        zf_pair(cs, prof, cfg)


def test_degenerate_estimate_raises_singular_gram():
    rng = np.random.default_rng(11)
    cs = sample_estimate_direct(CFG, PROF, rng)
    dup = cs.ghat_sr.copy()
    dup[:, 1] = dup[:, 0]
    broken = dataclasses.replace(cs, ghat_sr=dup)
    with pytest.raises(SingularGramError):
        zf_pair(broken, PROF, CFG)
    # MRC never inverts anything, so the same degenerate set is fine there
    assert isinstance(mr_pair(broken, PROF, CFG), ProcessingPair)
