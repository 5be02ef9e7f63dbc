"""Channel sampling, pilot books, and MMSE estimation statistics."""
import numpy as np
import pytest

from fdrelay import (
    SystemConfig,
    direct_channel_batch,
    estimate_via_pilots,
    generate_pilots,
    make_profile,
    sample_estimate_direct,
    sample_true_channels,
)
from fdrelay.model import LargeScaleProfile

CFG = SystemConfig(K=3, Nrx=16, Ntx=16, tau=6, Pp=10.0, sigma_li_sq=2.0)
PROF = make_profile([0.5, 1.0, 2.0], [1.5, 0.8, 1.2], CFG.tau, CFG.Pp)


def test_true_channel_shapes_and_variances():
    rng = np.random.default_rng(0)
    n = 4000
    acc = np.zeros(CFG.K)
    acc_rr = 0.0
    for _ in range(n):
        g_sr, g_rd, g_rr = sample_true_channels(CFG, PROF, rng)
        acc += np.mean(np.abs(g_sr) ** 2, axis=0)
        acc_rr += np.mean(np.abs(g_rr) ** 2)
    assert g_sr.shape == (CFG.Nrx, CFG.K)
    assert g_rd.shape == (CFG.Ntx, CFG.K)
    assert g_rr.shape == (CFG.Nrx, CFG.Ntx)
    # per-entry variance of column k is beta_k; stderr ~ beta/sqrt(n*Nrx)
    np.testing.assert_allclose(acc / n, PROF.beta_sr, rtol=0.05)
    assert acc_rr / n == pytest.approx(CFG.sigma_li_sq, rel=0.05)


def test_true_channel_circular_symmetry():
    rng = np.random.default_rng(1)
    draws = np.stack([sample_true_channels(CFG, PROF, rng)[0] for _ in range(3000)])
    re_var = np.var(draws.real[:, :, 1])
    im_var = np.var(draws.imag[:, :, 1])
    assert re_var == pytest.approx(PROF.beta_sr[1] / 2, rel=0.06)
    assert im_var == pytest.approx(PROF.beta_sr[1] / 2, rel=0.06)


def test_zero_li_gives_zero_loop_channel():
    cfg = SystemConfig(K=3, Nrx=8, Ntx=8, tau=6, sigma_li_sq=0.0)
    _, _, g_rr = sample_true_channels(cfg, PROF, np.random.default_rng(2))
    assert np.all(g_rr == 0)


def test_pilot_books_orthonormal():
    book = generate_pilots(10, 20)
    np.testing.assert_allclose(book.phi_s @ book.phi_s.conj().T, np.eye(10), atol=1e-12)
    np.testing.assert_allclose(book.phi_d @ book.phi_d.conj().T, np.eye(10), atol=1e-12)
    assert np.max(np.abs(book.phi_s @ book.phi_d.conj().T)) < 1e-12


def test_pilot_books_longer_than_minimum():
    book = generate_pilots(10, 25)
    assert book.phi_s.shape == (10, 25)
    np.testing.assert_allclose(book.phi_s @ book.phi_s.conj().T, np.eye(10), atol=1e-12)


def test_pilots_reject_short_training():
    with pytest.raises(ValueError):
        generate_pilots(10, 19)


def test_pilot_estimation_identity_and_moments():
    rng = np.random.default_rng(3)
    book = generate_pilots(CFG.K, CFG.tau)
    n = 4000
    var_hat = np.zeros(CFG.K)
    var_err = np.zeros(CFG.K)
    cross = 0.0
    for _ in range(n):
        cs = estimate_via_pilots(sample_true_channels(CFG, PROF, rng), book, CFG, PROF, rng)
        # errors come from subtraction, so re-adding is exact up to one ulp
        np.testing.assert_allclose(cs.ghat_sr + cs.err_sr, cs.g_sr, atol=1e-13)
        np.testing.assert_allclose(cs.ghat_rd + cs.err_rd, cs.g_rd, atol=1e-13)
        var_hat += np.mean(np.abs(cs.ghat_sr) ** 2, axis=0)
        var_err += np.mean(np.abs(cs.err_sr) ** 2, axis=0)
        cross += np.mean((cs.ghat_sr * cs.err_sr.conj()).real)
    np.testing.assert_allclose(var_hat / n, PROF.sigma_sr_sq, rtol=0.05)
    np.testing.assert_allclose(var_err / n, PROF.beta_sr - PROF.sigma_sr_sq, rtol=0.05)
    # MMSE orthogonality: estimate and error are uncorrelated
    assert abs(cross / n) < 0.01


def test_pilot_estimation_perfect_limit():
    cfg = SystemConfig(K=3, Nrx=16, Ntx=16, tau=6, Pp=10**8 / 6)
    prof = make_profile([0.5, 1.0, 2.0], [1.5, 0.8, 1.2], cfg.tau, cfg.Pp)
    book = generate_pilots(cfg.K, cfg.tau)
    rng = np.random.default_rng(4)
    cs = estimate_via_pilots(sample_true_channels(cfg, prof, rng), book, cfg, prof, rng)
    assert np.linalg.norm(cs.ghat_sr - cs.g_sr) / np.linalg.norm(cs.g_sr) < 1e-3
    assert np.linalg.norm(cs.ghat_rd - cs.g_rd) / np.linalg.norm(cs.g_rd) < 1e-3


def test_pilot_estimation_requires_pilot_power():
    cfg = SystemConfig(K=3, Nrx=16, Ntx=16, tau=6, Pp=0.0)
    book = generate_pilots(3, 6)
    with pytest.raises(ValueError):
        estimate_via_pilots(sample_true_channels(CFG, PROF, np.random.default_rng(0)),
                            book, cfg, PROF, np.random.default_rng(0))


def test_direct_sampler_matches_pilot_statistics():
    rng = np.random.default_rng(5)
    n = 4000
    var_hat = np.zeros(CFG.K)
    var_g = np.zeros(CFG.K)
    for _ in range(n):
        cs = sample_estimate_direct(CFG, PROF, rng)
        np.testing.assert_array_equal(cs.g_sr, cs.ghat_sr + cs.err_sr)
        var_hat += np.mean(np.abs(cs.ghat_rd) ** 2, axis=0)
        var_g += np.mean(np.abs(cs.g_rd) ** 2, axis=0)
    np.testing.assert_allclose(var_hat / n, PROF.sigma_rd_sq, rtol=0.05)
    np.testing.assert_allclose(var_g / n, PROF.beta_rd, rtol=0.05)


def test_direct_sampler_zero_error_when_variance_saturates():
    prof = LargeScaleProfile(
        beta_sr=np.ones(2), beta_rd=np.ones(2),
        sigma_sr_sq=np.ones(2), sigma_rd_sq=np.ones(2))
    cfg = SystemConfig(K=2, Nrx=8, Ntx=8, tau=4)
    cs = sample_estimate_direct(cfg, prof, np.random.default_rng(6))
    assert np.all(cs.err_sr == 0) and np.all(cs.err_rd == 0)


def test_direct_batch_shapes_and_rr_toggle():
    got = direct_channel_batch(CFG, PROF, 5, np.random.default_rng(7))
    ghat_sr, err_sr, ghat_rd, err_rd, g_rr = got
    assert ghat_sr.shape == (5, CFG.Nrx, CFG.K)
    assert ghat_rd.shape == (5, CFG.Ntx, CFG.K)
    assert g_rr.shape == (5, CFG.Nrx, CFG.Ntx)
    assert direct_channel_batch(CFG, PROF, 2, np.random.default_rng(8),
                                with_rr=False)[4] is None


def test_pilot_contamination_absent():
    # the cross channel enters the received pilots only through gbar @ phi_d,
    # and de-spreading with phi_s removes it exactly
    book = generate_pilots(CFG.K, CFG.tau)
    rng = np.random.default_rng(9)
    gbar = rng.standard_normal((CFG.Nrx, CFG.K)) + 1j * rng.standard_normal((CFG.Nrx, CFG.K))
    leak = (gbar @ book.phi_d) @ book.phi_s.conj().T
    assert np.max(np.abs(leak)) < 1e-12
