"""Monte Carlo validation of the closed-form rates.

One vectorized engine draws channel estimates and errors in memory-capped
chunks, forms the ZF or MRC/MRT processing matrices for every trial at once,
and accumulates the per-pair quantities behind the rate bounds:

    mean_gain  E{w_k^T g_k}            (effective gain the decoder relies on)
    var_gain   Var{w_k^T g_k}          (gain uncertainty, treated as noise)
    multipair  sum_{j != k} E|w_k^T g_j|^2
    loop       E||w_k^T G_RR A||^2     (relay self-interference, first hop only)
    noise      E||w_k||^2              (amplified receiver noise)

Assembling the bound from the pooled estimates reproduces the closed forms;
the instantaneous-SINR ("genie") rates quantify what perfect gain knowledge
at the decoders would add. Error bars come from batch means: point estimates
use all trials pooled, standard errors come from the spread of per-batch
estimates (20 batches by default).

Everything consumes a caller-supplied Generator in a fixed chunk order, so a
given seed reproduces results exactly regardless of available memory.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import direct_channel_batch
from .linproc import alpha_mrt, alpha_zf
from .model import LargeScaleProfile, SystemConfig

DEFAULT_BATCHES = 20


@dataclass(frozen=True)
class HopTerms:
    """Per-pair bound ingredients for one hop, with batch-means stderr."""

    mean_gain: np.ndarray  # complex
    var_gain: np.ndarray
    multipair: np.ndarray
    loop: np.ndarray
    noise: np.ndarray
    stderr_mean_gain: np.ndarray
    stderr_var_gain: np.ndarray
    stderr_multipair: np.ndarray
    stderr_loop: np.ndarray
    stderr_noise: np.ndarray


@dataclass(frozen=True)
class McRateResult:
    """Bound rates assembled from simulated moments."""

    r_sr: np.ndarray
    r_rd: np.ndarray
    r_e2e: np.ndarray
    stderr_r_sr: np.ndarray
    stderr_r_rd: np.ndarray
    stderr_r_e2e: np.ndarray
    sum_rate: float
    stderr_sum_rate: float
    sr_terms: HopTerms
    rd_terms: HopTerms
    scheme: str
    trials: int


@dataclass(frozen=True)
class GenieResult:
    """E{log2(1 + instantaneous SINR)} with known realized gains."""

    r_sr: np.ndarray
    r_rd: np.ndarray
    r_e2e: np.ndarray
    stderr_r_sr: np.ndarray
    stderr_r_rd: np.ndarray
    stderr_r_e2e: np.ndarray
    sum_rate: float
    stderr_sum_rate: float
    scheme: str
    trials: int


def _chunk_size(cfg: SystemConfig) -> int:
    # ~64 MB of complex128 per chunk; the loop matrix dominates at large arrays
    per_trial = 16.0 * (cfg.Nrx * cfg.Ntx + 6.0 * (cfg.Nrx + cfg.Ntx) * cfg.K)
    return max(1, min(4096, int(64e6 / per_trial)))


def _batch_edges(trials: int, batches: int) -> np.ndarray:
    if trials < batches:
        raise ValueError("need at least one trial per batch")
    return (np.arange(batches + 1) * trials) // batches


def _batch_index(start: int, n: int, edges: np.ndarray) -> np.ndarray:
    return np.searchsorted(edges, np.arange(start, start + n), side="right") - 1


def _processing(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str,
                ghat_sr: np.ndarray, ghat_rd: np.ndarray):
    """Batched (w_t, a) with a leading trial axis."""
    if scheme == "zf":
        gram_sr = np.swapaxes(ghat_sr, 1, 2).conj() @ ghat_sr
        w_t = np.linalg.solve(gram_sr, np.swapaxes(ghat_sr, 1, 2).conj())
        gram_rd = np.swapaxes(ghat_rd, 1, 2).conj() @ ghat_rd
        x = np.linalg.solve(gram_rd, np.swapaxes(ghat_rd, 1, 2).conj())
        a = alpha_zf(cfg, profile) * np.swapaxes(x, 1, 2)
    elif scheme == "mr":
        w_t = np.swapaxes(ghat_sr, 1, 2).conj()
        a = alpha_mrt(cfg, profile) * ghat_rd.conj()
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return w_t, a


def _stderr(batch_means: np.ndarray) -> np.ndarray:
    # spread of per-batch estimates around their mean, standard error of the mean
    b = batch_means.shape[0]
    return np.std(batch_means, axis=0, ddof=1) / np.sqrt(b)


class _Accumulator:
    """Per-batch sums of every per-pair quantity the bounds need."""

    def __init__(self, batches: int, k: int):
        self.counts = np.zeros(batches)
        shape = (batches, k)
        self.sr_gain = np.zeros(shape, dtype=complex)
        self.sr_gain2 = np.zeros(shape)
        self.sr_mp = np.zeros(shape)
        self.sr_li = np.zeros(shape)
        self.sr_an = np.zeros(shape)
        self.rd_gain = np.zeros(shape, dtype=complex)
        self.rd_gain2 = np.zeros(shape)
        self.rd_mp = np.zeros(shape)
        self.genie_sr = np.zeros(shape)
        self.genie_rd = np.zeros(shape)

    def add(self, idx: np.ndarray, **vals) -> None:
        np.add.at(self.counts, idx, 1.0)
        for name, v in vals.items():
            np.add.at(getattr(self, name), idx, v)


def _simulate(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str,
              trials: int, rng: np.random.Generator,
              batches: int = DEFAULT_BATCHES) -> _Accumulator:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    edges = _batch_edges(trials, batches)
    acc = _Accumulator(batches, cfg.K)
    chunk = _chunk_size(cfg)
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        ghat_sr, err_sr, ghat_rd, err_rd, g_rr = direct_channel_batch(
            cfg, profile, n, rng)
        w_t, a = _processing(cfg, profile, scheme, ghat_sr, ghat_rd)

        gain_sr = w_t @ (ghat_sr + err_sr)  # [t, k, j] = w_k^T g_j
        abs2_sr = np.abs(gain_sr) ** 2
        diag_sr = np.diagonal(gain_sr, axis1=1, axis2=2)
        mp_sr = np.sum(abs2_sr, axis=2) - np.diagonal(abs2_sr, axis1=1, axis2=2)
        li_rows = np.abs(w_t @ g_rr @ a) ** 2
        li = np.sum(li_rows, axis=2)
        an = np.sum(np.abs(w_t) ** 2, axis=2)

        gain_rd = np.swapaxes(ghat_rd + err_rd, 1, 2) @ a  # [t, k, j] = g_k^T a_j
        abs2_rd = np.abs(gain_rd) ** 2
        diag_rd = np.diagonal(gain_rd, axis1=1, axis2=2)
        mp_rd = np.sum(abs2_rd, axis=2) - np.diagonal(abs2_rd, axis1=1, axis2=2)

        abs2_diag_sr = np.abs(diag_sr) ** 2
        abs2_diag_rd = np.abs(diag_rd) ** 2
        sinr_sr = cfg.Ps * abs2_diag_sr / (cfg.Ps * mp_sr + cfg.Pr * li + an)
        sinr_rd = cfg.Pr * abs2_diag_rd / (cfg.Pr * mp_rd + 1.0)

        idx = _batch_index(done, n, edges)
        acc.add(
            idx,
            sr_gain=diag_sr, sr_gain2=abs2_diag_sr, sr_mp=mp_sr,
            sr_li=li, sr_an=an,
            rd_gain=diag_rd, rd_gain2=abs2_diag_rd, rd_mp=mp_rd,
            genie_sr=np.log2(1.0 + sinr_sr), genie_rd=np.log2(1.0 + sinr_rd),
        )
        done += n
    return acc


def _hop_rates(cfg: SystemConfig, mean, var, mp, li, an, hop: str):
    if hop == "sr":
        sinr = cfg.Ps * np.abs(mean) ** 2 / (
            cfg.Ps * var + cfg.Ps * mp + cfg.Pr * li + an)
    else:
        sinr = cfg.Pr * np.abs(mean) ** 2 / (cfg.Pr * var + cfg.Pr * mp + 1.0)
    return np.log2(1.0 + sinr)


def mc_rate(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str,
            trials: int, rng: np.random.Generator,
            batches: int = DEFAULT_BATCHES) -> McRateResult:
    """Simulate the bound ingredients and assemble the per-pair rates."""
    acc = _simulate(cfg, profile, scheme, trials, rng, batches)
    cnt = acc.counts[:, None]

    def pooled(batched):
        return np.sum(batched, axis=0) / trials

    def terms_of(gain, gain2, mp, li, an):
        mean_b = gain / cnt
        var_b = np.maximum(gain2 / cnt - np.abs(mean_b) ** 2, 0.0)
        mp_b, li_b, an_b = mp / cnt, li / cnt, an / cnt
        mean = pooled(gain)
        var = np.maximum(pooled(gain2) - np.abs(mean) ** 2, 0.0)
        return (
            HopTerms(
                mean_gain=mean, var_gain=var, multipair=pooled(mp),
                loop=pooled(li), noise=pooled(an),
                stderr_mean_gain=_stderr(np.abs(mean_b)),
                stderr_var_gain=_stderr(var_b),
                stderr_multipair=_stderr(mp_b),
                stderr_loop=_stderr(li_b),
                stderr_noise=_stderr(an_b),
            ),
            (mean_b, var_b, mp_b, li_b, an_b),
        )

    sr_terms, sr_b = terms_of(acc.sr_gain, acc.sr_gain2, acc.sr_mp, acc.sr_li, acc.sr_an)
    rd_terms, rd_b = terms_of(
        acc.rd_gain, acc.rd_gain2, acc.rd_mp, np.zeros_like(acc.rd_mp),
        np.ones_like(acc.rd_mp))

    r_sr = _hop_rates(cfg, sr_terms.mean_gain, sr_terms.var_gain,
                      sr_terms.multipair, sr_terms.loop, sr_terms.noise, "sr")
    r_rd = _hop_rates(cfg, rd_terms.mean_gain, rd_terms.var_gain,
                      rd_terms.multipair, 0.0, 0.0, "rd")
    r_sr_b = _hop_rates(cfg, sr_b[0], sr_b[1], sr_b[2], sr_b[3], sr_b[4], "sr")
    r_rd_b = _hop_rates(cfg, rd_b[0], rd_b[1], rd_b[2], 0.0, 0.0, "rd")
    e2e_b = np.minimum(r_sr_b, r_rd_b)
    r_e2e = np.minimum(r_sr, r_rd)

    return McRateResult(
        r_sr=r_sr, r_rd=r_rd, r_e2e=r_e2e,
        stderr_r_sr=_stderr(r_sr_b), stderr_r_rd=_stderr(r_rd_b),
        stderr_r_e2e=_stderr(e2e_b),
        sum_rate=float(np.sum(r_e2e)),
        stderr_sum_rate=float(_stderr(np.sum(e2e_b, axis=1))),
        sr_terms=sr_terms, rd_terms=rd_terms, scheme=scheme, trials=trials,
    )


def genie_rates(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str,
                trials: int, rng: np.random.Generator,
                batches: int = DEFAULT_BATCHES) -> GenieResult:
    """Average instantaneous-SINR rates (decoder knows each realized gain)."""
    acc = _simulate(cfg, profile, scheme, trials, rng, batches)
    cnt = acc.counts[:, None]
    sr_b, rd_b = acc.genie_sr / cnt, acc.genie_rd / cnt
    e2e_b = np.minimum(sr_b, rd_b)
    r_sr = np.sum(acc.genie_sr, axis=0) / trials
    r_rd = np.sum(acc.genie_rd, axis=0) / trials
    r_e2e = np.minimum(r_sr, r_rd)
    return GenieResult(
        r_sr=r_sr, r_rd=r_rd, r_e2e=r_e2e,
        stderr_r_sr=_stderr(sr_b), stderr_r_rd=_stderr(rd_b),
        stderr_r_e2e=_stderr(e2e_b),
        sum_rate=float(np.sum(r_e2e)),
        stderr_sum_rate=float(_stderr(np.sum(e2e_b, axis=1))),
        scheme=scheme, trials=trials,
    )


def wishart_inverse_moment(n_ant: int, variances, trials: int,
                           rng: np.random.Generator,
                           batches: int = DEFAULT_BATCHES):
    """MC estimate of E{[(G^H G)^-1]_kk} for G with iid CN(0, var_k) columns.

    Returns (mean, stderr) arrays; the closed form is 1/((n_ant - K) var_k).
    """
    variances = np.asarray(variances, dtype=float)
    k = variances.size
    if n_ant <= k:
        raise ValueError("need more antennas than columns")
    edges = _batch_edges(trials, batches)
    sums = np.zeros((batches, k))
    counts = np.zeros(batches)
    chunk = max(1, int(48e6 / (16.0 * n_ant * k)))
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        g = np.sqrt(variances / 2.0) * (
            rng.standard_normal((n, n_ant, k))
            + 1j * rng.standard_normal((n, n_ant, k)))
        gram = np.swapaxes(g, 1, 2).conj() @ g
        inv_diag = np.diagonal(np.linalg.inv(gram), axis1=1, axis2=2).real
        idx = _batch_index(done, n, edges)
        np.add.at(sums, idx, inv_diag)
        np.add.at(counts, idx, 1.0)
        done += n
    mean = np.sum(sums, axis=0) / trials
    return mean, _stderr(sums / counts[:, None])


def li_approx_oracle(cfg: SystemConfig, profile: LargeScaleProfile,
                     trials: int, rng: np.random.Generator, pair: int = 0,
                     batches: int = DEFAULT_BATCHES):
    """Measured ZF loop-interference power for one pair vs its closed form.

    Returns (mc, approx): mc is the sample mean of Pr E{|w_k^T G_RR A|^2}
    under ZF processing; approx is sigma_li_sq Pr (Ntx-K) / (sigma_sr_k^2
    Ntx (Nrx-K)). The gap between the two is the only approximation step in
    the first-hop ZF rate formula.
    """
    if not 0 <= pair < cfg.K:
        raise ValueError("pair index out of range")
    acc = _simulate(cfg, profile, "zf", trials, rng, batches)
    mc = cfg.Pr * float(np.sum(acc.sr_li[:, pair]) / trials)
    s2 = float(profile.sigma_sr_sq[pair])
    approx = (cfg.sigma_li_sq * cfg.Pr * (cfg.Ntx - cfg.K)
              / (s2 * cfg.Ntx * (cfg.Nrx - cfg.K)))
    return mc, approx


def convergence_probe(kind: str, cfg: SystemConfig, profile: LargeScaleProfile,
                      scheme: str, trials: int, rng: np.random.Generator,
                      er: float | None = None) -> float:
    """Scalar figures that must vanish as the arrays grow.

    kind "decode": mean square of the decoded first-hop symbol around
    sqrt(Ps) x_k, after removing the ZF unit gain or the Nrx sigma^2 MRC gain.
    kind "loop_power": per-antenna received self-interference power when the
    relay spends Pr = er/Ntx.
    kind "forward": mean square of the destination signal around its
    deterministic large-array amplitude, again with Pr = er/Ntx.

    All three average over pairs and trials and return a single float.
    """
    if kind in ("loop_power", "forward") and (er is None or er <= 0):
        raise ValueError(f"kind {kind!r} needs er > 0")
    chunk = _chunk_size(cfg)
    total = 0.0
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        ghat_sr, err_sr, ghat_rd, err_rd, g_rr = direct_channel_batch(
            cfg, profile, n, rng)
        w_t, a = _processing(cfg, profile, scheme, ghat_sr, ghat_rd)
        x = _cn_vec(n, cfg.K, rng)
        x_fwd = _cn_vec(n, cfg.K, rng)

        if kind == "decode":
            noise = _cn_vec(n, cfg.Nrx, rng)
            y = (np.sqrt(cfg.Ps) * ((ghat_sr + err_sr) @ x[..., None])
                 + np.sqrt(cfg.Pr) * (g_rr @ a @ x_fwd[..., None])
                 + noise[..., None])
            r = (w_t @ y)[..., 0]
            if scheme == "mr":
                r = r / (cfg.Nrx * profile.sigma_sr_sq)
            resid = r - np.sqrt(cfg.Ps) * x
        elif kind == "loop_power":
            s = np.sqrt(er / cfg.Ntx) * (a @ x_fwd[..., None])
            resid = (g_rr @ s)[..., 0]  # axis-1 average below is per antenna
        elif kind == "forward":
            pr = er / cfg.Ntx
            recv = np.sqrt(pr) * (np.swapaxes(ghat_rd + err_rd, 1, 2)
                                  @ a @ x_fwd[..., None])[..., 0]
            if scheme == "zf":
                limit = np.sqrt(er / np.sum(1.0 / profile.sigma_rd_sq))
            else:
                limit = np.sqrt(er * profile.sigma_rd_sq**2
                                / np.sum(profile.sigma_rd_sq))
            resid = recv - limit * x_fwd
        else:
            raise ValueError(f"unknown probe kind {kind!r}")
        total += float(np.sum(np.abs(resid) ** 2)) / resid.shape[1]
        done += n
    return total / trials


def _cn_vec(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))) / np.sqrt(2.0)
