"""Closed-form achievable rates and spectral efficiencies.

Everything here is deterministic in (cfg, profile): the finite-antenna
SINR expressions for ZF and MRC/MRT, full-duplex and half-duplex sum
spectral efficiencies, hybrid mode selection, the large-array power-scaling
limits, and the inverse problem of the transmit power required for a target
per-pair rate.

The SINRs are evaluated through the per-source-power coefficient form

    SINR_SR,k = a_k p_k / (sum_j b_j p_j + c_k P_r + 1)
    SINR_RD,k = d_k P_r / (e_k P_r + 1)

which reduces to the uniform-power expressions when all p_k equal Ps. The
same coefficients drive the power-allocation module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import LargeScaleProfile, SystemConfig, make_profile

SCHEMES = ("zf", "mr")


@dataclass(frozen=True)
class RateReport:
    """Per-pair rates (bits/channel use) and the sum spectral efficiency."""

    r_sr: np.ndarray
    r_rd: np.ndarray
    r_e2e: np.ndarray
    sum_se: float
    scheme: str
    mode: str  # "fd" or "hd"


def zf_coefficient_arrays(cfg: SystemConfig, profile: LargeScaleProfile):
    """(a, b, c, d, e) vectors of the ZF SINR form."""
    if cfg.Nrx <= cfg.K or cfg.Ntx <= cfg.K:
        raise ValueError("zero forcing needs Nrx > K and Ntx > K")
    k = cfg.K
    a = (cfg.Nrx - k) * profile.sigma_sr_sq
    b = profile.beta_sr - profile.sigma_sr_sq
    c = np.full(k, cfg.sigma_li_sq * (1.0 - k / cfg.Ntx))
    d = np.full(k, (cfg.Ntx - k) / np.sum(1.0 / profile.sigma_rd_sq))
    e = profile.beta_rd - profile.sigma_rd_sq
    return a, b, c, d, e


def mr_coefficient_arrays(cfg: SystemConfig, profile: LargeScaleProfile):
    """(a, b, c, d, e) vectors of the MRC/MRT SINR form."""
    a = cfg.Nrx * profile.sigma_sr_sq
    b = profile.beta_sr.copy()
    c = np.full(cfg.K, cfg.sigma_li_sq)
    d = profile.sigma_rd_sq**2 / np.sum(profile.sigma_rd_sq) * cfg.Ntx
    e = profile.beta_rd.copy()
    return a, b, c, d, e


def coefficient_arrays(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str):
    if scheme == "zf":
        return zf_coefficient_arrays(cfg, profile)
    if scheme == "mr":
        return mr_coefficient_arrays(cfg, profile)
    raise ValueError(f"unknown scheme {scheme!r}")


def sinr_from_coefficients(coeffs, p_s: np.ndarray, p_r: float):
    """Per-pair (SINR_SR, SINR_RD) at source powers p_s and relay power p_r."""
    a, b, c, d, e = coeffs
    sr = a * p_s / (np.dot(b, p_s) + c * p_r + 1.0)
    rd = d * p_r / (e * p_r + 1.0)
    return sr, rd


def _report(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str,
            per_source_powers, mode: str) -> RateReport:
    if mode not in ("fd", "hd"):
        raise ValueError("mode must be 'fd' or 'hd'")
    if per_source_powers is None:
        p_s = np.full(cfg.K, cfg.Ps)
    else:
        p_s = np.asarray(per_source_powers, dtype=float)
        if p_s.shape != (cfg.K,):
            raise ValueError("per_source_powers must have length K")
        if np.any(p_s < 0):
            raise ValueError("powers must be >= 0")
    p_r = cfg.Pr
    if mode == "hd":
        # half duplex: both hops at doubled power, no loop interference
        cfg = replace(cfg, sigma_li_sq=0.0)
        p_s = 2.0 * p_s
        p_r = 2.0 * p_r
    sr, rd = sinr_from_coefficients(coefficient_arrays(cfg, profile, scheme), p_s, p_r)
    r_sr = np.log2(1.0 + sr)
    r_rd = np.log2(1.0 + rd)
    r_e2e = np.minimum(r_sr, r_rd)
    return RateReport(
        r_sr=r_sr, r_rd=r_rd, r_e2e=r_e2e,
        sum_se=sum_se(r_e2e, cfg.T, cfg.tau, mode),
        scheme=scheme, mode=mode,
    )


def rate_zf(cfg: SystemConfig, profile: LargeScaleProfile,
            per_source_powers=None, mode: str = "fd") -> RateReport:
    """Closed-form ZF rates (approximate in the loop-interference term)."""
    return _report(cfg, profile, "zf", per_source_powers, mode)


def rate_mr(cfg: SystemConfig, profile: LargeScaleProfile,
            per_source_powers=None, mode: str = "fd") -> RateReport:
    """Closed-form MRC/MRT rates (exact)."""
    return _report(cfg, profile, "mr", per_source_powers, mode)


def sum_se(r_e2e, T: int, tau: int, mode: str = "fd") -> float:
    """Sum spectral efficiency: the training prelog applied to the summed rates.

    Full duplex uses (T - tau)/T; half duplex halves it for the two-slot
    protocol. The rates passed in must already match the mode (the rate_*
    functions handle the half-duplex power doubling and LI removal).
    """
    if not tau < T:
        raise ValueError("tau must be below T")
    prelog = (T - tau) / T
    if mode == "hd":
        prelog /= 2.0
    elif mode != "fd":
        raise ValueError("mode must be 'fd' or 'hd'")
    return float(prelog * np.sum(r_e2e))


def hybrid_select(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str):
    """Pick the duplex mode with the larger sum SE (full duplex on ties)."""
    fd = _report(cfg, profile, scheme, None, "fd").sum_se
    hd = _report(cfg, profile, scheme, None, "hd").sum_se
    return ("fd", fd) if fd >= hd else ("hd", hd)


def asymptotic_se(case: str, scheme: str, cfg: SystemConfig, profile: LargeScaleProfile,
                  Es: float, Er: float, kappa: float | None = None) -> float:
    """Large-array sum SE limit under the two power-scaling regimes.

    Case I: Pp fixed, Ps = Es/Nrx, Pr = Er/Ntx. Case II: Pp = Ps = Es/sqrt(Nrx),
    Pr = Er/sqrt(Ntx) with Ntx = kappa*Nrx; the pilot energy then vanishes and
    the limits depend on beta and tau instead of sigma^2 (the estimation
    squaring effect).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if case == "I":
        if scheme == "zf":
            sr = Es * profile.sigma_sr_sq
            rd = Er / np.sum(1.0 / profile.sigma_rd_sq)
        else:
            sr = Es * profile.sigma_sr_sq
            rd = profile.sigma_rd_sq**2 * Er / np.sum(profile.sigma_rd_sq)
    elif case == "II":
        if kappa is None or kappa <= 0:
            raise ValueError("case II needs kappa = Ntx/Nrx > 0")
        sr = cfg.tau * Es**2 * profile.beta_sr**2
        rd_common = np.sqrt(kappa) * cfg.tau * Es * Er / np.sum(1.0 / profile.beta_rd**2)
        if scheme == "zf":
            rd = rd_common
        else:
            rd = profile.beta_rd**4 * rd_common
    else:
        raise ValueError("case must be 'I' or 'II'")
    rates = np.log2(1.0 + np.minimum(sr, rd))
    return sum_se(rates, cfg.T, cfg.tau, "fd")


def _min_rate_at(cfg: SystemConfig, profile: LargeScaleProfile, scheme: str,
                 ps: float, pilot_tracks_data: bool) -> float:
    pp = ps if pilot_tracks_data else cfg.Pp
    trial_cfg = replace(cfg, Ps=ps, Pr=cfg.K * ps, Pp=pp)
    trial_profile = (
        make_profile(profile.beta_sr, profile.beta_rd, cfg.tau, pp)
        if pilot_tracks_data else profile
    )
    report = _report(trial_cfg, trial_profile, scheme, None, "fd")
    return float(np.min(report.r_e2e))


def required_power(target_rate_per_pair: float, scheme: str, cfg: SystemConfig,
                   profile: LargeScaleProfile, pilot_tracks_data: bool = False) -> float:
    """Smallest Ps with Pr = K*Ps reaching the per-pair rate target on every pair.

    The target is in bits/channel use without the training prelog. With
    pilot_tracks_data the pilot power follows Ps (and the estimation
    variances with it); otherwise Pp stays at cfg.Pp. Returns math.inf when
    the target is unreachable even at the bracket ceiling: the SINRs stay
    bounded as Ps grows because Pr = K*Ps scales the loop interference too.
    """
    if target_rate_per_pair <= 0:
        raise ValueError("target rate must be positive")

    def reaches(ps: float) -> bool:
        return _min_rate_at(cfg, profile, scheme, ps, pilot_tracks_data) >= target_rate_per_pair

    lo, hi = 1e-6, 1e6
    while not reaches(hi):
        hi *= 10.0
        if hi > 1e12:
            return math.inf
    if reaches(lo):
        return lo
    # min rate is nondecreasing in Ps under the Pr = K*Ps coupling
    while (hi - lo) > 1e-6 * hi:
        mid = math.sqrt(lo * hi)
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return hi
