"""ZF and MRC/MRT receive/precoding matrices with their power normalizations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelSet
from .model import LargeScaleProfile, SystemConfig

COND_LIMIT = 1e12


class SingularGramError(Exception):
    """Raised when an estimated Gram matrix is numerically singular (degenerate draw)."""


@dataclass(frozen=True)
class ProcessingPair:
    """Receive matrix W^T (K x Nrx) and precoder A (Ntx x K) for one scheme.

    alpha is the long-term precoder normalization. It depends only on the
    profile and antenna counts, never on the channel realization, so the
    transmit power constraint E{||A x||^2} = 1 holds on average rather than
    per draw.
    """

    w_t: np.ndarray
    a: np.ndarray
    scheme: str  # "zf" or "mr"
    alpha: float


def alpha_zf(cfg: SystemConfig, profile: LargeScaleProfile) -> float:
    return float(np.sqrt((cfg.Ntx - cfg.K) / np.sum(1.0 / profile.sigma_rd_sq)))


def alpha_mrt(cfg: SystemConfig, profile: LargeScaleProfile) -> float:
    return float(np.sqrt(1.0 / (cfg.Ntx * np.sum(profile.sigma_rd_sq))))


def _cho_or_raise(gram: np.ndarray):
    if np.linalg.cond(gram) > COND_LIMIT:
        raise SingularGramError("estimated Gram matrix condition number above 1e12")
    try:
        return cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond check fires first
        raise SingularGramError("estimated Gram matrix is not positive definite") from exc


def zf_pair(channels: ChannelSet, profile: LargeScaleProfile, cfg: SystemConfig) -> ProcessingPair:
    """Zero-forcing pair: W^T = (Ghat^H Ghat)^-1 Ghat^H, A = alpha Ghat* (Ghat^T Ghat*)^-1."""
    if cfg.Nrx <= cfg.K or cfg.Ntx <= cfg.K:
        raise ValueError("zero forcing needs Nrx > K and Ntx > K")
    gram_sr = channels.ghat_sr.conj().T @ channels.ghat_sr
    w_t = cho_solve(_cho_or_raise(gram_sr), channels.ghat_sr.conj().T)

    gram_rd = channels.ghat_rd.conj().T @ channels.ghat_rd
    # plain transpose of gram^-1 Ghat^H equals Ghat* (Ghat^T Ghat*)^-1
    alpha = alpha_zf(cfg, profile)
    a = alpha * cho_solve(_cho_or_raise(gram_rd), channels.ghat_rd.conj().T).T
    return ProcessingPair(w_t=w_t, a=a, scheme="zf", alpha=alpha)


def mr_pair(channels: ChannelSet, profile: LargeScaleProfile, cfg: SystemConfig) -> ProcessingPair:
    """MRC receiver W^T = Ghat^H and MRT precoder A = alpha Ghat*."""
    return ProcessingPair(
        w_t=channels.ghat_sr.conj().T,
        a=alpha_mrt(cfg, profile) * channels.ghat_rd.conj(),
        scheme="mr",
        alpha=alpha_mrt(cfg, profile),
    )
