"""System configuration, large-scale fading profiles, and the urban drop model.

All powers and gains are linear. dB values are converted at the CLI/config
boundary, never inside formulas.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of the multipair full-duplex relay link.

    Attributes
    ----------
    K : number of source-destination pairs
    Nrx : relay receive antennas
    Ntx : relay transmit antennas
    T : coherence interval in symbols
    tau : training length in symbols (2K <= tau < T)
    Pp : pilot power (linear)
    Ps : per-source data power (linear, uniform case)
    Pr : relay total transmit power (linear)
    sigma_li_sq : loop-interference variance (linear)
    delay_d : relay processing delay in symbols
    """

    K: int
    Nrx: int
    Ntx: int
    T: int = 200
    tau: int = 20
    Pp: float = 10.0
    Ps: float = 10.0
    Pr: float = 100.0
    sigma_li_sq: float = 1.0
    delay_d: int = 1

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.Nrx < 1 or self.Ntx < 1:
            raise ValueError("antenna counts must be >= 1")
        if not 2 * self.K <= self.tau < self.T:
            raise ValueError("training length must satisfy 2K <= tau < T")
        for name in ("Pp", "Ps", "Pr", "sigma_li_sq"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.delay_d < 1:
            raise ValueError("delay_d must be >= 1")

    @property
    def prelog(self) -> float:
        """Training overhead factor (T - tau) / T of the full-duplex mode."""
        return (self.T - self.tau) / self.T


def estimation_variance(beta, tau: int, Pp: float):
    """MMSE estimate variance tau*Pp*beta^2 / (tau*Pp*beta + 1).

    Accepts scalar or array ``beta`` and broadcasts. The result is strictly
    below beta for finite pilot energy and approaches beta as tau*Pp grows.
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ValueError("beta must be >= 0")
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if Pp < 0:
        raise ValueError("Pp must be >= 0")
    out = tau * Pp * beta**2 / (tau * Pp * beta + 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LargeScaleProfile:
    """Per-pair large-scale gains and the derived estimation variances.

    Arrays are stored read-only; instances are safe to share across threads.
    Use :func:`make_profile` instead of constructing directly so the sigma
    vectors stay consistent with (beta, tau, Pp).
    """

    beta_sr: np.ndarray
    beta_rd: np.ndarray
    sigma_sr_sq: np.ndarray
    sigma_rd_sq: np.ndarray

    def __post_init__(self) -> None:
        for name in ("beta_sr", "beta_rd", "sigma_sr_sq", "sigma_rd_sq"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        k = self.beta_sr.shape
        if not (self.beta_rd.shape == self.sigma_sr_sq.shape == self.sigma_rd_sq.shape == k):
            raise ValueError("profile vectors must share one length K")
        if np.any(self.beta_sr <= 0) or np.any(self.beta_rd <= 0):
            raise ValueError("large-scale gains must be positive")

    @property
    def K(self) -> int:
        return self.beta_sr.shape[0]


def make_profile(beta_sr, beta_rd, tau: int, Pp: float) -> LargeScaleProfile:
    """Build a LargeScaleProfile, deriving sigma^2 from the pilot phase."""
    beta_sr = np.asarray(beta_sr, dtype=float)
    beta_rd = np.asarray(beta_rd, dtype=float)
    if beta_sr.ndim != 1 or beta_sr.shape != beta_rd.shape:
        raise ValueError("beta_sr and beta_rd must be 1-D vectors of equal length")
    if beta_sr.size < 1:
        raise ValueError("profile needs at least one pair")
    if np.any(beta_sr <= 0) or np.any(beta_rd <= 0):
        raise ValueError("large-scale gains must be positive")
    return LargeScaleProfile(
        beta_sr=beta_sr,
        beta_rd=beta_rd,
        sigma_sr_sq=estimation_variance(beta_sr, tau, Pp),
        sigma_rd_sq=estimation_variance(beta_rd, tau, Pp),
    )


# Fixed ten-pair urban profile: one saved draw of the drop model below,
# used by the power-allocation experiments so results are reproducible.
SNAPSHOT_BETA_SR = (0.749, 0.246, 0.125, 0.635, 4.468, 0.031, 0.064, 0.257, 0.195, 0.315)
SNAPSHOT_BETA_RD = (0.070, 0.121, 0.134, 0.209, 0.198, 0.184, 0.065, 0.051, 0.236, 1.641)


def snapshot_profile(tau: int, Pp: float) -> LargeScaleProfile:
    """The fixed K=10 urban snapshot profile with sigma^2 for (tau, Pp)."""
    return make_profile(SNAPSHOT_BETA_SR, SNAPSHOT_BETA_RD, tau, Pp)


@dataclass(frozen=True)
class DropGeometry:
    """Urban cell geometry: nodes drop uniformly on a disk, relay at center."""

    disk_diameter: float = 1000.0
    shadow_sigma_db: float = 8.0
    path_exponent: float = 3.8
    ref_distance: float = 200.0

    def __post_init__(self) -> None:
        if self.disk_diameter <= 0 or self.ref_distance <= 0 or self.path_exponent <= 0:
            raise ValueError("geometry lengths and exponent must be positive")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be >= 0")


def draw_urban_profile(
    geometry: DropGeometry, K: int, tau: int, Pp: float, rng: np.random.Generator
) -> LargeScaleProfile:
    """Draw one random large-scale realization of the urban drop model.

    Each gain is beta = z / (1 + (l/l0)^nu) where l is the distance of a
    uniform point on the disk from the center and 10*log10(z) is zero-mean
    normal with std shadow_sigma_db. Source and destination sides use the
    same model with independent draws.
    """
    radius = geometry.disk_diameter / 2.0

    def gains(n: int) -> np.ndarray:
        # uniform over the disk area: r = R*sqrt(u)
        dist = radius * np.sqrt(rng.uniform(size=n))
        shadow = 10.0 ** (geometry.shadow_sigma_db * rng.standard_normal(n) / 10.0)
        return shadow / (1.0 + (dist / geometry.ref_distance) ** geometry.path_exponent)

    return make_profile(gains(K), gains(K), tau, Pp)
