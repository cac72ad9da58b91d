"""Propagation and antenna layer.

LOS probabilities for the access (UAV-UE) and backhaul (BS-UAV) links,
received-power laws, fading samplers, the sectored antenna pattern and the
four-atom gain distributions of the backhaul links.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import erf, floor, sqrt
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError, DomainError

if TYPE_CHECKING:
    from .params import NetworkParams


@dataclass(frozen=True)
class AccessLosParams:
    """Sigmoid access-LOS constants; ``b`` is per degree of elevation."""

    a: float = 11.95
    b: float = 0.136

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ConfigError("must be positive", field="los_a")
        if not self.b > 0:
            raise ConfigError("must be positive", field="los_b")


@dataclass(frozen=True)
class BackhaulLosParams:
    """Exponential backhaul-LOS constants; ``d`` is per degree of elevation."""

    c: float = 1.0
    d: float = 0.106
    e: float = 1.0

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ConfigError("must be positive", field="los_c")
        if not self.d > 0:
            raise ConfigError("must be positive", field="los_d")
        # kappa ranges over [e - c, e - c*exp(-90 d)] as elevation goes 0 -> 90.
        if self.e - self.c < 0 or self.e - self.c * np.exp(-90.0 * self.d) > 1:
            raise ConfigError("c, d, e must keep the LOS probability within [0, 1]", field="los_e")


@dataclass(frozen=True)
class ItuLosParams:
    alpha: float
    beta: float
    gamma: float
    h_tx: float
    h_rx: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "h_tx", "h_rx"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be positive", field=name)


@dataclass(frozen=True)
class AntennaPattern:
    """Two-level sectored pattern: ``g_max`` within ``theta/2`` of boresight."""

    g_max: float
    g_min: float
    theta: float

    def __post_init__(self) -> None:
        if not (self.g_max > self.g_min > 0):
            raise ConfigError("need g_max > g_min > 0", field="g_max")
        if not (0 < self.theta <= 2 * np.pi):
            raise ConfigError("beamwidth must lie in (0, 2*pi]", field="theta")

    @property
    def main_lobe_fraction(self) -> float:
        return self.theta / (2.0 * np.pi)


@dataclass(frozen=True)
class GainDistribution:
    """Four-atom PMF over the BS-UAV gain products, ordered as
    (max*max, max_g*min_u, min_g*max_u, min*min)."""

    gains: tuple[float, float, float, float]
    probs: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.gains) != 4 or len(self.probs) != 4:
            raise ValueError("a gain distribution has exactly four atoms")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("gain probabilities must be non-negative and sum to 1")

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.gains, self.probs))

    def mean(self) -> float:
        return float(np.dot(self.gains, self.probs))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        cum = np.cumsum(self.probs)[:-1]
        idx = np.searchsorted(cum, rng.random(size), side="right")
        return np.asarray(self.gains)[idx]


@dataclass(frozen=True)
class FadingParams:
    m_l: int = 3
    m_n: int = 2

    def __post_init__(self) -> None:
        for name in ("m_l", "m_n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError("must be a positive integer", field=name)


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def los_prob_access(r, h_u: float, p: AccessLosParams):
    """Probability that a UAV at 3-D distance ``r`` has LOS to the UE."""
    r = np.asarray(r, dtype=float)
    if np.any(r < h_u * (1 - 1e-12)):
        raise DomainError("UAV-UE distance cannot be below the UAV height")
    horiz = np.sqrt(np.maximum(r**2 - h_u**2, 0.0))
    theta = np.degrees(np.arctan2(h_u, horiz))
    return _scalar(1.0 / (1.0 + p.a * np.exp(-p.b * (theta - p.a))))


def los_prob_backhaul(r, delta_h: float, p: BackhaulLosParams):
    """Probability that a BS at horizontal distance ``r`` has LOS to a UAV."""
    r = np.asarray(r, dtype=float)
    theta = np.degrees(np.arctan2(delta_h, r))
    return _scalar(p.e - p.c * np.exp(-p.d * theta))


def los_prob_itu(r: float, p: ItuLosParams) -> float:
    """Building-blockage LOS probability for horizontal distance ``r`` (m).

    Each of the ``m + 1`` buildings crossed must stay below the ray at its
    position; building heights are Rayleigh with scale ``gamma``.
    """
    if not r > 0:
        raise DomainError("horizontal distance must be positive")
    m = floor(r * sqrt(p.alpha * p.beta) / 1000.0 - 1.0)
    if m < 0:
        return 1.0
    n = np.arange(m + 1)
    ray = p.h_tx - (n + 0.5) * (p.h_tx - p.h_rx) / (m + 1)
    return float(np.prod(1.0 - np.exp(-ray**2 / (2.0 * p.gamma**2))))


LINKS = ("bs_ue", "uav_ue_los", "uav_ue_nlos", "bs_uav_los", "bs_uav_nlos")


def received_power(link: str, distance, omega, params: "NetworkParams", gain=1.0):
    """Received power (W) on one link.

    ``distance`` is horizontal for ``bs_ue`` and ``bs_uav_*`` links and the
    3-D distance for ``uav_ue_*`` links, matching how each law is written.
    """
    d = np.asarray(distance, dtype=float)
    p = params
    if link == "bs_ue":
        if np.any(d < 0):
            raise DomainError("distance must be non-negative")
        out = p.p_g * (d**2 + p.geometry.h_g**2) ** (-p.eta_g / 2.0) * omega
    elif link in ("uav_ue_los", "uav_ue_nlos"):
        if np.any(d <= 0):
            raise DomainError("distance must be positive")
        eta = p.eta_l if link == "uav_ue_los" else p.eta_n
        out = p.p_u * d ** (-eta) * omega
    elif link in ("bs_uav_los", "bs_uav_nlos"):
        dh = p.geometry.delta_h
        if np.any(d < 0) or (dh == 0 and np.any(d == 0)):
            raise DomainError("distance must be positive")
        los = link == "bs_uav_los"
        eta, c = (p.eta_l, p.c_l) if los else (p.eta_n, p.c_n)
        out = p.p_b * gain * c * (d**2 + dh**2) ** (-eta / 2.0) * omega
    else:
        raise ValueError(f"unknown link {link!r}")
    return _scalar(out)


def sample_fading(kind: str, rng: np.random.Generator, size=None, m: int = 1):
    """Unit-mean power gains: ``rayleigh`` is Exp(1), ``nakagami`` Gamma(m, 1/m)."""
    if kind == "rayleigh":
        return rng.standard_exponential(size)
    if kind == "nakagami":
        if int(m) != m or m < 1:
            raise DomainError("Nakagami shape must be a positive integer")
        return rng.standard_gamma(m, size) / m
    raise ValueError(f"unknown fading kind {kind!r}")


def antenna_gain(phi, pat: AntennaPattern):
    """Gain at boresight offset ``phi`` in [-pi, pi)."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < -np.pi) or np.any(phi >= np.pi):
        raise DomainError("boresight offset must lie in [-pi, pi)")
    return _scalar(np.where(np.abs(phi) <= pat.theta / 2.0, pat.g_max, pat.g_min))


def _gain_products(pat_g: AntennaPattern, pat_u: AntennaPattern) -> tuple:
    return (pat_g.g_max * pat_u.g_max, pat_g.g_max * pat_u.g_min,
            pat_g.g_min * pat_u.g_max, pat_g.g_min * pat_u.g_min)


def _four_atoms(f_g: float, f_u: float) -> tuple:
    return (f_g * f_u, f_g * (1 - f_u), (1 - f_g) * f_u, (1 - f_g) * (1 - f_u))


def interferer_gain_pmf(pat_g: AntennaPattern, pat_u: AntennaPattern) -> GainDistribution:
    """Gain PMF of a randomly oriented (interfering) BS-UAV pair."""
    return GainDistribution(_gain_products(pat_g, pat_u),
                            _four_atoms(pat_g.main_lobe_fraction, pat_u.main_lobe_fraction))


def _half_normal_cdf(x: float, sigma: float) -> float:
    if sigma == 0:
        return 1.0
    return erf(x / (sqrt(2.0) * sigma))


def desired_gain_pmf(pat_g: AntennaPattern, pat_u: AntennaPattern,
                     sigma_g: float, sigma_u: float) -> GainDistribution:
    """Gain PMF of the serving backhaul link under Gaussian beam-steering error.

    Each end stays in its main lobe when its absolute pointing error (half
    normal with scale ``sigma``) is at most half the beamwidth.
    """
    if sigma_g < 0 or sigma_u < 0:
        raise DomainError("misalignment scales must be non-negative")
    f_g = _half_normal_cdf(pat_g.theta / 2.0, sigma_g)
    f_u = _half_normal_cdf(pat_u.theta / 2.0, sigma_u)
    return GainDistribution(_gain_products(pat_g, pat_u), _four_atoms(f_g, f_u))
