"""Spatial model: BS/UAV samplers, the UAV-UE distance density and the
exclusion distances implied by max-average-power association."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError, DomainError

if TYPE_CHECKING:
    from .params import NetworkParams


@dataclass(frozen=True)
class DeploymentGeometry:
    """Where things are.

    Densities are per square metre and all lengths in metres. The UAV disk is
    centred above the origin; the UE sits on the ground at ``(v_0, 0, 0)``.
    """

    lambda_g: float = 10e-6
    h_g: float = 25.0
    delta_b: float = 1.0
    n_u: int = 10
    h_u: float = 100.0
    r_u: float = 1000.0
    v_0: float = 0.0
    sim_radius: float = 5000.0

    def __post_init__(self) -> None:
        checks = [
            ("lambda_g", self.lambda_g > 0, "must be positive"),
            ("h_g", self.h_g > 0, "must be positive"),
            ("h_u", self.h_u > 0, "must be positive"),
            ("r_u", self.r_u > 0, "must be positive"),
            ("delta_b", 0.0 <= self.delta_b <= 1.0, "must lie in [0, 1]"),
            ("n_u", int(self.n_u) == self.n_u and self.n_u >= 0, "must be a non-negative integer"),
            ("v_0", 0.0 <= self.v_0 <= self.r_u, "must lie in [0, r_u]"),
            ("sim_radius", self.sim_radius >= 3.0 * self.r_u, "must be at least 3*r_u"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(msg, field=name)

    @property
    def lambda_b(self) -> float:
        return self.delta_b * self.lambda_g

    @property
    def delta_h(self) -> float:
        return abs(self.h_u - self.h_g)

    @property
    def w_m(self) -> float:
        return float(np.hypot(self.r_u - self.v_0, self.h_u))

    @property
    def w_p(self) -> float:
        return float(np.hypot(self.r_u + self.v_0, self.h_u))


@dataclass
class PointDrop:
    bs_positions: np.ndarray      # (n_bs, 3)
    bs_backhaul_flag: np.ndarray  # (n_bs,) bool
    uav_positions: np.ndarray     # (n_u, 3)


def _uniform_disk(rng: np.random.Generator, n: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    rho = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(-np.pi, np.pi, n)
    return rho * np.cos(phi), rho * np.sin(phi)


def sample_bs_ppp(geom: DeploymentGeometry, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """BS positions (PPP on the simulation disk) and their backhaul flags."""
    n = rng.poisson(geom.lambda_g * np.pi * geom.sim_radius**2)
    x, y = _uniform_disk(rng, n, geom.sim_radius)
    pos = np.column_stack([x, y, np.full(n, geom.h_g)])
    flags = rng.random(n) < geom.delta_b
    return pos, flags


def sample_uav_bpp(geom: DeploymentGeometry, rng: np.random.Generator) -> np.ndarray:
    """Exactly ``n_u`` UAVs, uniform on the disk of radius r_u at height h_u."""
    x, y = _uniform_disk(rng, int(geom.n_u), geom.r_u)
    return np.column_stack([x, y, np.full(x.size, geom.h_u)])


def sample_drop(geom: DeploymentGeometry, rng: np.random.Generator) -> PointDrop:
    bs, flags = sample_bs_ppp(geom, rng)
    return PointDrop(bs, flags, sample_uav_bpp(geom, rng))


def distance_pdf_fw(w, geom: DeploymentGeometry):
    """Density of the 3-D distance from a uniformly placed UAV to the UE.

    Zero outside ``[h_u, w_p]``. Beyond ``w_m`` only the arc of the circle of
    horizontal radius ``sqrt(w^2 - h_u^2)`` around the UE that falls inside the
    UAV disk contributes.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise DomainError("distance must be non-negative")
    h, r_u, v0 = geom.h_u, geom.r_u, geom.v_0
    w_m, w_p = geom.w_m, geom.w_p
    out = np.where((w >= h) & (w <= w_m), 2.0 * w / r_u**2, 0.0)
    if v0 > 0:
        outer = (w > w_m) & (w <= w_p)
        if np.any(outer):
            wo = w[outer] if w.ndim else w
            rho2 = np.maximum(wo**2 - h**2, 0.0)
            arg = (rho2 + v0**2 - r_u**2) / (2.0 * v0 * np.sqrt(rho2))
            val = 2.0 * wo / (np.pi * r_u**2) * np.arccos(np.clip(arg, -1.0, 1.0))
            if w.ndim:
                out[outer] = val
            else:
                out = val
    return float(out) if np.ndim(out) == 0 else out


EXCLUSION_KINDS = ("E_gl", "E_gn", "E_ul", "E_un", "E_ln", "E_nl")


def exclusion_region(kind: str, x, params: "NetworkParams"):
    """Exclusion distance of the given kind at serving distance ``x``.

    ``E_gl``/``E_gn``: 3-D distance inside which no LOS/NLOS UAV can lie when
    the UE is served by a BS at horizontal distance x. ``E_ul``/``E_un``:
    horizontal distance inside which no BS can lie when served by a LOS/NLOS
    UAV at 3-D distance x (0 when every BS position is admissible).
    ``E_ln``/``E_nl``: same-tier UAV exclusion across LOS classes.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("exclusion distance argument must be non-negative")
    p = params
    h_g = p.geometry.h_g
    eta = {"l": p.eta_l, "n": p.eta_n}
    if kind in ("E_gl", "E_gn"):
        ez = eta[kind[-1]]
        out = (p.p_u / p.p_g) ** (1.0 / ez) * (x**2 + h_g**2) ** (p.eta_g / (2.0 * ez))
    elif kind in ("E_ul", "E_un"):
        ez = eta[kind[-1]]
        rad = (p.p_g / p.p_u) ** (2.0 / p.eta_g) * x ** (2.0 * ez / p.eta_g) - h_g**2
        out = np.sqrt(np.maximum(rad, 0.0))
    elif kind in ("E_ln", "E_nl"):
        out = x ** (eta[kind[2]] / eta[kind[3]])
    else:
        raise ValueError(f"unknown exclusion kind {kind!r}")
    return float(out) if np.ndim(out) == 0 else out
