"""Semi-analytic coverage model.

Association probabilities, serving-distance densities, interference Laplace
transforms, the mmWave backhaul probability and the conditional and overall
coverage probabilities of the backhaul-unaware and backhaul-aware schemes.

Every quantity is a deterministic function of ``NetworkParams``. The public
functions share one ``AnalyticModel`` per parameter point (kept in a small LRU
cache), so evaluating several metrics of the same scenario reuses the
survival tables and the backhaul probability.

Notation used in the code: ``zeta`` selects the LOS (``"l"``) or NLOS
(``"n"``) class of a UAV-UE link and ``xi`` the class of a BS-UAV link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .channel import desired_gain_pmf, interferer_gain_pmf, los_prob_access, los_prob_backhaul
from .errors import DomainError
from .geometry import distance_pdf_fw
from .numerics import (
    QuadratureSpec,
    derivative_stencil,
    derivatives_from_stencil,
    gauss_2f1_11c_array,
    h_bound,
    integrate,
)
from .params import NetworkParams

OUTER_SPEC = QuadratureSpec(abs_tol=1e-8, rel_tol=1e-7, max_subdivisions=2000)
INNER_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=4000)
# Class masses are also used as normalizers, so they need relative accuracy
# even when tiny.
MASS_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-9, max_subdivisions=4000)
SURVIVAL_NODES = 512

_OTHER = {"l": "n", "n": "l"}


@dataclass(frozen=True)
class AssociationProbs:
    a_ul: float
    a_un: float
    a_g: float

    @property
    def a_u(self) -> float:
        return self.a_ul + self.a_un


@dataclass(frozen=True)
class AwareTransmissionProbs:
    at_ul: float
    at_un: float
    at_g: float
    at_f: float


@dataclass(frozen=True)
class CoverageResult:
    """Overall coverage of one scheme with its components.

    ``p_cov_ul``/``p_cov_un`` are NaN when the corresponding association
    probability is zero (the conditional probability is undefined).
    """

    scheme: str
    p_cov: float
    p_cov_g: float
    p_cov_ul: float
    p_cov_un: float
    a_g: float
    a_ul: float
    a_un: float
    a_f: float
    s_backhaul: float
    warnings: tuple[str, ...] = field(default=())


def _scalar_if(out, *inputs):
    """``out`` as a float when every input was a scalar, else as an array."""
    out = np.asarray(out, dtype=float)
    if all(np.ndim(v) == 0 for v in inputs):
        return float(out.ravel()[0])
    return out


def _cheb_nodes(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n)
    return 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * k / (n - 1))


def _integrate_from(func, lowers, upper: float, spec: QuadratureSpec):
    """Vector of ``int_{lower_i}^{upper} func(v) dv`` in one shared quadrature.

    ``func`` receives ``v`` of shape ``(n, nt)``; it may prepend axes.
    """
    lo = np.minimum(np.asarray(lowers, dtype=float), upper)
    width = upper - lo

    def g(t):
        v = lo[:, None] + width[:, None] * t[None, :]
        return func(v) * width[:, None]

    return integrate(g, 0.0, 1.0, spec)


def _integrate_tail(func, lowers, scales, spec: QuadratureSpec):
    """Vector of ``int_{lower_i}^inf func(v) dv`` via ``v = lower + scale*u/(1-u)``."""
    lo = np.asarray(lowers, dtype=float)
    sc = np.asarray(scales, dtype=float)

    def g(u):
        one_minus = 1.0 - u
        v = lo[:, None] + sc[:, None] * (u / one_minus)[None, :]
        jac = sc[:, None] / (one_minus**2)[None, :]
        with np.errstate(over="ignore", under="ignore"):
            return func(v) * jac

    return integrate(g, 0.0, 1.0, spec)


class AnalyticModel:
    """All analytic quantities for one parameter point.

    Parameters
    ----------
    p : NetworkParams
        Scenario.
    use_cache : bool
        Interpolate the UAV survival functions from a Chebyshev table
        (default). ``False`` integrates them afresh at every abscissa.
    """

    def __init__(self, p: NetworkParams, use_cache: bool = True):
        self.p = p
        self.use_cache = use_cache
        g = p.geometry
        self.n_u = int(g.n_u)
        self.h_u, self.h_g = g.h_u, g.h_g
        self.w_m, self.w_p = g.w_m, g.w_p
        self.lam_g, self.lam_b = g.lambda_g, g.lambda_b
        self.dh = g.delta_h
        self.warnings: list[str] = []
        self._survival_tables: dict[str, CubicHermiteSpline] = {}
        self._memo: dict = {}

    # -- UAV-UE distance layer -------------------------------------------------

    def fw_kappa(self, zeta: str, w):
        """``f_W(w) * kappa_zeta(w)``: density of a single UAV being at
        distance w with LOS class zeta."""
        w = np.asarray(w, dtype=float)
        k = los_prob_access(np.maximum(w, self.h_u), self.h_u, self.p.access_los)
        if zeta == "n":
            k = 1.0 - k
        return distance_pdf_fw(w, self.p.geometry) * k

    def _survival_exact(self, zeta: str, x):
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), self.h_u, self.w_p)
        flat = x.ravel()

        def f(v):
            return self.fw_kappa(zeta, v)

        if not self.h_u < self.w_m < self.w_p:
            return _integrate_from(f, flat, self.w_p, INNER_SPEC).reshape(x.shape)
        # f_W has a kink at w_m when the UE is off-centre; split there.
        out = np.empty_like(flat)
        inner = flat < self.w_m
        if inner.any():
            tail = integrate(f, self.w_m, self.w_p, INNER_SPEC)
            out[inner] = _integrate_from(f, flat[inner], self.w_m, INNER_SPEC) + tail
        if (~inner).any():
            out[~inner] = _integrate_from(f, flat[~inner], self.w_p, INNER_SPEC)
        return out.reshape(x.shape)

    def survival(self, zeta: str, x):
        """``F_zeta(x)``: probability a given UAV has class zeta and lies
        farther than x from the UE (3-D distance)."""
        x_arr = np.asarray(x, dtype=float)
        if not self.use_cache:
            out = self._survival_exact(zeta, x_arr)
        else:
            table = self._survival_tables.get(zeta)
            if table is None:
                nodes = _cheb_nodes(self.h_u, self.w_p, SURVIVAL_NODES)
                if self.h_u < self.w_m < self.w_p:
                    nodes = np.unique(np.append(nodes, self.w_m))
                vals = self._survival_exact(zeta, nodes)
                slope = -self.fw_kappa(zeta, nodes)
                slope[-1] = 0.0
                table = CubicHermiteSpline(nodes, vals, slope)
                self._survival_tables[zeta] = table
            out = np.maximum(table(np.clip(x_arr, self.h_u, self.w_p)), 0.0)
        out = np.reshape(out, x_arr.shape)
        return _scalar_if(out, x)

    def exclusion(self, kind: str, x):
        """Exclusion distances; see ``geometry.exclusion_region``."""
        p = self.p
        x = np.asarray(x, dtype=float)
        if kind in ("E_gl", "E_gn"):
            ez = p.eta(kind[-1])
            return (p.p_u / p.p_g) ** (1.0 / ez) * (x**2 + self.h_g**2) ** (p.eta_g / (2.0 * ez))
        if kind in ("E_ul", "E_un"):
            ez = p.eta(kind[-1])
            rad = (p.p_g / p.p_u) ** (2.0 / p.eta_g) * x ** (2.0 * ez / p.eta_g) - self.h_g**2
            return np.sqrt(np.maximum(rad, 0.0))
        if kind in ("E_ln", "E_nl"):
            return x ** (p.eta(kind[2]) / p.eta(kind[3]))
        raise ValueError(f"unknown exclusion kind {kind!r}")

    def _cross(self, zeta: str, y):
        return self.exclusion(f"E_{zeta}{_OTHER[zeta]}", y)

    def bracket_bs(self, x):
        """Probability that one UAV is weaker (on average) than a BS at
        horizontal distance x."""
        return self.survival("l", self.exclusion("E_gl", x)) + self.survival("n", self.exclusion("E_gn", x))

    def bracket_uav(self, zeta: str, y):
        """Probability that one UAV is weaker than a zeta-UAV at distance y."""
        return self.survival(zeta, y) + self.survival(_OTHER[zeta], self._cross(zeta, y))

    @property
    def e_u(self) -> float:
        """Largest horizontal BS distance at which a BS can still win."""
        if self.n_u == 0:
            return math.inf
        return float(max(self.exclusion("E_ul", self.w_p), self.exclusion("E_un", self.w_p)))

    def _bs_breakpoints(self):
        pts = []
        for zeta in "ln":
            for w in (self.h_u, self.w_m, self.w_p):
                pts.append(float(self.exclusion(f"E_u{zeta}", w)))
        return pts

    def _uav_breakpoints(self, zeta: str):
        p = self.p
        ez, eo = p.eta(zeta), p.eta(_OTHER[zeta])
        pts = [self.w_m]
        # E_u(y) leaves zero, and the cross exclusion reaches h_u and w_p.
        pts.append((self.h_g**2 * (p.p_u / p.p_g) ** (2.0 / p.eta_g)) ** (p.eta_g / (2.0 * ez)))
        pts += [self.h_u ** (eo / ez), self.w_p ** (eo / ez)]
        return pts

    # -- association ---------------------------------------------------------

    def _assoc_uav_integrand(self, zeta: str, y):
        y = np.asarray(y, dtype=float)
        e = self.exclusion(f"E_u{zeta}", y)
        base = self.n_u * self.fw_kappa(zeta, y) * np.exp(-np.pi * self.lam_g * e**2)
        if self.n_u > 1:
            base = base * self.bracket_uav(zeta, y) ** (self.n_u - 1)
        return base

    def assoc_uav(self, zeta: str) -> float:
        key = ("assoc_uav", zeta)
        if key not in self._memo:
            if self.n_u == 0:
                self._memo[key] = 0.0
            else:
                self._memo[key] = integrate(lambda y: self._assoc_uav_integrand(zeta, y),
                                            self.h_u, self.w_p, OUTER_SPEC,
                                            breakpoints=self._uav_breakpoints(zeta))
        return self._memo[key]

    def _nearest_bs_density(self, x):
        return 2.0 * np.pi * self.lam_g * x * np.exp(-np.pi * self.lam_g * x**2)

    def _assoc_bs_integrand(self, x):
        x = np.asarray(x, dtype=float)
        return self._nearest_bs_density(x) * self.bracket_bs(x) ** self.n_u

    def assoc_bs(self) -> float:
        if "assoc_bs" not in self._memo:
            if self.n_u == 0:
                self._memo["assoc_bs"] = 1.0
            else:
                self._memo["assoc_bs"] = integrate(self._assoc_bs_integrand, 0.0, self.e_u, OUTER_SPEC,
                                                   breakpoints=self._bs_breakpoints())
        return self._memo["assoc_bs"]

    def association(self) -> AssociationProbs:
        return AssociationProbs(self.assoc_uav("l"), self.assoc_uav("n"), self.assoc_bs())

    def serving_pdf_bs(self, x):
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0) or np.any(x_arr > self.e_u):
            raise DomainError("serving BS distance outside [0, E_u]")
        out = self._assoc_bs_integrand(x_arr) / self.assoc_bs()
        return _scalar_if(out, x)

    def serving_pdf_uav(self, zeta: str, y):
        y_arr = np.asarray(y, dtype=float)
        if np.any(y_arr < self.h_u) or np.any(y_arr > self.w_p):
            raise DomainError("serving UAV distance outside [h_u, w_p]")
        a = self.assoc_uav(zeta)
        if a <= 0:
            raise DomainError(f"no UAV of class {zeta!r} can serve the UE")
        out = self._assoc_uav_integrand(zeta, y_arr) / a
        return _scalar_if(out, y)

    # -- Laplace transforms of the access interference -------------------------

    def laplace_bs(self, s, x_lower):
        """Laplace transform of the interference from BSs farther than
        ``x_lower`` (horizontal)."""
        p = self.p
        if p.eta_g <= 2:
            raise DomainError("closed form needs eta_g > 2")
        s = np.asarray(s, dtype=float)
        xx = np.asarray(x_lower, dtype=float) ** 2 + self.h_g**2
        a = s * p.p_g
        xd = xx ** (p.eta_g / 2.0)
        z = a / (a + xd)
        pref = a * xx / ((p.eta_g - 2.0) * (xd + a))
        f21 = gauss_2f1_11c_array(2.0 - 2.0 / p.eta_g, np.broadcast_to(z, np.broadcast(z, pref).shape))
        out = np.exp(-2.0 * np.pi * self.lam_g * pref * f21)
        return _scalar_if(out, s, x_lower)

    def uav_deficit(self, s, lower_l, lower_n):
        """``bracket - E[exp(-s I)] * ...``: the part of the single-UAV
        survival mass removed by the Laplace factor.

        ``s`` has shape ``(..., n)`` and the lower limits shape ``(n,)``.
        """
        p = self.p
        s = np.asarray(s, dtype=float)
        total = 0.0
        for zeta, lower in (("l", lower_l), ("n", lower_n)):
            lo = np.clip(np.atleast_1d(np.asarray(lower, dtype=float)), self.h_u, self.w_p)
            m, eta = p.m(zeta), p.eta(zeta)

            def g(v, zeta=zeta, m=m, eta=eta):
                arg = s[..., None] * (p.p_u / m) * v ** (-eta)
                return h_bound(m, arg) * self.fw_kappa(zeta, v)

            total = total + _integrate_from(g, lo, self.w_p, INNER_SPEC)
        return total

    def laplace_uav(self, s, lower_l, lower_n, exponent: float):
        """Laplace transform of the interference of ``exponent`` UAVs that are
        each conditioned to lie beyond ``lower_l`` (LOS) / ``lower_n`` (NLOS)."""
        if exponent < 0:
            raise DomainError("exponent must be non-negative")
        lower_l = np.atleast_1d(np.asarray(lower_l, dtype=float))
        lower_n = np.atleast_1d(np.asarray(lower_n, dtype=float))
        s_arr = np.asarray(s, dtype=float)
        if exponent == 0 or np.all(s_arr == 0):
            out = np.ones(np.broadcast(s_arr, lower_l).shape)
            return _scalar_if(out, s) if out.size == 1 else out
        denom = self.survival("l", lower_l) + self.survival("n", lower_n)
        if np.any(denom <= 0):
            raise DomainError("no UAV can lie beyond the given lower limits")
        s_b = np.broadcast_to(s_arr, np.broadcast(s_arr, lower_l).shape)
        ratio = 1.0 - self.uav_deficit(s_b, lower_l, lower_n) / denom
        out = np.clip(ratio, 0.0, 1.0) ** exponent
        if np.ndim(s) == 0 and out.size == 1:
            return float(out.ravel()[0])
        return out

    def _uav_power(self, num, bracket, n_bracket: int, exponent: float):
        """``(num/bracket)^exponent * bracket^n_bracket`` without 0/0."""
        num = np.clip(num, 0.0, None)
        if exponent == n_bracket:
            return num**exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(bracket > 0, num / np.where(bracket > 0, bracket, 1.0), 0.0)
        return np.clip(ratio, 0.0, 1.0) ** exponent * bracket**n_bracket

    # -- access coverage -------------------------------------------------------

    def _cov_bs_integrand(self, x, exponent: float):
        p = self.p
        x = np.asarray(x, dtype=float)
        s1 = p.tau_a * (x**2 + self.h_g**2) ** (p.eta_g / 2.0) / p.p_g
        lg = self.laplace_bs(s1, x)
        dens = self._nearest_bs_density(x)
        if self.n_u == 0:
            return lg * dens
        ll, ln = self.exclusion("E_gl", x), self.exclusion("E_gn", x)
        br = self.bracket_bs(x)
        num = br - self.uav_deficit(s1, ll, ln)
        return lg * self._uav_power(num, br, self.n_u, exponent) * dens

    def cond_cov_bs(self, exponent: float | None = None) -> float:
        """Coverage given BS association with ``exponent`` interfering UAVs
        (default: all ``N_u``)."""
        exponent = float(self.n_u) if exponent is None else float(exponent)
        key = ("cov_bs", exponent)
        if key not in self._memo:
            f = lambda x: self._cov_bs_integrand(x, exponent)  # noqa: E731
            if self.n_u == 0:
                scale = 1.0 / math.sqrt(np.pi * self.lam_g)
                val = _integrate_tail(lambda v: f(v.ravel()).reshape(v.shape), [0.0], [scale], OUTER_SPEC)[0]
            else:
                val = integrate(f, 0.0, self.e_u, OUTER_SPEC, breakpoints=self._bs_breakpoints())
            self._memo[key] = val / self.assoc_bs()
        return self._memo[key]

    def _cov_uav_integrand(self, zeta: str, y, exponent: float):
        p = self.p
        y = np.asarray(y, dtype=float)
        m, eta = p.m(zeta), p.eta(zeta)
        s2 = m * p.tau_a * y**eta / p.p_u
        e_bs = self.exclusion(f"E_u{zeta}", y)
        cross = self._cross(zeta, y)
        weight = self.n_u * self.fw_kappa(zeta, y) * np.exp(-np.pi * self.lam_g * e_bs**2)
        n_br = self.n_u - 1
        br = self.bracket_uav(zeta, y) if n_br > 0 else np.ones_like(y)
        pts = derivative_stencil(s2)  # (9, n)
        vals = self.laplace_bs(pts, e_bs[None, :])
        if n_br > 0:
            num = br[None, :] - self.uav_deficit(pts, y, cross)
            vals = vals * self._uav_power(num, br[None, :], n_br, exponent)
        series = np.zeros_like(y)
        for k in range(m):
            # Gaps that move the series term by < 1e-10 are irrelevant here.
            tol = 1e-10 * math.factorial(k) / np.maximum(s2, 1e-300) ** k
            dk, _ = derivatives_from_stencil(vals, s2, k, abs_tol=tol)
            series = series + (-s2) ** k / math.factorial(k) * dk
        return weight * series

    def cond_cov_uav_access(self, zeta: str, exponent: float | None = None) -> float:
        """Access-SIR coverage given association with a zeta-UAV, with
        ``exponent`` interfering UAVs (default ``N_u - 1``)."""
        exponent = float(self.n_u - 1) if exponent is None else float(exponent)
        key = ("cov_uav", zeta, exponent)
        if key not in self._memo:
            a = self.assoc_uav(zeta)
            if a <= 0:
                self._memo[key] = math.nan
            else:
                val = integrate(lambda y: self._cov_uav_integrand(zeta, y, exponent), self.h_u, self.w_p,
                                OUTER_SPEC, breakpoints=self._uav_breakpoints(zeta))
                self._memo[key] = min(max(val / a, 0.0), 1.0)
        return self._memo[key]

    # -- backhaul --------------------------------------------------------------

    def kappa_b(self, xi: str, r):
        k = los_prob_backhaul(r, self.dh, self.p.backhaul_los)
        return k if xi == "l" else 1.0 - k

    def big_lambda(self, xi: str, x):
        """Mean number of class-xi backhaul BSs within horizontal distance x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        flat = x.ravel()
        integral = integrate(lambda t: self.kappa_b("l", flat[:, None] * t[None, :]) * t[None, :],
                             0.0, 1.0, INNER_SPEC)
        lam_l = 2.0 * np.pi * self.lam_b * flat**2 * integral
        out = lam_l if xi == "l" else np.pi * self.lam_b * flat**2 - lam_l
        return np.maximum(out, 0.0).reshape(x.shape)

    def exclusion_b(self, xi: str, x):
        """Horizontal distance inside which no class-(other) backhaul BS can
        have a smaller path loss than a class-xi BS at x."""
        p = self.p
        xo = _OTHER[xi]
        x = np.asarray(x, dtype=float)
        rad = (p.c(xo) / p.c(xi)) ** (2.0 / p.eta(xo)) * (x**2 + self.dh**2) ** (p.eta(xi) / p.eta(xo)) - self.dh**2
        return np.sqrt(np.maximum(rad, 0.0))

    def _backhaul_weight(self, xi: str, x):
        """``f_sbxi(x) * exp(-Lambda_other(E_bxi(x)))``."""
        x = np.asarray(x, dtype=float)
        f_s = 2.0 * np.pi * self.lam_b * x * self.kappa_b(xi, x) * np.exp(-self.big_lambda(xi, x))
        return f_s * np.exp(-self.big_lambda(_OTHER[xi], self.exclusion_b(xi, x)))

    @property
    def _backhaul_scale(self) -> float:
        return 1.0 / math.sqrt(np.pi * self.lam_b)

    def backhaul_assoc(self, xi: str) -> float:
        key = ("assoc_b", xi)
        if key not in self._memo:
            if self.lam_b <= 0:
                raise DomainError("no backhaul-enabled BSs (delta_b = 0)")
            f = lambda v: self._backhaul_weight(xi, v.ravel()).reshape(v.shape)  # noqa: E731
            self._memo[key] = float(_integrate_tail(f, [0.0], [self._backhaul_scale], MASS_SPEC)[0])
        return self._memo[key]

    def backhaul_serving_pdf(self, xi: str, x):
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0):
            raise DomainError("distance must be non-negative")
        a = self.backhaul_assoc(xi)
        if a <= 0:
            raise DomainError(f"no backhaul link of class {xi!r} can serve a UAV")
        out = self._backhaul_weight(xi, x_arr) / a
        return _scalar_if(out, x)

    def _backhaul_integrand(self, xi: str, x, tau_b: float, g0: float):
        """Integrand over x of the binomial sum, vector over q = 1..m_xi."""
        p = self.p
        xo = _OTHER[xi]
        m, mo = p.m(xi), p.m(xo)
        eta, eta_o = p.eta(xi), p.eta(xo)
        c, c_o = p.c(xi), p.c(xo)
        gamma = m * math.factorial(m) ** (-1.0 / m)
        pmf = interferer_gain_pmf(p.antenna_g, p.antenna_u)
        gbar = np.asarray(pmf.gains) / g0
        pk = np.asarray(pmf.probs)
        q = np.arange(1, m + 1, dtype=float)
        x_all = np.asarray(x, dtype=float)
        weight = self._backhaul_weight(xi, x_all)
        out = np.zeros_like(x_all)
        # Nodes whose weight underflows contribute nothing; skipping them
        # spares the inner quadratures from hopeless far-tail geometry.
        live = weight > 1e-280
        if not np.any(live):
            return out
        x = x_all[live]
        d_eta = (x**2 + self.dh**2) ** (eta / 2.0)  # (n,)
        # (q, k, n) coefficients of the interferer path gains.
        base = q[:, None, None] * gamma * gbar[None, :, None] * tau_b * d_eta[None, None, :]
        coef_q = base / m
        coef_v = base * c_o / (mo * c)
        scales = np.maximum(x, self.dh) + 1.0

        def q_int(t):
            path = (t**2 + self.dh**2) ** (-eta / 2.0)  # (n, nt)
            h = h_bound(m, coef_q[..., None] * path[None, None])  # (q, k, n, nt)
            return np.einsum("k,qknt->qnt", pk, h) * self.kappa_b(xi, t) * t

        def v_int(t):
            path = (t**2 + self.dh**2) ** (-eta_o / 2.0)
            h = h_bound(mo, coef_v[..., None] * path[None, None])
            return np.einsum("k,qknt->qnt", pk, h) * self.kappa_b(xo, t) * t

        two_pi_lam = 2.0 * np.pi * self.lam_b
        big_q = two_pi_lam * _integrate_tail(q_int, x, scales, INNER_SPEC)
        big_v = two_pi_lam * _integrate_tail(v_int, self.exclusion_b(xi, x), scales, INNER_SPEC)
        noise = q[:, None] * gamma * d_eta[None, :] * tau_b * p.noise / (p.p_b * c * g0)
        signs = np.array([(-1) ** (j + 1) * math.comb(m, j) for j in range(1, m + 1)], dtype=float)
        terms = np.exp(-noise - big_q - big_v)
        out[live] = np.einsum("q,qn->n", signs, terms) * weight[live]
        return out

    def backhaul_cond_success(self, xi: str, tau_b: float, g0: float) -> float:
        """Probability of backhaul SINR >= tau_b given a class-xi serving BS
        and desired-link gain ``g0``."""
        if not (tau_b > 0 and g0 > 0):
            raise DomainError("tau_b and g0 must be positive")
        key = ("s_cond", xi, float(tau_b), float(g0))
        if key not in self._memo:
            a = self.backhaul_assoc(xi)
            if a <= 0:
                self._memo[key] = math.nan
            else:
                f = lambda v: self._backhaul_integrand(xi, v.ravel(), tau_b, g0).reshape(v.shape)  # noqa: E731
                val = float(_integrate_tail(f, [0.0], [self._backhaul_scale], OUTER_SPEC)[0])
                self._memo[key] = min(max(val / a, 0.0), 1.0)
        return self._memo[key]

    def _aligned_success(self, tau_b: float, g0: float) -> float:
        total = 0.0
        for xi in "ln":
            a = self.backhaul_assoc(xi)
            if a > 1e-14:
                total += a * self.backhaul_cond_success(xi, tau_b, g0)
        return total

    def backhaul_prob(self, tau_b: float | None = None, with_misalignment: bool = True) -> float:
        """Backhaul probability; ``tau_b`` defaults to the scenario threshold."""
        p = self.p
        tau_b = p.tau_b if tau_b is None else float(tau_b)
        key = ("s", tau_b, with_misalignment)
        if key not in self._memo:
            g_aligned = p.antenna_g.g_max * p.antenna_u.g_max
            if not with_misalignment or (p.sigma_g == 0 and p.sigma_u == 0):
                val = self._aligned_success(tau_b, g_aligned)
            else:
                pmf = desired_gain_pmf(p.antenna_g, p.antenna_u, p.sigma_g, p.sigma_u)
                val = sum(pk * self._aligned_success(tau_b, gk) for gk, pk in pmf.atoms if pk > 0)
            self._memo[key] = min(max(val, 0.0), 1.0)
        return self._memo[key]

    # -- overall ---------------------------------------------------------------

    def _note(self, msg: str) -> None:
        if msg not in self.warnings:
            self.warnings.append(msg)

    def aware_transmission(self) -> AwareTransmissionProbs:
        a = self.association()
        s = self.backhaul_prob() if self.n_u > 0 else 1.0
        return AwareTransmissionProbs(a.a_ul * s, a.a_un * s, a.a_g, (a.a_ul + a.a_un) * (1.0 - s))

    def cond_cov_uav(self, zeta: str, scheme: str) -> float:
        if scheme == "unaware":
            return self.backhaul_prob() * self.cond_cov_uav_access(zeta)
        if scheme == "aware":
            return self.cond_cov_uav_access(zeta, self._aware_uav_exponent())
        raise DomainError(f"analytic model has no scheme {scheme!r}")

    def _aware_uav_exponent(self) -> float:
        e = self.n_u * self.backhaul_prob() - 1.0
        if e < 0:
            self._note(f"aware UAV-interference exponent N_u*S-1 = {e:.4g} clamped to 0")
            return 0.0
        return e

    def cond_cov_g(self, scheme: str) -> float:
        if scheme == "unaware":
            return self.cond_cov_bs()
        if scheme == "aware":
            return self.cond_cov_bs(self.n_u * self.backhaul_prob() if self.n_u else 0.0)
        raise DomainError(f"analytic model has no scheme {scheme!r}")

    def overall(self, scheme: str) -> CoverageResult:
        if scheme not in ("unaware", "aware"):
            raise DomainError(f"analytic model has no scheme {scheme!r}")
        a = self.association()
        if self.n_u == 0:
            s = self.backhaul_prob() if self.lam_b > 0 else math.nan
            pg = self.cond_cov_g(scheme)
            return CoverageResult(scheme, pg, pg, math.nan, math.nan, 1.0, 0.0, 0.0, 0.0, s,
                                  tuple(self.warnings))
        s = self.backhaul_prob()
        pg = self.cond_cov_g(scheme)
        pu = {z: self.cond_cov_uav(z, scheme) for z in "ln"}
        if scheme == "unaware":
            w = {"l": a.a_ul, "n": a.a_un}
            a_f = 0.0
            a_g = a.a_g
        else:
            t = self.aware_transmission()
            w = {"l": t.at_ul, "n": t.at_un}
            a_f = t.at_f
            a_g = t.at_g
        total = a_g * pg + sum(w[z] * pu[z] for z in "ln" if w[z] > 0)
        return CoverageResult(scheme, total, pg, pu["l"], pu["n"], a_g, w["l"], w["n"], a_f, s,
                              tuple(self.warnings))


@lru_cache(maxsize=32)
def get_model(p: NetworkParams, use_cache: bool = True) -> AnalyticModel:
    """Shared model per parameter point."""
    return AnalyticModel(p, use_cache)


# -- functional interface ------------------------------------------------------

def assoc_prob_uav(zeta: str, p: NetworkParams, use_cache: bool = True) -> float:
    return get_model(p, use_cache).assoc_uav(zeta)


def assoc_prob_bs(p: NetworkParams, use_cache: bool = True) -> float:
    return get_model(p, use_cache).assoc_bs()


def association_probs(p: NetworkParams, use_cache: bool = True) -> AssociationProbs:
    return get_model(p, use_cache).association()


def serving_pdf_bs(x, p: NetworkParams):
    return get_model(p).serving_pdf_bs(x)


def serving_pdf_uav(zeta: str, y, p: NetworkParams):
    return get_model(p).serving_pdf_uav(zeta, y)


def laplace_bs_interference(s, x_lower, p: NetworkParams):
    if np.any(np.asarray(s) < 0) or np.any(np.asarray(x_lower) < 0):
        raise DomainError("s and x_lower must be non-negative")
    return get_model(p).laplace_bs(s, x_lower)


def laplace_uav_interference(s, lower_l, lower_n, exponent: float, p: NetworkParams):
    return get_model(p).laplace_uav(s, lower_l, lower_n, exponent)


def backhaul_assoc_prob(xi: str, p: NetworkParams) -> float:
    return get_model(p).backhaul_assoc(xi)


def backhaul_serving_pdf(xi: str, x, p: NetworkParams):
    return get_model(p).backhaul_serving_pdf(xi, x)


def backhaul_cond_success(xi: str, tau_b: float, g0: float, p: NetworkParams) -> float:
    return get_model(p).backhaul_cond_success(xi, tau_b, g0)


def backhaul_prob(tau_b: float, p: NetworkParams, with_misalignment: bool = True) -> float:
    return get_model(p).backhaul_prob(tau_b, with_misalignment)


def cond_cov_bs_unaware(p: NetworkParams, use_cache: bool = True) -> float:
    return get_model(p, use_cache).cond_cov_g("unaware")


def cond_cov_bs_aware(p: NetworkParams, use_cache: bool = True) -> float:
    return get_model(p, use_cache).cond_cov_g("aware")


def cond_cov_uav_unaware(zeta: str, p: NetworkParams, use_cache: bool = True) -> float:
    return get_model(p, use_cache).cond_cov_uav(zeta, "unaware")


def cond_cov_uav_aware(zeta: str, p: NetworkParams, use_cache: bool = True) -> float:
    return get_model(p, use_cache).cond_cov_uav(zeta, "aware")


def aware_transmission_probs(p: NetworkParams, use_cache: bool = True) -> AwareTransmissionProbs:
    return get_model(p, use_cache).aware_transmission()


def overall_cov_unaware(p: NetworkParams, use_cache: bool = True) -> CoverageResult:
    return get_model(p, use_cache).overall("unaware")


def overall_cov_aware(p: NetworkParams, use_cache: bool = True) -> CoverageResult:
    return get_model(p, use_cache).overall("aware")
