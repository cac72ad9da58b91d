"""Numerical kernels: adaptive quadrature, 2F1(1,1;c;z), finite-difference
derivatives and the gamma-CDF bound helper.

Integrands are evaluated in batches: ``f`` receives a 1-D array of abscissae
and must return an array whose last axis matches it (extra leading axes give a
vector-valued integral).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, NonConvergence

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    max_subdivisions: int = 2000

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SPEC = QuadratureSpec()

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[[13, 11, 9]] = _WG[:3]
_GW[7] = _WG[3]
_EPS = np.finfo(float).eps


def _gk15(f: Integrand, a: np.ndarray, b: np.ndarray):
    """Apply the G7/K15 pair on every interval [a_i, b_i] in one call to f."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x), dtype=float)
    lead = fx.shape[:-1]
    fx = fx.reshape(lead + (a.size, 15))
    kron = (fx @ _KW) * half
    gauss = (fx @ _GW) * half
    mean = kron / (2.0 * half) if np.all(half > 0) else kron
    resasc = (np.abs(fx - mean[..., None]) @ _KW) * np.abs(half)
    resabs = (np.abs(fx) @ _KW) * np.abs(half)
    err = np.abs(kron - gauss)
    # QUADPACK's scaling of the raw Kronrod-Gauss difference.
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5), err)
    floor = 50.0 * _EPS * resabs
    err = np.maximum(scaled, floor)
    if lead:
        kron = np.moveaxis(kron, -1, 0)
        err = err.reshape(-1, a.size).max(axis=0)
    if not np.all(np.isfinite(kron)):
        raise NonConvergence("integrand is not finite on the integration range")
    return kron, err


def integrate(f: Integrand, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC,
              breakpoints=None):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    Parameters
    ----------
    f : callable
        Vectorized integrand.
    a, b : float
        Finite limits with ``a <= b``.
    spec : QuadratureSpec
        Error target ``max(abs_tol, rel_tol*|I|)`` and the interval budget.
    breakpoints : sequence of float, optional
        Interior points where ``f`` is known to be non-smooth.

    Returns
    -------
    float or ndarray
        The integral (an array for vector-valued integrands).

    Raises
    ------
    NonConvergence
        If the error target is not met within ``spec.max_subdivisions``
        intervals.
    """
    a = float(a)
    b = float(b)
    if not a <= b:
        raise DomainError(f"integration limits out of order: a={a} > b={b}")
    if a == b:
        probe = np.asarray(f(np.array([a])), dtype=float)
        return 0.0 if probe.ndim == 1 else np.zeros(probe.shape[:-1])
    edges = [a]
    if breakpoints is not None:
        edges += sorted(float(p) for p in breakpoints if a < p < b)
    edges.append(b)
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    vals, errs = _gk15(f, lo, hi)
    while True:
        total = vals.sum(axis=0)
        total_err = errs.sum()
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(total))))
        if total_err <= tol:
            break
        if lo.size >= spec.max_subdivisions:
            raise NonConvergence(
                f"quadrature on [{a}, {b}] missed tolerance {tol:.3g} "
                f"(error {total_err:.3g}) after {lo.size} intervals",
                estimate=float(np.max(np.abs(total))), error=float(total_err))
        # Bisect the worst intervals until the remainder would meet the target.
        order = np.argsort(errs)[::-1]
        excess = total_err - 0.5 * tol
        cum = np.cumsum(errs[order])
        n_split = int(np.searchsorted(cum, excess)) + 1
        n_split = max(1, min(n_split, order.size, spec.max_subdivisions - lo.size))
        pick = order[:n_split]
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        if np.any(new_hi - new_lo <= 4 * _EPS * np.maximum(np.abs(new_lo), 1.0)):
            raise NonConvergence(
                f"quadrature on [{a}, {b}] hit the resolution limit before tolerance {tol:.3g}",
                estimate=float(np.max(np.abs(total))), error=float(total_err))
        nv, ne = _gk15(f, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
    return float(total) if np.ndim(total) == 0 else total


def integrate_semi_infinite(f: Integrand, a: float, spec: QuadratureSpec = DEFAULT_SPEC,
                            scale: float = 1.0):
    """Integrate ``f`` over ``[a, inf)`` via ``x = a + scale*t/(1-t)``.

    ``scale`` places the bulk of the mass near ``t = 1/2``; choose it close to
    the integrand's characteristic length.
    """
    if not scale > 0:
        raise DomainError("scale must be positive")

    def g(t):
        one_minus = 1.0 - t
        x = a + scale * t / one_minus
        with np.errstate(over="ignore", under="ignore"):
            return np.asarray(f(x), dtype=float) * (scale / one_minus**2)

    return integrate(g, 0.0, 1.0, spec)


_HYP_SPEC = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-12, max_subdivisions=4000)


@lru_cache(maxsize=4096)
def gauss_2f1_11c(c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(1, 1; c; z) for c > 1, z < 1.

    Power series for ``z <= 0.9``; otherwise the Euler integral
    ``(c-1) * int_0^1 (1-t)^(c-2) / (1-z t) dt``, evaluated after the change
    of variable ``u = (1-t)^(c-1)`` which removes the endpoint singularity.
    Small negative ``z`` (met by finite-difference stencils around s = 0)
    uses the series as well.
    """
    c = float(c)
    z = float(z)
    if c <= 1.0:
        raise DomainError(f"2F1(1,1;c;z) requires c > 1, got c={c}")
    if z >= 1.0:
        raise DomainError(f"2F1(1,1;c;z) requires z < 1, got z={z}")
    if z <= -1.0:
        raise DomainError(f"2F1(1,1;c;z) implemented for |z| < 1, got z={z}")
    if z <= 0.9:
        return _hyp_series(c, z)
    return _hyp_euler(c, z)


def gauss_2f1_11c_array(c: float, z) -> np.ndarray:
    """Vectorized ``gauss_2f1_11c`` over ``z`` (same method split).

    The Euler-integral branch integrates all large-``z`` entries in one
    vector-valued quadrature, so the result is a smooth function of ``z``.
    """
    c = float(c)
    z = np.asarray(z, dtype=float)
    if c <= 1.0:
        raise DomainError(f"2F1(1,1;c;z) requires c > 1, got c={c}")
    if np.any(z >= 1.0) or np.any(z <= -1.0):
        raise DomainError("2F1(1,1;c;z) implemented for -1 < z < 1")
    out = np.empty_like(z)
    small = z <= 0.9
    if np.any(small):
        zs = z[small]
        total = np.ones_like(zs)
        term = np.ones_like(zs)
        n = 0
        while True:
            term = term * ((n + 1.0) * zs / (c + n))
            total = total + term
            n += 1
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or n > 100000:
                break
        out[small] = total
    if np.any(~small):
        zl = z[~small]
        p = 1.0 / (c - 1.0)
        out[~small] = integrate(lambda u: 1.0 / (1.0 - zl[:, None] * (1.0 - u**p)), 0.0, 1.0, _HYP_SPEC)
    return out


def _hyp_series(c: float, z: float) -> float:
    total = 1.0
    term = 1.0
    n = 0
    while True:
        term *= (n + 1.0) * z / (c + n)
        total += term
        n += 1
        if abs(term) <= 1e-17 * abs(total) or n > 100000:
            return total


def _hyp_euler(c: float, z: float) -> float:
    p = 1.0 / (c - 1.0)

    def integrand(u):
        return 1.0 / (1.0 - z * (1.0 - u**p))

    return integrate(integrand, 0.0, 1.0, _HYP_SPEC)


# Stencil offsets in units of the finest step (h0 = 2.5e-3); the three
# Richardson levels use steps of 4, 2 and 1 units.
_UNIT = 2.5e-3
STENCIL_OFFSETS = np.array([-8, -4, -2, -1, 0, 1, 2, 4, 8])
_LEVEL_UNITS = (4, 2, 1)


def derivative_stencil(s):
    """Abscissae at which ``derivatives_from_stencil`` needs the function.

    Returns an array of shape ``(9,) + shape(s)``; row ``i`` is
    ``s + STENCIL_OFFSETS[i] * max(|s|, 1) * 2.5e-3``.
    """
    s = np.asarray(s, dtype=float)
    scale = np.maximum(np.abs(s), 1.0)
    off = STENCIL_OFFSETS.reshape((-1,) + (1,) * s.ndim)
    return s + off * (scale * _UNIT)


def derivatives_from_stencil(values, s, k: int, abs_tol=0.0):
    """k-th derivative from function values on ``derivative_stencil(s)``.

    Second-order central differences at three step sizes combined by two
    Richardson levels. Returns ``(derivative, error)`` where the error is the
    gap between the last two levels.

    ``abs_tol`` (scalar or per-point) exempts derivatives whose gap is too
    small to matter to the caller.

    Raises
    ------
    NonConvergence
        If the two levels differ by more than 1e-4 relative anywhere and the
        gap is above both the round-off floor and ``abs_tol``.
    """
    if k < 0 or k > 4 or int(k) != k:
        raise DomainError(f"derivative order must be an integer in [0, 4], got {k}")
    values = np.asarray(values, dtype=float)
    s = np.asarray(s, dtype=float)
    pos = {int(o): i for i, o in enumerate(STENCIL_OFFSETS)}
    centre = values[pos[0]]
    if k == 0:
        return centre, np.zeros_like(centre)
    scale = np.maximum(np.abs(s), 1.0)

    def fv(units):
        return values[pos[units]]

    est = [_central(fv, k, u) / (scale * u * _UNIT) ** k for u in _LEVEL_UNITS]
    r1 = [(4.0 * est[i + 1] - est[i]) / 3.0 for i in range(2)]
    r2 = (16.0 * r1[1] - r1[0]) / 15.0
    err = np.abs(r2 - r1[1])
    ref = np.maximum(np.abs(r2), np.abs(r1[1]))
    # Absolute floor: round-off in f at the level of its magnitude.
    noise = 1e3 * _EPS * np.maximum(np.abs(values).max(axis=0), 1e-300) / (scale * _UNIT) ** k
    bad = (err > 1e-4 * ref) & (err > noise) & (err > abs_tol)
    if np.any(bad):
        i = np.flatnonzero(np.ravel(bad))[0]
        raise NonConvergence(
            f"Richardson levels disagree for order-{k} derivative at "
            f"s={np.ravel(s * np.ones_like(r2))[i]}: {np.ravel(r1[1])[i]} vs {np.ravel(r2)[i]}",
            estimate=float(np.ravel(r2)[i]), error=float(np.ravel(err)[i]))
    return r2, err


def nth_derivative(f: Callable, s, k: int, full_output: bool = False, vectorized: bool = False):
    """k-th derivative of a smooth function at ``s`` (k <= 4).

    Second-order central differences with step ``h = max(|s|, 1) * h0`` for
    ``h0`` in (1e-2, 5e-3, 2.5e-3), combined by two levels of Richardson
    extrapolation. ``f`` must be defined on ``[s - 0.02 max(|s|,1), s + 0.02 max(|s|,1)]``.

    With ``vectorized=True``, ``f`` is called once with the whole stencil
    (see ``derivative_stencil``) and ``s`` may be an array. Otherwise ``f`` is
    a scalar function called once per stencil point.

    Returns the derivative, or ``(value, error)`` when ``full_output`` is set.

    Raises
    ------
    NonConvergence
        If the last two extrapolation levels differ by more than 1e-4
        relative.
    """
    if k < 0 or k > 4 or int(k) != k:
        raise DomainError(f"derivative order must be an integer in [0, 4], got {k}")
    if k == 0 and not vectorized:
        v = float(f(s))
        return (v, 0.0) if full_output else v
    pts = derivative_stencil(s)
    if vectorized:
        values = np.asarray(f(pts), dtype=float)
    else:
        values = np.array([float(f(x)) for x in pts])
    d, err = derivatives_from_stencil(values, s, k)
    if np.ndim(d) == 0:
        d, err = float(d), float(err)
    return (d, err) if full_output else d


def _central(f: Callable[[int], float], k: int, u: int):
    if k == 1:
        return (f(u) - f(-u)) / 2.0
    if k == 2:
        return f(u) - 2.0 * f(0) + f(-u)
    if k == 3:
        return (f(2 * u) - 2.0 * f(u) + 2.0 * f(-u) - f(-2 * u)) / 2.0
    return f(2 * u) - 4.0 * f(u) + 6.0 * f(0) - 4.0 * f(-u) + f(-2 * u)


def h_bound(m: int, x):
    """``H(m, x) = 1 - (1 + x)^-m``, vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    # -expm1(-m*log1p(x)) keeps precision for tiny x.
    out = -np.expm1(-m * np.log1p(x))
    return float(out) if out.ndim == 0 else out
