"""Monte-Carlo reference simulator.

Each trial drops a full network (BS PPP on the simulation disk, UAV BPP),
draws every link's LOS class, fading and beam gain, resolves backhaul
and then evaluates the UE under the three schemes on that same
realization:

``unaware``
    UAVs transmit regardless of backhaul; a UAV-served UE is covered only if
    both its access SIR and its UAV's backhaul SINR clear their thresholds.
``aware``
    UAVs with failed backhaul stay silent; a UE associated with such a UAV
    is in service failure.
``instantaneous``
    As ``aware``, but a UE whose UAV failed re-associates to its best BS.

Trial ``i`` of a run with seed ``seed`` uses the stream
``SeedSequence([seed, i])``, so results do not depend on how trials are split
across workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .channel import desired_gain_pmf, interferer_gain_pmf, los_prob_access, los_prob_backhaul
from .errors import NoBackhaulBS
from .geometry import sample_bs_ppp, sample_uav_bpp
from .params import NetworkParams
from .stats import mean_interval, wilson_interval

SCHEMES = ("unaware", "aware", "instantaneous")
ASSOCIATIONS = ("bs", "uav_los", "uav_nlos")


@dataclass
class NetworkRealization:
    bs_positions: np.ndarray        # (n_bs, 3)
    bs_backhaul_flag: np.ndarray    # (n_bs,)
    uav_positions: np.ndarray       # (n_u, 3)
    ue: np.ndarray                  # (3,)
    uav_ue_los: np.ndarray          # (n_u,) bool
    bs_ue_fading: np.ndarray        # (n_bs,)
    uav_ue_fading: np.ndarray       # (n_u,)
    backhaul_dist: np.ndarray       # (n_u, n_b) horizontal, backhaul-enabled BSs only
    backhaul_los: np.ndarray        # (n_u, n_b) bool
    backhaul_fading: np.ndarray     # (n_u, n_b)
    backhaul_gain: np.ndarray       # (n_u, n_b) interferer beam gains
    desired_gain: np.ndarray        # (n_u,) serving-link beam gains


@dataclass
class BackhaulResult:
    serving_bs: np.ndarray   # (n_u,) index into the backhaul-enabled BSs
    serving_los: np.ndarray  # (n_u,) bool
    serving_dist: np.ndarray  # (n_u,) horizontal distance
    sinr: np.ndarray         # (n_u,)
    success: np.ndarray      # (n_u,) bool


@dataclass(frozen=True)
class TrialOutcome:
    association: str
    backhaul_ok: bool | None
    covered: bool
    service_failure: bool
    scheme: str

    def __post_init__(self) -> None:
        if self.service_failure and (self.scheme != "aware" or self.association == "bs" or self.covered):
            raise ValueError("service failure only for UAV-associated, uncovered aware-scheme trials")


@dataclass
class CoverageEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    n_trials: int
    breakdown: dict[str, int] = field(default_factory=dict)
    rates: dict[str, float] = field(default_factory=dict)


@dataclass
class MeanEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    n: int


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _gamma_unit(rng: np.random.Generator, m: np.ndarray) -> np.ndarray:
    return rng.standard_gamma(m) / m


@lru_cache(maxsize=64)
def _gain_pmfs(p: NetworkParams):
    return (interferer_gain_pmf(p.antenna_g, p.antenna_u),
            desired_gain_pmf(p.antenna_g, p.antenna_u, p.sigma_g, p.sigma_u))


@dataclass
class AccessDrop:
    """Everything about a trial except the UAV backhaul links.

    Each UAV's backhaul links are drawn from their own stream seeded by
    ``backhaul_seeds[j]``, so they can be generated on demand without
    changing any other draw.
    """

    bs_positions: np.ndarray
    bs_backhaul_flag: np.ndarray
    uav_positions: np.ndarray
    ue: np.ndarray
    uav_ue_los: np.ndarray
    bs_ue_fading: np.ndarray
    uav_ue_fading: np.ndarray
    backhaul_seeds: np.ndarray


def drop_access(p: NetworkParams, rng: np.random.Generator) -> AccessDrop:
    g = p.geometry
    bs, flags = sample_bs_ppp(g, rng)
    uav = sample_uav_bpp(g, rng)
    ue = np.array([g.v_0, 0.0, 0.0])
    z = np.linalg.norm(uav - ue, axis=1)
    los_u = rng.random(uav.shape[0]) < los_prob_access(np.maximum(z, g.h_u), g.h_u, p.access_los)
    bs_fade = rng.standard_exponential(bs.shape[0])
    uav_fade = _gamma_unit(rng, np.where(los_u, p.fading.m_l, p.fading.m_n).astype(float))
    seeds = rng.integers(0, 2**63 - 1, size=uav.shape[0], dtype=np.int64)
    return AccessDrop(bs, flags, uav, ue, los_u, bs_fade, uav_fade, seeds)


def draw_backhaul_links(p: NetworkParams, drop: AccessDrop, j: int):
    """Distances, LOS classes, fading and beam gains of UAV ``j``'s links to
    every backhaul-enabled BS, plus its serving-link beam gain."""
    rng = np.random.default_rng(int(drop.backhaul_seeds[j]))
    bh = drop.bs_positions[drop.bs_backhaul_flag]
    u = drop.uav_positions[j]
    r = np.hypot(bh[:, 0] - u[0], bh[:, 1] - u[1])
    los = rng.random(r.size) < los_prob_backhaul(r, p.geometry.delta_h, p.backhaul_los)
    fade = _gamma_unit(rng, np.where(los, p.fading.m_l, p.fading.m_n).astype(float))
    interferer, desired = _gain_pmfs(p)
    gain = interferer.sample(rng, r.size)
    des = float(desired.sample(rng, 1)[0])
    return r, los, fade, gain, des


def drop_realization(p: NetworkParams, rng: np.random.Generator) -> NetworkRealization:
    """Full realization with every UAV's backhaul links drawn."""
    drop = drop_access(p, rng)
    n_u = drop.uav_positions.shape[0]
    n_b = int(drop.bs_backhaul_flag.sum())
    links = [draw_backhaul_links(p, drop, j) for j in range(n_u)]

    def stack(i, dtype):
        return np.array([lk[i] for lk in links], dtype=dtype).reshape(n_u, n_b)

    return NetworkRealization(
        drop.bs_positions, drop.bs_backhaul_flag, drop.uav_positions, drop.ue, drop.uav_ue_los,
        drop.bs_ue_fading, drop.uav_ue_fading, stack(0, float), stack(1, bool), stack(2, float),
        stack(3, float), np.array([lk[4] for lk in links], dtype=float))


def _link_sinr(p: NetworkParams, r, los, fade, gain, des):
    """Serving index, LOS class, distance and SINR of one UAV's backhaul."""
    if r.size == 0:
        raise NoBackhaulBS("no backhaul-enabled BS in the drop")
    log_d2 = np.log(r**2 + p.geometry.delta_h**2)
    # log path gain of every link in one pass: log C - (eta/2) log d^2.
    log_path = np.where(los, np.log(p.c_l), np.log(p.c_n)) - np.where(los, p.eta_l / 2.0, p.eta_n / 2.0) * log_d2
    k = int(np.argmax(log_path))
    rx = p.p_b * np.exp(log_path) * fade
    interf = float(rx @ gain) - rx[k] * gain[k]
    return k, bool(los[k]), float(r[k]), float(rx[k] * des / (p.noise + interf))


def evaluate_backhaul(real: NetworkRealization, p: NetworkParams) -> BackhaulResult:
    """Serving BS (minimum path loss among backhaul-enabled BSs) and SINR per UAV."""
    n_u = real.uav_positions.shape[0]
    res = [_link_sinr(p, real.backhaul_dist[j], real.backhaul_los[j], real.backhaul_fading[j],
                      real.backhaul_gain[j], real.desired_gain[j]) for j in range(n_u)]
    serving = np.array([x[0] for x in res], dtype=int)
    los = np.array([x[1] for x in res], dtype=bool)
    dist = np.array([x[2] for x in res], dtype=float)
    sinr = np.array([x[3] for x in res], dtype=float)
    return BackhaulResult(serving, los, dist, sinr, sinr >= p.tau_b)


class _LazyBackhaul:
    """Backhaul outcome per UAV, computed the first time it is asked for."""

    def __init__(self, p: NetworkParams, drop: AccessDrop):
        self.p, self.drop = p, drop
        self.cache: dict[int, tuple] = {}

    def result(self, j: int) -> tuple:
        if j not in self.cache:
            self.cache[j] = _link_sinr(self.p, *draw_backhaul_links(self.p, self.drop, j))
        return self.cache[j]

    def ok(self, j: int) -> bool:
        return self.result(j)[3] >= self.p.tau_b


def _access(real, p: NetworkParams, get_ok) -> dict:
    """Association and per-scheme coverage of the UE on one realization.

    ``get_ok(j)`` reports whether UAV j's backhaul succeeded. It is only
    called when the answer can change an outcome: silencing interferers can
    only raise an SIR, so when the SIR clears the threshold with every UAV
    active, or fails it with every UAV silent, the backhaul states of the
    interfering UAVs are irrelevant.
    """
    g = p.geometry
    tau = p.tau_a
    s = np.hypot(real.bs_positions[:, 0] - real.ue[0], real.bs_positions[:, 1] - real.ue[1])
    avg_bs = p.p_g * (s**2 + g.h_g**2) ** (-p.eta_g / 2.0)
    z = np.linalg.norm(real.uav_positions - real.ue, axis=1)
    eta_u = np.where(real.uav_ue_los, p.eta_l, p.eta_n)
    avg_uav = p.p_u * z ** (-eta_u)
    n_bs, n_u = avg_bs.size, avg_uav.size
    best = int(np.argmax(np.concatenate([avg_bs, avg_uav])))
    rx_bs = avg_bs * real.bs_ue_fading
    rx_uav = avg_uav * real.uav_ue_fading
    tot_bs = float(rx_bs.sum())
    tot_uav = float(rx_uav.sum())

    def clears_aware(sig: float, base: float, exclude: int) -> bool:
        # sig / (base + sum of successful UAVs other than ``exclude``) >= tau
        others = tot_uav - (rx_uav[exclude] if exclude >= 0 else 0.0)
        if sig >= tau * (base + others):
            return True
        if sig < tau * base:
            return False
        # Resolve the strongest interferers first and stop once decided.
        order = [int(i) for i in np.argsort(-rx_uav, kind="stable") if i != exclude]
        known = 0.0
        pending = float(sum(rx_uav[i] for i in order))
        for i in order:
            pending -= rx_uav[i]
            if get_ok(i):
                known += rx_uav[i]
            if sig < tau * (base + known):
                return False
            if sig >= tau * (base + known + max(pending, 0.0)):
                return True
        return bool(sig >= tau * (base + known))

    out = {}
    if best < n_bs:
        sig = float(rx_bs[best])
        sir_u = bool(sig >= tau * (tot_bs - sig + tot_uav))
        sir_a = clears_aware(sig, tot_bs - sig, -1)
        out.update(association="bs", serving_dist=float(s[best]), backhaul_ok=None,
                   sir_ok_unaware=sir_u, sir_ok_aware=sir_a, service_failure=False,
                   covered={"unaware": sir_u, "aware": sir_a, "instantaneous": sir_a})
        return out
    j = best - n_bs
    ok = bool(get_ok(j))
    sig = float(rx_uav[j])
    sir_u = bool(sig >= tau * (tot_bs + tot_uav - sig))
    # Access-only condition of the aware scheme; meaningful when UAV j transmits.
    sir_a = clears_aware(sig, tot_bs, j) if ok else None
    if ok:
        cov_i = sir_a
    elif n_bs == 0:
        cov_i = False
    else:
        k = int(np.argmax(avg_bs))
        cov_i = clears_aware(float(rx_bs[k]), tot_bs - float(rx_bs[k]), j)
    out.update(association="uav_los" if real.uav_ue_los[j] else "uav_nlos", serving_dist=float(z[j]),
               backhaul_ok=ok, sir_ok_unaware=sir_u, sir_ok_aware=sir_a, service_failure=not ok,
               covered={"unaware": sir_u and ok, "aware": bool(sir_a) and ok, "instantaneous": cov_i})
    return out


# Columns of the per-trial record produced by ``simulate_trials``.
RECORD_FIELDS = (
    "assoc",            # 0 bs, 1 uav_los, 2 uav_nlos
    "serving_bh_ok",    # -1 when BS-served
    "sir_ok_unaware",   # access SIR condition only
    "sir_ok_aware",     # -1 when the serving UAV's backhaul failed
    "cov_unaware",
    "cov_aware",
    "cov_instantaneous",
    "service_failure",
    "bh0_ok",           # backhaul success of UAV 0 (-1 if no UAVs)
    "bh0_los",          # LOS class of UAV 0's serving BS (-1 if no UAVs)
)


def _record(acc: dict, bh0) -> tuple[np.ndarray, np.ndarray]:
    rec = np.empty(len(RECORD_FIELDS), dtype=np.int8)
    rec[0] = ASSOCIATIONS.index(acc["association"])
    rec[1] = -1 if acc["backhaul_ok"] is None else int(acc["backhaul_ok"])
    rec[2] = acc["sir_ok_unaware"]
    rec[3] = -1 if acc["sir_ok_aware"] is None else int(acc["sir_ok_aware"])
    rec[4] = acc["covered"]["unaware"]
    rec[5] = acc["covered"]["aware"]
    rec[6] = acc["covered"]["instantaneous"]
    rec[7] = acc["service_failure"]
    rec[8] = -1 if bh0 is None else int(bh0[0])
    rec[9] = -1 if bh0 is None else int(bh0[1])
    diag = np.array([acc["serving_dist"], np.nan if bh0 is None else bh0[2]])
    return rec, diag


def simulate_trial(p: NetworkParams, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One realization evaluated under all schemes.

    Returns an int8 record (see ``RECORD_FIELDS``) and float diagnostics
    ``(serving distance, UAV-0 serving backhaul distance)``. Backhaul links
    are only drawn for UAVs whose state matters, which gives the same
    outcome as ``simulate_trial_full`` at a fraction of the cost.
    """
    drop = drop_access(p, rng)
    lazy = _LazyBackhaul(p, drop)
    bh0 = None
    if drop.uav_positions.shape[0]:
        _, los0, dist0, sinr0 = lazy.result(0)
        bh0 = (sinr0 >= p.tau_b, los0, dist0)
    return _record(_access(drop, p, lazy.ok), bh0)


def simulate_trial_full(p: NetworkParams, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """As ``simulate_trial`` but drawing and resolving every backhaul link."""
    real = drop_realization(p, rng)
    bh = evaluate_backhaul(real, p)
    bh0 = (bh.success[0], bh.serving_los[0], bh.serving_dist[0]) if bh.success.size else None
    return _record(_access(real, p, lambda j: bool(bh.success[j])), bh0)


def run_trial(p: NetworkParams, scheme: str, rng: np.random.Generator) -> TrialOutcome:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    real = drop_realization(p, rng)
    bh = evaluate_backhaul(real, p)
    acc = _access(real, p, lambda j: bool(bh.success[j]))
    failure = acc["service_failure"] and scheme == "aware"
    return TrialOutcome(acc["association"], acc["backhaul_ok"], bool(acc["covered"][scheme]), failure, scheme)


def _chunk(args) -> tuple[np.ndarray, np.ndarray]:
    p, seed, start, stop = args
    recs = np.empty((stop - start, len(RECORD_FIELDS)), dtype=np.int8)
    diags = np.empty((stop - start, 2))
    for i in range(start, stop):
        recs[i - start], diags[i - start] = simulate_trial(p, trial_rng(seed, i))
    return recs, diags


def simulate_trials(p: NetworkParams, n_trials: int, seed: int, workers: int = 1):
    """Per-trial records and diagnostics for trials ``0..n_trials-1``."""
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    workers = max(1, int(workers))
    if workers == 1:
        return _chunk((p, seed, 0, n_trials))
    n_chunks = min(n_trials, 8 * workers)
    bounds = np.linspace(0, n_trials, n_chunks + 1).astype(int)
    jobs = [(p, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_chunk, jobs))
    return np.concatenate([r for r, _ in parts]), np.concatenate([d for _, d in parts])


def _prop(successes: int, n: int, **extra) -> CoverageEstimate:
    if n == 0:
        return CoverageEstimate(float("nan"), float("nan"), float("nan"), 0, **extra)
    lo, hi = wilson_interval(int(successes), int(n))
    return CoverageEstimate(successes / n, lo, hi, int(n), **extra)


def summarize(records: np.ndarray) -> dict[str, CoverageEstimate]:
    """All simulated metrics from per-trial records.

    Keys follow the analytic names: ``p_cov_<scheme>``, association
    fractions ``a_g``/``a_ul``/``a_un``, ``a_f`` (service failure),
    ``s_backhaul``, ``a_bl`` and conditional coverages
    ``p_cov_<g|ul|un>_<scheme>`` given the association class.
    """
    r = records.astype(int)
    n = r.shape[0]
    assoc = r[:, 0]
    counts = {name: int((assoc == i).sum()) for i, name in enumerate(ASSOCIATIONS)}
    out: dict[str, CoverageEstimate] = {}
    for j, scheme in enumerate(SCHEMES):
        cov = r[:, 4 + j]
        rates = {"service_failure": float(r[:, 7].mean())} if scheme == "aware" else {}
        out[f"p_cov_{scheme}"] = _prop(cov.sum(), n, breakdown=dict(counts), rates=rates)
    out["a_g"] = _prop(counts["bs"], n)
    out["a_ul"] = _prop(counts["uav_los"], n)
    out["a_un"] = _prop(counts["uav_nlos"], n)
    out["a_f"] = _prop(int(r[:, 7].sum()), n)
    out["at_ul"] = _prop(int(((assoc == 1) & (r[:, 1] == 1)).sum()), n)
    out["at_un"] = _prop(int(((assoc == 2) & (r[:, 1] == 1)).sum()), n)
    out["at_u"] = _prop(int(((assoc > 0) & (r[:, 1] == 1)).sum()), n)
    has_uav = r[:, 8] >= 0
    out["s_backhaul"] = _prop(int((r[has_uav, 8] == 1).sum()), int(has_uav.sum()))
    out["a_bl"] = _prop(int((r[has_uav, 9] == 1).sum()), int(has_uav.sum()))
    for i, tag in enumerate(("g", "ul", "un")):
        sel = assoc == i
        k = int(sel.sum())
        out[f"p_cov_{tag}_unaware"] = _prop(int(r[sel, 4].sum()), k)
        out[f"p_cov_{tag}_aware"] = _prop(int(r[sel, 5].sum()), k)
        if tag != "g":
            # Access-only coverage of UAV-served UEs whose backhaul succeeded.
            ok = sel & (r[:, 1] == 1)
            out[f"p_sir_{tag}_aware"] = _prop(int(r[ok, 3].sum()), int(ok.sum()))
    return out


def estimate_all(p: NetworkParams, n_trials: int, seed: int, workers: int = 1) -> dict[str, CoverageEstimate]:
    records, _ = simulate_trials(p, n_trials, seed, workers)
    return summarize(records)


def estimate(p: NetworkParams, scheme: str, n_trials: int, seed: int, workers: int = 1) -> CoverageEstimate:
    """Coverage of one scheme with a 95 % Wilson interval."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if n_trials < 100:
        raise ValueError("n_trials must be at least 100")
    return estimate_all(p, n_trials, seed, workers)[f"p_cov_{scheme}"]


# -- Laplace-transform oracle --------------------------------------------------

def _uav_beyond(p: NetworkParams, rng: np.random.Generator, count: int, lower_l: float, lower_n: float):
    """``count`` UAV received powers (without fading), each UAV conditioned on
    lying beyond ``lower_l`` if LOS or ``lower_n`` if NLOS."""
    g = p.geometry
    if count > 0 and min(lower_l, lower_n) >= g.w_p:
        raise ValueError("no UAV position satisfies the conditioning")
    got_z, got_los = [], []
    need = count
    while need > 0:
        batch = max(64, 4 * need)
        pos = sample_uav_bpp(replace(g, n_u=batch), rng)
        z = np.linalg.norm(pos - np.array([g.v_0, 0.0, 0.0]), axis=1)
        los = rng.random(batch) < los_prob_access(np.maximum(z, g.h_u), g.h_u, p.access_los)
        keep = np.where(los, z > lower_l, z > lower_n)
        got_z.append(z[keep][:need])
        got_los.append(los[keep][:need])
        need -= got_z[-1].size
    z = np.concatenate(got_z) if got_z else np.zeros(0)
    los = np.concatenate(got_los) if got_los else np.zeros(0, dtype=bool)
    return z, los


def mc_laplace(p: NetworkParams, which: str, s: float, conditioning: dict, n_drops: int,
               seed: int = 0) -> MeanEstimate:
    """Monte-Carlo estimate of ``E[exp(-s I)]`` for one interference field.

    ``which``:
      ``bs_interf``: BSs beyond horizontal distance ``conditioning["x_lower"]``
      (PPP of density lambda_g up to ``conditioning.get("radius", sim_radius)``).
      ``uav_interf``: ``conditioning["count"]`` i.i.d. UAVs conditioned to lie
      beyond ``lower_l``/``lower_n``.
      ``uav_successful_interf``: as ``uav_interf`` but the count is
      Binomial(``count``, ``s_backhaul``).
    """
    if n_drops < 1000:
        raise ValueError("n_drops must be at least 1000")
    if s == 0:
        return MeanEstimate(1.0, 1.0, 1.0, n_drops)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7919]))
    vals = np.empty(n_drops)
    g = p.geometry
    if which == "bs_interf":
        x_lo = float(conditioning["x_lower"])
        radius = float(conditioning.get("radius", g.sim_radius))
        area = np.pi * (radius**2 - x_lo**2)
        for i in range(n_drops):
            n = rng.poisson(g.lambda_g * area)
            r = np.sqrt(x_lo**2 + (radius**2 - x_lo**2) * rng.random(n))
            interf = (p.p_g * (r**2 + g.h_g**2) ** (-p.eta_g / 2.0) * rng.standard_exponential(n)).sum()
            vals[i] = np.exp(-s * interf)
    elif which in ("uav_interf", "uav_successful_interf"):
        lower_l = float(conditioning["lower_l"])
        lower_n = float(conditioning["lower_n"])
        count = int(conditioning["count"])
        for i in range(n_drops):
            k = count if which == "uav_interf" else int(rng.binomial(count, conditioning["s_backhaul"]))
            z, los = _uav_beyond(p, rng, k, lower_l, lower_n)
            m = np.where(los, p.fading.m_l, p.fading.m_n).astype(float)
            eta = np.where(los, p.eta_l, p.eta_n)
            interf = (p.p_u * z ** (-eta) * _gamma_unit(rng, m)).sum() if k else 0.0
            vals[i] = np.exp(-s * interf)
    else:
        raise ValueError(f"unknown interference field {which!r}")
    mean, lo, hi = mean_interval(vals)
    return MeanEstimate(mean, lo, hi, n_drops)
