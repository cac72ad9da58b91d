"""Metric tables shared by the command-line front-end and the checks.

Both pipelines report the same named quantities so that an analytic value and
its simulated counterpart can be compared key by key.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .analytic import AnalyticModel, get_model
from .errors import ConfigError
from .params import NetworkParams
from .simulator import SCHEMES, CoverageEstimate, estimate_all

ANALYTIC_SCHEMES = ("unaware", "aware")
ROW_METRICS = ("p_cov", "p_cov_g", "p_cov_ul", "p_cov_un", "a_g", "a_ul", "a_un", "a_f", "s_backhaul")


def _model(p: NetworkParams, use_cache: bool) -> AnalyticModel:
    return get_model(p) if use_cache else AnalyticModel(p, use_cache=False)


def analytic_row(p: NetworkParams, scheme: str, use_cache: bool = True) -> tuple[dict, tuple[str, ...]]:
    """Row metrics of one scheme plus the model's warnings.

    Under the aware scheme ``a_ul``/``a_un`` are transmission probabilities
    (UAV association with working backhaul) and ``a_f`` the service-failure
    probability; under the unaware scheme they are association probabilities.
    """
    if scheme not in ANALYTIC_SCHEMES:
        raise ConfigError(f"scheme {scheme!r} is simulation-only", field="scheme")
    res = _model(p, use_cache).overall(scheme)
    row = {k: getattr(res, k) for k in ROW_METRICS}
    return row, res.warnings


def simulated_row(est: dict[str, CoverageEstimate], scheme: str) -> dict:
    """Row metrics of one scheme from ``estimate_all`` output.

    The aware component coverages are the access-only rates of UAV-served
    UEs whose backhaul worked, which is what the analytic aware components
    describe.
    """
    cov = est[f"p_cov_{scheme}"]
    row = {"p_cov": cov.estimate, "ci_low": cov.ci_low, "ci_high": cov.ci_high, "n_trials": cov.n_trials,
           "s_backhaul": est["s_backhaul"].estimate}
    if scheme == "unaware":
        row.update(p_cov_g=est["p_cov_g_unaware"].estimate, p_cov_ul=est["p_cov_ul_unaware"].estimate,
                   p_cov_un=est["p_cov_un_unaware"].estimate, a_g=est["a_g"].estimate,
                   a_ul=est["a_ul"].estimate, a_un=est["a_un"].estimate, a_f=0.0)
    elif scheme == "aware":
        row.update(p_cov_g=est["p_cov_g_aware"].estimate, p_cov_ul=est["p_sir_ul_aware"].estimate,
                   p_cov_un=est["p_sir_un_aware"].estimate, a_g=est["a_g"].estimate,
                   a_ul=est["at_ul"].estimate, a_un=est["at_un"].estimate, a_f=est["a_f"].estimate)
    else:
        row.update(p_cov_g=math.nan, p_cov_ul=math.nan, p_cov_un=math.nan, a_g=est["a_g"].estimate,
                   a_ul=est["a_ul"].estimate, a_un=est["a_un"].estimate, a_f=0.0)
    return row


def _analytic_job(args):
    p, scheme, use_cache = args
    return analytic_row(p, scheme, use_cache)


def analytic_rows(points: list[NetworkParams], scheme: str, workers: int = 1, use_cache: bool = True):
    """``analytic_row`` over many points, in input order."""
    jobs = [(p, scheme, use_cache) for p in points]
    if workers <= 1 or len(jobs) <= 1:
        return [_analytic_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_analytic_job, jobs))


# -- analytic vs simulation ----------------------------------------------------

@dataclass(frozen=True)
class MetricCheck:
    metric: str
    analytic: float
    estimate: float
    ci_low: float
    ci_high: float
    n: int
    status: str  # PASS, FAIL or N/A

    @property
    def delta(self) -> float:
        return self.analytic - self.estimate


# (name, simulated key, analytic getter)
VALIDATION_METRICS = (
    ("s_backhaul", "s_backhaul", lambda m: m.backhaul_prob()),
    ("a_g", "a_g", lambda m: m.association().a_g),
    ("a_ul", "a_ul", lambda m: m.association().a_ul),
    ("a_un", "a_un", lambda m: m.association().a_un),
    ("at_ul", "at_ul", lambda m: m.aware_transmission().at_ul),
    ("at_un", "at_un", lambda m: m.aware_transmission().at_un),
    ("a_f", "a_f", lambda m: m.aware_transmission().at_f),
    ("p_cov_g_unaware", "p_cov_g_unaware", lambda m: m.cond_cov_g("unaware")),
    ("p_cov_ul_unaware", "p_cov_ul_unaware", lambda m: m.cond_cov_uav("l", "unaware")),
    ("p_cov_un_unaware", "p_cov_un_unaware", lambda m: m.cond_cov_uav("n", "unaware")),
    ("p_cov_unaware", "p_cov_unaware", lambda m: m.overall("unaware").p_cov),
    ("p_cov_g_aware", "p_cov_g_aware", lambda m: m.cond_cov_g("aware")),
    ("p_cov_ul_aware", "p_sir_ul_aware", lambda m: m.cond_cov_uav("l", "aware")),
    ("p_cov_un_aware", "p_sir_un_aware", lambda m: m.cond_cov_uav("n", "aware")),
    ("p_cov_aware", "p_cov_aware", lambda m: m.overall("aware").p_cov),
)
UAV_METRICS = frozenset({"s_backhaul", "a_ul", "a_un", "at_ul", "at_un", "a_f", "p_cov_ul_unaware",
                         "p_cov_un_unaware", "p_cov_ul_aware", "p_cov_un_aware"})


def compare(model: AnalyticModel, est: dict[str, CoverageEstimate], slack: float = 0.02) -> list[MetricCheck]:
    """PASS iff the analytic value lies in ``[ci_low - slack, ci_high + slack]``.

    A metric is N/A when it is undefined for the scenario (UAV metrics with no
    UAVs) or when no simulated trial fell into its conditioning event.
    """
    no_uav = model.n_u == 0
    out = []
    for name, key, getter in VALIDATION_METRICS:
        e = est[key]
        if (no_uav and name in UAV_METRICS) or e.n_trials == 0:
            out.append(MetricCheck(name, math.nan, e.estimate, e.ci_low, e.ci_high, e.n_trials, "N/A"))
            continue
        val = float(getter(model))
        ok = e.ci_low - slack <= val <= e.ci_high + slack
        out.append(MetricCheck(name, val, e.estimate, e.ci_low, e.ci_high, e.n_trials, "PASS" if ok else "FAIL"))
    return out


def validate(p_analytic: NetworkParams, p_sim: NetworkParams, n_trials: int, seed: int, workers: int = 1,
             slack: float = 0.02, use_cache: bool = True) -> list[MetricCheck]:
    est = estimate_all(p_sim, n_trials, seed, workers)
    return compare(_model(p_analytic, use_cache), est, slack)


__all__ = ["ANALYTIC_SCHEMES", "ROW_METRICS", "SCHEMES", "MetricCheck", "VALIDATION_METRICS",
           "analytic_row", "analytic_rows", "compare", "simulated_row", "validate"]
