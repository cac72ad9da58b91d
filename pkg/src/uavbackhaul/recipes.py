"""Figure recipes: parameter sets for each validation figure, the bundled
reference points and a deviation report against freshly computed values."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping

from .analytic import get_model
from .errors import ConfigError
from .params import DEFAULT_CONFIG, apply_overrides, build_params
from .simulator import estimate_all

FIGURE_IDS = (
    "backhaul-vs-height",
    "association-vs-height",
    "coverage-vs-height",
    "coverage-vs-nu",
    "coverage-vs-misalignment",
    "coverage-vs-density",
    "backhaul-vs-fraction",
    "coverage-vs-fraction",
    "aware-vs-instantaneous",
)

# Series keys that select what to compute rather than set a scenario value.
_SELECTORS = ("metric", "scheme")


@lru_cache(maxsize=1)
def load_reference() -> dict:
    text = resources.files("uavbackhaul").joinpath("data/reference_figures.json").read_text(encoding="utf-8")
    return json.loads(text)


def figure(figure_id: str) -> dict:
    figs = load_reference()["figures"]
    if figure_id not in figs:
        raise ConfigError(f"unknown figure id {figure_id!r}; known: {', '.join(FIGURE_IDS)}", field="figure_id")
    return figs[figure_id]


@dataclass
class PointResult:
    series: str
    kind: str
    x: float
    reference: float
    computed: float
    ci_low: float = math.nan
    ci_high: float = math.nan

    @property
    def deviation(self) -> float:
        return self.computed - self.reference


@dataclass
class FigureReport:
    figure_id: str
    points: list[PointResult] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def max_abs_dev(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for pt in self.points:
            if math.isfinite(pt.computed):
                key = f"{pt.series} [{pt.kind}]"
                out[key] = max(out.get(key, 0.0), abs(pt.deviation))
        return out


def point_config(fig: Mapping, series: Mapping, x: float, base: Mapping[str, Any] | None = None) -> dict:
    """Flat configuration of one figure point."""
    cfg = dict(DEFAULT_CONFIG if base is None else base)
    overrides = {k: v for k, v in series.get("params", {}).items() if k not in _SELECTORS}
    overrides[fig["x"]] = int(round(x)) if fig["x"] in ("n_u", "m_l", "m_n") else x
    return apply_overrides(cfg, overrides)


def _selectors(fig: Mapping, series: Mapping) -> tuple[str, str]:
    params = series.get("params", {})
    return params.get("metric", fig.get("metric")), params.get("scheme", fig.get("scheme"))


def analytic_metric(cfg: Mapping[str, Any], metric: str, scheme: str) -> tuple[float, tuple[str, ...]]:
    model = get_model(build_params(cfg))
    if metric == "s_backhaul":
        return model.backhaul_prob(), tuple(model.warnings)
    if metric in ("a_u", "a_g", "a_f"):
        t = model.aware_transmission()
        val = {"a_u": t.at_ul + t.at_un, "a_g": t.at_g, "a_f": t.at_f}[metric]
        return val, tuple(model.warnings)
    if metric == "p_cov":
        res = model.overall(scheme)
        return res.p_cov, res.warnings
    raise ConfigError(f"unknown metric {metric!r}", field="metric")


_SIM_KEYS = {"s_backhaul": "s_backhaul", "a_u": "at_u", "a_g": "a_g", "a_f": "a_f"}


def simulated_metric(cfg: Mapping[str, Any], metric: str, scheme: str, n_trials: int, seed: int,
                     workers: int = 1):
    est = estimate_all(build_params(cfg), n_trials, seed, workers)
    key = f"p_cov_{scheme}" if metric == "p_cov" else _SIM_KEYS[metric]
    return est[key]


def reproduce(figure_id: str, mode: str = "analytic", base: Mapping[str, Any] | None = None,
              n_trials: int = 10_000, seed: int = 0, workers: int = 1) -> FigureReport:
    """Recompute every reference series of a figure that ``mode`` covers.

    Analytic series are recomputed in ``analytic``/``both`` modes and
    simulation series in ``simulate``/``both`` modes. Series of the
    simulation-only instantaneous scheme are skipped in analytic mode.
    """
    if mode not in ("analytic", "simulate", "both"):
        raise ConfigError(f"unknown mode {mode!r}", field="mode")
    fig = figure(figure_id)
    report = FigureReport(figure_id)
    want = {"analytic": {"analytic"}, "simulate": {"simulation"}, "both": {"analytic", "simulation"}}[mode]
    for series in fig["series"]:
        metric, scheme = _selectors(fig, series)
        kind = series["kind"]
        if kind not in want:
            report.skipped.append(f"{series['label']} [{kind}]: not computed in {mode} mode")
            continue
        for x, ref in series["points"]:
            cfg = point_config(fig, series, x, base)
            if kind == "analytic":
                val, warns = analytic_metric(cfg, metric, scheme)
                report.points.append(PointResult(series["label"], kind, x, ref, val))
                report.warnings.extend(w for w in warns if w not in report.warnings)
            else:
                e = simulated_metric(cfg, metric, scheme, n_trials, seed, workers)
                report.points.append(PointResult(series["label"], kind, x, ref, e.estimate, e.ci_low, e.ci_high))
    return report


__all__ = ["FIGURE_IDS", "FigureReport", "PointResult", "analytic_metric", "figure", "load_reference",
           "point_config", "reproduce", "simulated_metric"]
