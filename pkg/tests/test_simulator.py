import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from statsmodels.stats.proportion import proportion_confint

from uavbackhaul.analytic import AnalyticModel
from uavbackhaul.errors import NoBackhaulBS
from uavbackhaul.params import default_params
from uavbackhaul.simulator import (AccessDrop, NetworkRealization, RECORD_FIELDS, TrialOutcome, _access,
                                   drop_realization, estimate, estimate_all, evaluate_backhaul, mc_laplace,
                                   run_trial, simulate_trial, simulate_trial_full, simulate_trials, summarize,
                                   trial_rng)
from uavbackhaul.channel import los_prob_access
from uavbackhaul.stats import mean_interval, wilson_interval


class TestStats:
    @pytest.mark.parametrize("k,n", [(0, 10), (3, 10), (10, 10), (512, 1000), (1, 100_000)])
    def test_wilson_matches_statsmodels(self, k, n):
        lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
        np.testing.assert_allclose(wilson_interval(k, n), (lo, hi), rtol=1e-9, atol=1e-15)

    def test_wilson_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            wilson_interval(5, 4)
        with pytest.raises(ValueError):
            wilson_interval(0, 0)

    def test_mean_interval_covers_mean(self):
        m, lo, hi = mean_interval(np.random.default_rng(0).normal(2.0, 1.0, 10_000))
        assert lo < 2.0 < hi and lo < m < hi


class TestRealization:
    def test_same_seed_is_bit_identical(self, table3):
        a = drop_realization(table3, trial_rng(5, 17))
        b = drop_realization(table3, trial_rng(5, 17))
        for name in NetworkRealization.__dataclass_fields__:
            assert np.array_equal(getattr(a, name), getattr(b, name)), name

    def test_forced_los_access(self):
        p = default_params(los_a=1e-9)
        real = drop_realization(p, trial_rng(0, 0))
        assert real.uav_ue_los.all()

    def test_access_los_is_bernoulli_in_kappa(self):
        p = default_params(n_u=200, h_u=60.0)
        los, kappa = [], []
        for i in range(500):
            real = drop_realization(p, trial_rng(1, i))
            z = np.linalg.norm(real.uav_positions - real.ue, axis=1)
            los.append(real.uav_ue_los)
            kappa.append(los_prob_access(z, p.geometry.h_u, p.access_los))
        los, kappa = np.concatenate(los), np.concatenate(kappa)
        assert los.size == 100_000
        z = (los.sum() - kappa.sum()) / math.sqrt(np.sum(kappa * (1 - kappa)))
        assert abs(z) < 3

    def test_backhaul_arrays_cover_enabled_bs_only(self):
        p = default_params(delta_b=0.4)
        real = drop_realization(p, trial_rng(2, 0))
        assert real.backhaul_dist.shape == (p.geometry.n_u, int(real.bs_backhaul_flag.sum()))


def _one_link_realization(p, g0):
    h = p.geometry.h_u
    e = np.zeros(0)
    return NetworkRealization(
        bs_positions=np.array([[0.0, 0.0, p.geometry.h_g]]), bs_backhaul_flag=np.array([True]),
        uav_positions=np.array([[30.0, 40.0, h]]), ue=np.array([0.0, 0.0, 0.0]),
        uav_ue_los=np.array([True]), bs_ue_fading=np.array([1.0]), uav_ue_fading=np.array([1.0]),
        backhaul_dist=np.array([[50.0]]), backhaul_los=np.array([[True]]), backhaul_fading=np.array([[1.0]]),
        backhaul_gain=np.array([[1.0]]), desired_gain=np.array([g0])), e


class TestBackhaul:
    def test_single_link_closed_form(self, table3):
        g0 = table3.antenna_g.g_max * table3.antenna_u.g_max
        real, _ = _one_link_realization(table3, g0)
        res = evaluate_backhaul(real, table3)
        d2 = 50.0**2 + table3.geometry.delta_h**2
        want = table3.p_b * g0 * table3.c_l * d2 ** (-table3.eta_l / 2) / table3.noise
        assert res.sinr[0] == pytest.approx(want, rel=1e-12)
        assert res.serving_bs[0] == 0 and res.serving_los[0]

    def test_unreachable_threshold(self):
        p = default_params(tau_b_db=200.0)
        res = evaluate_backhaul(drop_realization(p, trial_rng(0, 1)), p)
        assert not res.success.any()

    def test_no_backhaul_bs(self):
        p = default_params(delta_b=0.0)
        with pytest.raises(NoBackhaulBS):
            simulate_trial(p, trial_rng(0, 0))

    def test_serving_bs_has_least_path_loss(self, table3):
        real = drop_realization(table3, trial_rng(3, 3))
        res = evaluate_backhaul(real, table3)
        d2 = real.backhaul_dist**2 + table3.geometry.delta_h**2
        loss = np.where(real.backhaul_los, table3.c_l * d2 ** (-table3.eta_l / 2),
                        table3.c_n * d2 ** (-table3.eta_n / 2))
        np.testing.assert_array_equal(res.serving_bs, loss.argmax(axis=1))


def _access_drop(bs_xy, uav_xyz, bs_fade, uav_fade, p, uav_los=None):
    bs = np.column_stack([np.asarray(bs_xy, float), np.full(len(bs_xy), p.geometry.h_g)]) if len(bs_xy) else \
        np.zeros((0, 3))
    uav = np.asarray(uav_xyz, float).reshape(-1, 3)
    los = np.ones(len(uav), bool) if uav_los is None else np.asarray(uav_los)
    return AccessDrop(bs, np.ones(len(bs), bool), uav, np.zeros(3), los, np.asarray(bs_fade, float),
                      np.asarray(uav_fade, float), np.zeros(len(uav), dtype=np.int64))


class TestAccess:
    def test_exact_tie_goes_to_lowest_index(self):
        # Two BSs at the same distance; only picking BS 0 (fading 3) clears 0 dB.
        p = default_params(n_u=0)
        drop = _access_drop([[100.0, 0.0], [-100.0, 0.0]], [], [3.0, 1.0], [], p)
        acc = _access(drop, p, lambda j: True)
        assert acc["association"] == "bs" and acc["covered"]["unaware"]
        drop = _access_drop([[100.0, 0.0], [-100.0, 0.0]], [], [1.0, 3.0], [], p)
        assert not _access(drop, p, lambda j: True)["covered"]["unaware"]

    def test_bs_wins_tie_with_uav(self):
        p = default_params()
        # UAV at 3-D distance z with P_u z^-2.5 equal to the BS's average power.
        avg_bs = p.p_g * (100.0**2 + p.geometry.h_g**2) ** -2
        z = (p.p_u / avg_bs) ** (1 / 2.5)
        uav = [[math.sqrt(z**2 - p.geometry.h_u**2), 0.0, p.geometry.h_u]]
        drop = _access_drop([[100.0, 0.0]], uav, [1.0], [1.0], p)
        assert _access(drop, p, lambda j: True)["association"] == "bs"

    def test_failed_serving_uav_means_service_failure(self):
        p = default_params()
        drop = _access_drop([[900.0, 0.0]], [[0.0, 0.0, p.geometry.h_u]], [1.0], [1.0], p)
        acc = _access(drop, p, lambda j: False)
        assert acc["association"] == "uav_los"
        assert acc["service_failure"] and not acc["covered"]["aware"] and not acc["covered"]["unaware"]
        # Re-association to the only BS: no interference left, so it is covered.
        assert acc["covered"]["instantaneous"]

    def test_silent_uavs_raise_bs_sir(self):
        p = default_params()
        uavs = [[0.0, 150.0, p.geometry.h_u], [0.0, -150.0, p.geometry.h_u]]
        drop = _access_drop([[20.0, 0.0]], uavs, [1.0], [1.0, 1.0], p)
        silent = _access(drop, p, lambda j: False)
        active = _access(drop, p, lambda j: True)
        assert silent["covered"]["aware"] >= active["covered"]["aware"]

    def test_run_trial_without_uavs(self):
        p = default_params(n_u=0)
        for i in range(20):
            out = run_trial(p, "aware", trial_rng(0, i))
            assert out.association == "bs" and out.backhaul_ok is None and not out.service_failure

    def test_run_trial_all_backhaul_failed(self):
        p = default_params(tau_b_db=200.0)
        outs = [run_trial(p, "aware", trial_rng(4, i)) for i in range(40)]
        uav = [o for o in outs if o.association != "bs"]
        assert uav and all(o.service_failure and not o.covered for o in uav)

    def test_outcome_invariant(self):
        with pytest.raises(ValueError):
            TrialOutcome("bs", None, False, True, "aware")

    def test_unknown_scheme(self, table3):
        with pytest.raises(ValueError):
            run_trial(table3, "greedy", trial_rng(0, 0))


@settings(max_examples=15)
@given(seed=st.integers(0, 2**31), h_u=st.sampled_from([30.0, 100.0, 300.0]),
       delta_b=st.sampled_from([0.1, 1.0]), tau_a_db=st.sampled_from([-5.0, 0.0, 10.0]))
def test_on_demand_backhaul_matches_full_evaluation(seed, h_u, delta_b, tau_a_db):
    p = default_params(h_u=h_u, delta_b=delta_b, tau_a_db=tau_a_db)
    for i in range(5):
        lazy = simulate_trial(p, trial_rng(seed, i))
        full = simulate_trial_full(p, trial_rng(seed, i))
        assert np.array_equal(lazy[0], full[0])
        np.testing.assert_array_equal(lazy[1], full[1])


class TestEstimates:
    def test_records_layout(self, table3):
        rec, diag = simulate_trials(table3, 50, seed=1)
        assert rec.shape == (50, len(RECORD_FIELDS)) and diag.shape == (50, 2)
        assert set(np.unique(rec[:, 0])) <= {0, 1, 2}

    def test_workers_do_not_change_results(self, table3):
        a = simulate_trials(table3, 120, seed=9, workers=1)
        b = simulate_trials(table3, 120, seed=9, workers=3)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1], equal_nan=True)

    def test_zero_threshold_limit(self):
        p = default_params(tau_a_db=-80.0)
        est = estimate(p, "unaware", 4000, seed=2)
        m = AnalyticModel(p)
        a = m.association()
        assert est.ci_low - 0.02 <= a.a_g + a.a_u * m.backhaul_prob() <= est.ci_high + 0.02

    def test_breakdown_counts(self, table3):
        est = estimate(table3, "aware", 200, seed=0)
        assert sum(est.breakdown.values()) == 200
        assert 0.0 <= est.rates["service_failure"] <= 1.0

    def test_minimum_trials(self, table3):
        with pytest.raises(ValueError):
            estimate(table3, "aware", 10, seed=0)

    def test_summary_without_uavs(self):
        est = estimate_all(default_params(n_u=0), 200, seed=0)
        assert est["a_g"].estimate == 1.0
        assert est["s_backhaul"].n_trials == 0 and math.isnan(est["s_backhaul"].estimate)

    def test_summary_consistency(self, table3):
        rec, _ = simulate_trials(table3, 400, seed=4)
        est = summarize(rec)
        total = est["at_ul"].estimate + est["at_un"].estimate + est["a_g"].estimate + est["a_f"].estimate
        assert total == pytest.approx(1.0)


class TestMcLaplace:
    def test_zero_s(self, table3):
        assert mc_laplace(table3, "bs_interf", 0.0, {"x_lower": 10.0}, 1000).estimate == 1.0

    def test_too_few_drops(self, table3):
        with pytest.raises(ValueError):
            mc_laplace(table3, "bs_interf", 1.0, {"x_lower": 10.0}, 10)

    def test_unknown_field(self, table3):
        with pytest.raises(ValueError):
            mc_laplace(table3, "noise", 1.0, {}, 1000)

    def test_impossible_conditioning(self, table3):
        with pytest.raises(ValueError):
            mc_laplace(table3, "uav_interf", 1.0, {"lower_l": 1e6, "lower_n": 1e6, "count": 2}, 1000)
