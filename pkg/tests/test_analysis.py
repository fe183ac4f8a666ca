import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from trapwalk.analysis import (
    classical_references,
    detect_crossover,
    fit_stretch_exponent,
    jackknife,
    predict,
    usable_points,
)
from trapwalk.ensemble import EnsembleSpec, SurvivalSeries, ensemble_average
from trapwalk.errors import FitError


def stretched(T, a, beta):
    t = np.arange(T + 1, dtype=float)
    return np.exp(-a * t**beta)


def two_regime(T, t_break, beta1=0.9, beta2=0.3, a1=0.01):
    """-ln P = a1 t^beta1 up to t_break, continued as a2 t^beta2 (continuous at the break)."""
    t = np.arange(T + 1, dtype=float)
    a2 = a1 * t_break ** (beta1 - beta2)
    return np.exp(-np.where(t <= t_break, a1 * t**beta1, a2 * t**beta2))


class TestFitStretchExponent:
    def test_exact_square_root(self):
        fit = fit_stretch_exponent(stretched(60, 1.0, 0.5), (4, 60))
        assert abs(fit.beta - 0.5) < 1e-9
        assert abs(fit.intercept) < 1e-9

    def test_prefactor_moves_intercept_only(self):
        fit = fit_stretch_exponent(stretched(100, 2.0, 0.3), (4, 100))
        assert abs(fit.beta - 0.3) < 1e-9
        assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-9)

    def test_early_window_of_glued_curve(self):
        P = two_regime(1000, 100, beta1=0.9, beta2=0.2, a1=1.0)
        assert fit_stretch_exponent(P, (4, 100)).beta == pytest.approx(0.9, abs=0.01)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_stretch_exponent(stretched(6, 1.0, 0.5), (4, 6))

    def test_saturated_points_dropped(self):
        P = stretched(40, 0.1, 0.6)
        P[10:15] = 1.0
        t, *_ = usable_points(P, 4, 40)
        assert not set(range(10, 15)) & set(t.tolist())
        assert fit_stretch_exponent(P, (4, 40)).beta == pytest.approx(0.6, abs=1e-9)

    def test_log_floor(self):
        P = stretched(200, 1.0, 0.9)
        t, *_ = usable_points(P, 1, 200)
        assert np.all(P[t] > 10 * np.finfo(float).eps)
        assert t.max() < 200

    def test_weighted_fit_exact_curve(self):
        P = stretched(80, 0.5, 0.4)
        s = SurvivalSeries(P, np.full_like(P, 1e-3))
        assert fit_stretch_exponent(s, (4, 80), weighted=True).beta == pytest.approx(0.4, abs=1e-9)

    def test_weighted_needs_stderr(self):
        with pytest.raises(FitError):
            fit_stretch_exponent(SurvivalSeries(stretched(80, 0.5, 0.4), np.zeros(81)), (4, 80), weighted=True)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.05, 3.0), beta=st.floats(0.1, 1.0), c=st.floats(0.2, 5.0))
def test_fit_exactness_and_prefactor_invariance(a, beta, c):
    # keep t = 4..8 above the log floor so every curve has at least five points
    assume(max(a, a * c) * 8**beta < 30)
    base = fit_stretch_exponent(stretched(300, a, beta), (4, 300))
    scaled = fit_stretch_exponent(stretched(300, a * c, beta), (4, 300))
    assert abs(base.beta - beta) <= 1e-9
    assert abs(scaled.beta - beta) <= 1e-9
    assert scaled.intercept - base.intercept == pytest.approx(math.log(c), abs=1e-8)


class TestDetectCrossover:
    def test_break_at_200(self):
        fit = detect_crossover(two_regime(2000, 200))
        assert fit.crossover
        assert 200 / math.sqrt(2) <= fit.t_c <= 200 * math.sqrt(2)
        assert fit.beta1 == pytest.approx(0.9, abs=1e-6)
        assert fit.beta2 == pytest.approx(0.3, abs=1e-6)

    def test_single_regime_flagged(self):
        fit = detect_crossover(stretched(500, 0.05, 0.5))
        assert not fit.crossover
        assert fit.beta1 == fit.beta2 == pytest.approx(0.5, abs=1e-9)
        assert fit.window[0] <= fit.t_c <= fit.window[1]

    def test_noisy_single_regime_stays_single(self):
        rng = np.random.default_rng(0)
        P = stretched(800, 0.05, 0.5)
        P = np.exp(-(-np.log(np.clip(P, 1e-300, 1))) * (1 + 0.01 * rng.standard_normal(P.size)))
        P[0] = 1.0
        assert not detect_crossover(P).crossover

    def test_too_short(self):
        with pytest.raises(FitError):
            detect_crossover(stretched(20, 0.05, 0.5))

    def test_deterministic(self):
        P = two_regime(1500, 300)
        P = P * (1 + 1e-4 * np.sin(np.arange(P.size)))
        P[0] = 1.0
        assert detect_crossover(P) == detect_crossover(P)

    def test_margin_is_configurable(self):
        rng = np.random.default_rng(1)
        P = two_regime(1000, 100, beta1=0.55, beta2=0.5)
        P = np.exp(np.log(P) * (1 + 0.02 * rng.standard_normal(P.size)))
        P[0] = 1.0
        loose = detect_crossover(P, margin=0.0)
        assert loose.crossover
        ratio = loose.sse / loose.sse_single
        assert detect_crossover(P, margin=(1 - ratio) / 2).crossover
        assert not detect_crossover(P, margin=min(0.99, 2 * (1 - ratio))).crossover


class TestPredict:
    def test_values_at_point_two(self):
        p = predict(0.2, "up")
        assert p.beta1_pred == pytest.approx(0.9)
        assert p.beta2_pred == pytest.approx(0.1)
        assert p.tc == pytest.approx(125)
        assert p.lambda_ == pytest.approx(-math.log(0.8))

    def test_mixed_crossover(self):
        assert predict(0.2, "mixed").tc == pytest.approx(40)
        assert predict(0.2, "mixed").tc_mixed == pytest.approx(40)

    def test_low_density_limit(self):
        assert predict(1e-9).beta1_pred == pytest.approx(1.0)

    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, rho):
        with pytest.raises(ValueError):
            predict(rho)

    @settings(max_examples=50)
    @given(rho=st.floats(1e-6, 1 - 1e-6))
    def test_sum_rule(self, rho):
        p = predict(rho)
        assert p.beta1_pred + p.beta2_pred == pytest.approx(1.0)
        assert p.lambda_ > 0
        assert p.trapped_spread_exponent == p.beta1_pred


def test_classical_references():
    refs = classical_references()
    assert refs.beta_rs == 0.5
    assert refs.beta_dv == pytest.approx(1 / 3)
    assert refs.beta_ct_quantum == 0.25


def test_jackknife_of_mean_matches_stderr():
    rng = np.random.default_rng(5)
    configs = np.column_stack([np.ones(40), rng.random(40)])
    s = SurvivalSeries.from_configs(configs, keep=True)
    se = jackknife(s, lambda sub: sub.mean[1], groups=40)
    assert se == pytest.approx(s.stderr[1], rel=1e-10)


def test_jackknife_requires_configs():
    s = SurvivalSeries.from_configs(np.ones((3, 4)))
    with pytest.raises(ValueError):
        jackknife(s, lambda sub: 0.0)


def test_fit_on_real_ensemble():
    s = ensemble_average(EnsembleSpec(101, 0.1, 300, 20, "up", master_seed=4), keep_configs=True)
    fit = detect_crossover(s)
    assert 0 < fit.beta2 < fit.beta1 < 1
    se = jackknife(s, lambda sub: fit_stretch_exponent(sub, (4, fit.t_c)).beta, groups=10)
    assert 0 < se < 0.1
