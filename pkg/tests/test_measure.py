"""Gaussian action sampling and Monte Carlo divisor statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stringnf.core import WeightSpec
from stringnf.divisors import FreqContext, NonResonanceParams, big_omega
from stringnf.measure import (
    DivisorTailEstimate,
    MeasureEstimate,
    MeasureSpec,
    corrected_divisor,
    divisor_tail,
    estimate_measure,
    sample_actions,
    wilson_interval,
)

SOB1 = WeightSpec("sobolev", s=1.0)
SOB2 = WeightSpec("sobolev", s=2.0)


def through_origin_fit(x, y):
    """Least-squares slope through the origin and the fit's R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope = float(x @ y / (x @ x))
    res = y - slope * x
    tot = y - y.mean()
    return slope, 1.0 - float(res @ res) / float(tot @ tot)


class TestMeasureSpec:
    def test_field_validation(self):
        with pytest.raises(ValueError, match="truncation"):
            MeasureSpec(SOB1, 0, 10, 1)
        with pytest.raises(ValueError, match="sample_count"):
            MeasureSpec(SOB1, 4, 0, 1)
        with pytest.raises(ValueError, match="seed"):
            MeasureSpec(SOB1, 4, 10, -3)
        with pytest.raises(ValueError, match="ball_radius"):
            MeasureSpec(SOB1, 4, 10, 1, ball_radius=0.0)


class TestSampler:
    def test_all_samples_inside_the_ball(self):
        spec = MeasureSpec(SOB2, truncation=6, sample_count=2000, seed=11)
        batch = sample_actions(spec)
        ballw = np.arange(1, 7, dtype=float) ** 2.0
        assert len(batch) == 2000
        assert np.all(batch.actions @ ballw <= spec.ball_radius)
        assert np.all(batch.actions > 0)
        assert np.all((0 <= batch.phases) & (batch.phases < 2 * math.pi))

    def test_gevrey_ball_uses_the_exponential_weight(self):
        w = WeightSpec("gevrey", rho=0.5, theta=0.5)
        spec = MeasureSpec(w, truncation=8, sample_count=500, seed=6)
        batch = sample_actions(spec)
        ballw = np.exp(2 * 0.5 * np.arange(1, 9, dtype=float) ** 0.5)
        assert np.all(batch.actions @ ballw <= 0.5)
        # rejection stays workable for this ensemble
        assert batch.acceptance_rate > 0.01

    def test_unconditioned_mean_of_first_action(self):
        # loose ball, so the exponential marginals are undistorted
        spec = MeasureSpec(SOB2, truncation=8, sample_count=100_000, seed=22, ball_radius=1e9)
        batch = sample_actions(spec)
        mean = batch.actions[:, 0].mean()
        assert abs(mean - 1.0) <= 3.0 / math.sqrt(len(batch))

    def test_weighted_actions_are_unit_exponentials(self):
        # Kolmogorov-Smirnov on m^(2s) I_m, per mode and pooled. The ball is
        # kept non-binding: conditioning on the default radius visibly skews
        # the low-mode marginals (D ~ 0.7 for mode 1), so the distributional
        # statement is about the raw draw.
        spec = MeasureSpec(SOB2, truncation=8, sample_count=100_000, seed=22, ball_radius=1e9)
        batch = sample_actions(spec)
        x = batch.actions * np.arange(1, 9, dtype=float) ** 4.0
        for m in (1, 4, 8):
            assert stats.kstest(x[:, m - 1], "expon").pvalue > 1e-3
        assert stats.kstest(x.ravel(), "expon").pvalue > 1e-3

    def test_determinism_and_prefix_property(self):
        small = sample_actions(MeasureSpec(SOB1, 4, 100, 5))
        again = sample_actions(MeasureSpec(SOB1, 4, 100, 5))
        big = sample_actions(MeasureSpec(SOB1, 4, 5000, 5))
        assert np.array_equal(small.actions, again.actions)
        assert np.array_equal(small.phases, again.phases)
        assert np.array_equal(small.actions, big.actions[:100])
        assert np.array_equal(small.phases, big.phases[:100])
        other = sample_actions(MeasureSpec(SOB1, 4, 100, 6))
        assert not np.array_equal(small.actions, other.actions)

    def test_state_reproduces_actions_and_scaling(self):
        spec = MeasureSpec(SOB1, truncation=5, sample_count=3, seed=9)
        batch = sample_actions(spec)
        z = batch.state(1, eps=0.25)
        for m in range(1, 6):
            assert z.action(m) == pytest.approx(0.0625 * batch.actions[1, m - 1], rel=1e-12)

    def test_hopeless_rejection_is_a_configuration_error(self):
        spec = MeasureSpec(SOB1, truncation=8, sample_count=100, seed=3, ball_radius=1e-9)
        with pytest.raises(ValueError, match="rejection rate"):
            sample_actions(spec)


class TestWilson:
    def test_known_values(self):
        lo, hi = wilson_interval(50, 100)
        assert lo == pytest.approx(0.40383, abs=1e-4)
        assert hi == pytest.approx(0.59617, abs=1e-4)

    def test_degenerate_counts_stay_in_range(self):
        lo, hi = wilson_interval(100, 100)
        assert 0.96 < lo < 1.0 and hi == 1.0
        lo, hi = wilson_interval(0, 100)
        assert lo == pytest.approx(0.0, abs=1e-12) and 0.0 < hi < 0.04

    def test_input_validation(self):
        with pytest.raises(ValueError):
            wilson_interval(1, 0)
        with pytest.raises(ValueError):
            wilson_interval(5, 3)

    @given(n=st.integers(1, 10_000), frac=st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_interval_contains_the_point_estimate(self, n, frac):
        k = round(frac * n)
        lo, hi = wilson_interval(k, n)
        p = k / n
        assert 0.0 <= lo <= p + 1e-15
        assert p - 1e-15 <= hi <= 1.0


class TestEstimateMeasure:
    def test_fraction_one_when_thresholds_vanish(self):
        params = NonResonanceParams(2, 4, 1e-9, WeightSpec("sobolev", s=3.0))
        spec = MeasureSpec(WeightSpec("sobolev", s=3.0), 4, 300, 17)
        est = estimate_measure(params, spec, 1e-8)
        assert est.fraction == 1.0
        assert est.ci_low <= est.fraction <= est.ci_high

    def test_scale_hypothesis_warning(self):
        params = NonResonanceParams(2, 4, 0.1, SOB1)
        spec = MeasureSpec(SOB1, 4, 50, 2)
        with pytest.warns(UserWarning, match="does not apply at this scale"):
            estimate_measure(params, spec, 1.0)
        cap = math.sqrt(2 * 0.1 / (3 * 4**10))
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            estimate_measure(params, spec, 0.5 * cap)

    def test_record_keys(self):
        params = NonResonanceParams(2, 2, 0.5, SOB1)
        spec = MeasureSpec(SOB1, 2, 100, 8)
        rec = estimate_measure(params, spec, 1e-4).record()
        assert set(rec) == {"gamma", "N", "r", "fraction", "ci_low", "ci_high", "samples", "seed"}
        assert rec["samples"] == 100 and rec["seed"] == 8 and rec["N"] == 2

    def test_determinism(self):
        params = NonResonanceParams(2, 2, 0.9, WeightSpec("sobolev", s=0.0))
        spec = MeasureSpec(WeightSpec("sobolev", s=0.0), 2, 2000, 21)
        a = estimate_measure(params, spec, 0.01)
        b = estimate_measure(params, spec, 0.01)
        assert a == b

    def test_complement_grows_linearly_at_small_cutoff(self):
        # At cutoff 2 only two divisors exist, so the resonant complement is
        # large enough to measure: its fraction should scale roughly linearly
        # with gamma while staying monotone. eps is small enough to keep every
        # threshold in its gamma-linear branch.
        w = WeightSpec("sobolev", s=0.0)
        spec = MeasureSpec(w, truncation=2, sample_count=40_000, seed=21)
        fractions = []
        for g in (0.225, 0.45, 0.9):
            params = NonResonanceParams(2, 2, g, w)
            est = estimate_measure(params, spec, 0.01)
            assert est.ci_low <= est.fraction <= est.ci_high
            fractions.append(est.fraction)
        comp = [1.0 - f for f in fractions]
        assert 0 < comp[0] <= comp[1] <= comp[2] < 0.01
        assert 2.0 <= comp[2] / comp[0] <= 8.0


class TestCorrectedDivisor:
    def test_integrable_vector_gives_zero(self):
        ctx = FreqContext({1: 0.2, 2: 0.1}, 4)
        assert corrected_divisor(((1, 2), (-1, 2)), ctx) == 0.0

    def test_difference_from_leading_ignores_indexed_actions(self):
        j = ((1, 2), (1, 3))  # momentum 5: modes 2, 3, 5 are excluded
        ctx = FreqContext({1: 0.3, 2: 0.11, 3: 0.07, 4: 0.05, 5: 0.02, 6: 0.013}, 6)
        base = corrected_divisor(j, ctx) - big_omega(j, ctx, 2)
        bumped = dict(ctx.actions)
        bumped.update({2: 1.7, 3: 0.9, 5: 2.2})
        ctx2 = FreqContext(bumped, 6)
        pert = corrected_divisor(j, ctx2) - big_omega(j, ctx2, 2)
        assert pert == pytest.approx(base, rel=1e-10)

    def test_difference_responds_to_other_actions(self):
        j = ((1, 2), (1, 3))
        ctx = FreqContext({1: 0.3, 2: 0.11, 3: 0.07, 4: 0.05, 5: 0.02, 6: 0.013}, 6)
        base = corrected_divisor(j, ctx) - big_omega(j, ctx, 2)
        bumped = dict(ctx.actions)
        bumped[4] = 0.5
        ctx2 = FreqContext(bumped, 6)
        assert corrected_divisor(j, ctx2) - big_omega(j, ctx2, 2) != pytest.approx(base, rel=1e-6)

    def test_matches_hand_sum(self):
        # j = ((1,2),): irreducible with momentum 2, so modes {2} are excluded
        ctx = FreqContext({1: 0.4, 2: 0.25, 3: 0.09}, 3)
        j = ((1, 2),)
        # combination 2(omega~(2) - omega~(2)) vanishes; leading term survives
        assert corrected_divisor(j, ctx) == pytest.approx(big_omega(j, ctx, 2), abs=0)
        j2 = ((1, 3), (1, 3))  # momentum 6 beyond the cutoff
        excl = {3}
        tails = {}
        for a in (3, 6):
            tails[a] = a / 16.0 * sum(
                ctx.I(d) ** 2 / (d * d - a * a) for d in (1, 2) if d not in excl
            )
        expected = big_omega(j2, ctx, 2) + 2 * (2 * tails[3] - tails[6])
        assert corrected_divisor(j2, ctx) == pytest.approx(expected, rel=1e-14)


class TestDivisorTail:
    def test_rejects_integrable_and_reducible_vectors(self):
        params = NonResonanceParams(2, 2, 0.1, SOB1)
        spec = MeasureSpec(SOB1, 4, 10, 1)
        with pytest.raises(ValueError, match="integrable"):
            divisor_tail(((1, 2), (-1, 2)), params, spec, 1.0)
        with pytest.raises(ValueError, match="reducible"):
            divisor_tail(((1, 4), (-1, 4), (1, 3), (1, 2)), params, spec, 1.0)
        with pytest.raises(ValueError, match="conjugate"):
            divisor_tail(((-1, 2),), params, spec, 1.0)

    def test_determinism_and_record(self):
        params = NonResonanceParams(2, 1, 0.2, SOB2)
        spec = MeasureSpec(SOB1, 5, 500, 20)
        a = divisor_tail(((1, 2), (1, 3)), params, spec, 1.0)
        b = divisor_tail(((1, 2), (1, 3)), params, spec, 1.0)
        assert a == b
        rec = a.record()
        assert rec["j"] == [[1, 2], [1, 3]]
        assert rec["samples"] == 500
        assert 0.0 <= rec["p_leading"] <= 1.0 and 0.0 <= rec["p_corrected"] <= 1.0

    def test_probability_monotone_and_linear_in_gamma(self):
        # Thresholds scale with gamma while the divisor distribution is fixed,
        # so the tail probability must grow monotonically, and in the small-
        # threshold regime like gamma itself (the sampled actions at mode 5
        # give the leading divisor a positive density at zero).
        j = ((1, 2), (1, 3))
        spec = MeasureSpec(SOB1, truncation=5, sample_count=60_000, seed=20)
        gammas = (0.05, 0.1, 0.2)
        ps = []
        for g in gammas:
            params = NonResonanceParams(2, 1, g, SOB2)
            est = divisor_tail(j, params, spec, 1.0)
            ps.append(est.p_leading)
            assert est.p_corrected >= est.p_leading  # larger threshold
        assert 0 < ps[0] <= ps[1] <= ps[2]
        slope, _ = through_origin_fit(gammas, ps)
        for g, p in zip(gammas, ps):
            assert 0.5 <= p / (slope * g) <= 2.0
        assert 1.5 <= ps[1] / ps[0] <= 2.7
        assert 1.5 <= ps[2] / ps[1] <= 2.7
