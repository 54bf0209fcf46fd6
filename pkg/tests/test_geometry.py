import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointgen.geometry import (
    REWARD_MAX,
    Box,
    DegenerateGeometry,
    GridShapeError,
    HalfCylinderRange,
    PointingFrame,
    RewardWeights,
    SamplerExhausted,
    TargetPoint,
    alignment_measure,
    combined_reward,
    cylinder_params,
    fit_half_cylinder,
    perturb_target,
    sample_distractors,
    sample_test_targets,
    spherical_grid,
    target_limits,
)

E = np.exp(1.0)


class TestAlignmentMeasure:
    def test_collinear_continuation(self):
        m = alignment_measure(PointingFrame.of([0, 0, 0], [1, 0, 0], [2, 0, 0]))
        assert m.angle == 0.0
        assert m.theta_hat == 1.0
        assert m.reward == pytest.approx(0.632121, abs=1e-6)
        assert m.reward == pytest.approx((E - 1) / E, abs=1e-12)

    def test_right_angle(self):
        m = alignment_measure(PointingFrame.of([0, 0, 0], [1, 0, 0], [1, 1, 0]))
        assert m.angle == pytest.approx(np.pi / 2, abs=1e-12)
        assert m.theta_hat == pytest.approx(0.5, abs=1e-12)
        # direct evaluation: (e^0.5 - 1)/e
        assert m.reward == pytest.approx((np.exp(0.5) - 1) / E, abs=1e-12)
        assert m.reward == pytest.approx(0.238651, abs=1e-6)

    def test_anti_aligned_zero(self):
        m = alignment_measure(PointingFrame.of([0, 0, 0], [1, 0, 0], [0, 0, 0]))
        assert m.angle == pytest.approx(np.pi, abs=1e-12)
        assert m.theta_hat == pytest.approx(0.0, abs=1e-12)
        assert m.reward == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_vector(self):
        with pytest.raises(DegenerateGeometry):
            alignment_measure(PointingFrame.of([0, 0, 0], [0, 0, 0], [1, 0, 0]))
        with pytest.raises(DegenerateGeometry):
            alignment_measure(PointingFrame.of([0, 0, 0], [1, 0, 0], [1, 0, 0]))

    def test_monotone_in_angle(self, rng):
        # strictly larger angle -> strictly smaller reward
        angles = np.sort(rng.uniform(0, np.pi, size=200))
        rewards = [(np.exp(1 - a / np.pi) - 1) / E for a in angles]
        for i in range(len(angles) - 1):
            if angles[i] < angles[i + 1]:
                assert rewards[i] > rewards[i + 1]

    @given(scale_eh=st.floats(0.01, 100.0), scale_ht=st.floats(0.01, 100.0),
           seed=st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, scale_eh, scale_ht, seed):
        r = np.random.default_rng(seed)
        e = r.normal(size=3)
        h = e + r.normal(size=3)
        t = h + r.normal(size=3)
        base = alignment_measure(PointingFrame.of(e, h, t))
        scaled = alignment_measure(
            PointingFrame.of(h - scale_eh * (h - e), h, h + scale_ht * (t - h)))
        assert scaled.angle == pytest.approx(base.angle, abs=1e-9)
        assert scaled.theta_hat == pytest.approx(base.theta_hat, abs=1e-9)
        assert scaled.reward == pytest.approx(base.reward, abs=1e-9)

    def test_reward_range_and_max(self, rng):
        for _ in range(1000):
            e = rng.normal(size=3)
            h = e + rng.normal(size=3)
            t = h + rng.normal(size=3)
            m = alignment_measure(PointingFrame.of(e, h, t))
            assert 0.0 <= m.reward <= REWARD_MAX + 1e-15
            if m.reward == pytest.approx(REWARD_MAX, abs=1e-15):
                assert m.angle == pytest.approx(0.0, abs=1e-7)


class TestCombinedReward:
    def test_weight_identity(self):
        assert combined_reward(1.0, 0.0) == pytest.approx(0.5)

    def test_equal_inputs_fixed_point(self):
        for x in (0.0, 0.3, 0.99):
            assert combined_reward(x, x) == pytest.approx(x)

    def test_arithmetic(self):
        assert combined_reward(0.4, REWARD_MAX) == pytest.approx(0.516061, abs=1e-6)
        assert combined_reward(0.4, REWARD_MAX) == pytest.approx(
            0.2 + 0.5 * REWARD_MAX, abs=1e-12)

    def test_linear_and_symmetric(self, rng):
        for _ in range(100):
            a, b = rng.uniform(0, 1, size=2)
            assert combined_reward(a, b) == pytest.approx(combined_reward(b, a))
        w = RewardWeights(0.3, 0.7)
        assert combined_reward(2.0, 0.0, w) == pytest.approx(2 * combined_reward(1.0, 0.0, w))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            combined_reward(np.nan, 0.0)


class TestPerturbTarget:
    def test_box_bounds_and_mean(self):
        rng = np.random.default_rng(7)
        gt = TargetPoint(0.3, 0.5, 0.2)
        draws = np.array([perturb_target(gt, rng).xyz for _ in range(100_000)])
        assert np.all(np.abs(draws - gt.xyz) <= 0.10 + 1e-12)
        assert np.all(np.abs(draws.mean(axis=0) - gt.xyz) < 0.002)

    def test_offset_reproduction(self):
        # the draw is exactly gt plus a uniform offset in [-0.1, 0.1]^3
        gt = TargetPoint(1.0, 2.0, 3.0)
        drawn = perturb_target(gt, np.random.default_rng(21))
        offset = np.random.default_rng(21).uniform(-0.10, 0.10, size=3)
        assert np.allclose(drawn.xyz, gt.xyz + offset, atol=1e-15)

    def test_seeded_determinism(self):
        gt = TargetPoint(0, 0, 0)
        a = [perturb_target(gt, np.random.default_rng(3)) for _ in range(1)]
        b = [perturb_target(gt, np.random.default_rng(3)) for _ in range(1)]
        assert a == b


class TestHalfCylinder:
    def test_fit_known_ranges(self):
        anchor = (0, 0, 0)
        targets = []
        for h in (0.5, 1.5):
            for phi in (-np.pi / 4, np.pi / 4):
                targets.append(np.array(
                    [np.sin(phi), np.cos(phi), h]))
        rng_ = fit_half_cylinder(targets, anchor)
        assert rng_.height == pytest.approx((0.5, 1.5))
        assert rng_.arc[0] == pytest.approx(-np.pi / 4)
        assert rng_.arc[1] == pytest.approx(np.pi / 4)
        assert rng_.radius == pytest.approx((1.0, 1.0))

    def test_coincident_targets_rejected(self):
        with pytest.raises(DegenerateGeometry):
            fit_half_cylinder([(1, 1, 1), (1, 1, 1)])

    def test_fit_contains_all_inputs(self, rng):
        targets = rng.uniform(-1, 1, size=(50, 3)) + [0, 1.5, 0]
        rng_ = fit_half_cylinder(targets)
        assert all(rng_.contains(t) for t in targets)

    def test_sampling_closure(self):
        rng_ = HalfCylinderRange((0.1, 0.9), (-1.0, 1.0), (0.4, 0.8))
        pts = sample_test_targets(rng_, n=100, seed=5)
        assert len(pts) == 100
        assert all(rng_.contains(p) for p in pts)
        refit = fit_half_cylinder([p.xyz for p in pts], rng_.anchor)
        assert refit.height[0] >= rng_.height[0] - 1e-9
        assert refit.radius[1] <= rng_.radius[1] + 1e-9

    def test_sampling_determinism(self):
        rng_ = HalfCylinderRange((0.1, 0.9), (-1.0, 1.0), (0.4, 0.8))
        assert sample_test_targets(rng_, 100, seed=9) == sample_test_targets(rng_, 100, seed=9)

    def test_marginal_uniformity(self):
        rng_ = HalfCylinderRange((0.0, 1.0), (-1.0, 1.0), (0.5, 1.0))
        pts = sample_test_targets(rng_, n=100_000, seed=11)
        params = np.array([cylinder_params(p, rng_.anchor) for p in pts])
        # chi-square against uniform in 20 bins per parameter
        for d, (lo, hi) in enumerate((rng_.height, rng_.arc, rng_.radius)):
            hist, _ = np.histogram(params[:, d], bins=20, range=(lo, hi))
            expected = len(pts) / 20
            chi2 = np.sum((hist - expected) ** 2 / expected)
            assert chi2 < 50  # 19 dof, p ~ 1e-4 cutoff


class TestDistractors:
    RANGE = HalfCylinderRange((0.0, 1.0), (-1.2, 1.2), (0.4, 0.9))

    def test_distance_band(self):
        rng = np.random.default_rng(0)
        target = sample_test_targets(self.RANGE, 1, seed=1)[0]
        for _ in range(50):
            d1, d2 = sample_distractors(target, self.RANGE, rng)
            for d in (d1, d2):
                dist = np.linalg.norm(d.xyz - target.xyz)
                assert 0.20 <= dist <= 0.40

    def test_infeasible_geometry(self):
        tiny = HalfCylinderRange((0.0, 0.01), (0.0, 0.01), (0.5, 0.51))
        far = TargetPoint(5.0, 5.0, 5.0)
        with pytest.raises(SamplerExhausted) as exc:
            sample_distractors(far, tiny, np.random.default_rng(0),
                               max_attempts=200)
        assert exc.value.attempts == 200

    def test_accepted_distance_distribution(self):
        # distances follow the rejection law: the unconditioned distance
        # distribution truncated to [0.2, 0.4]
        rng = np.random.default_rng(2)
        target = sample_test_targets(self.RANGE, 1, seed=3)[0]
        accepted = []
        for _ in range(5000):
            d1, d2 = sample_distractors(target, self.RANGE, rng)
            accepted += [np.linalg.norm(d.xyz - target.xyz) for d in (d1, d2)]
        pool = sample_test_targets(self.RANGE, 100_000, seed=4)
        dists = np.array([np.linalg.norm(p.xyz - target.xyz) for p in pool])
        trunc = dists[(dists >= 0.2) & (dists <= 0.4)]
        # compare deciles of the two samples
        qs = np.linspace(0.1, 0.9, 9)
        da = np.quantile(accepted, qs)
        dt = np.quantile(trunc, qs)
        assert np.all(np.abs(da - dt) < 0.01)


class TestSphericalGrid:
    LIMITS = Box(lo=np.array([-1.0, 0.0, -0.5]), hi=np.array([1.0, 2.0, 1.5]))

    def test_cardinality(self):
        assert len(spherical_grid(self.LIMITS, 1000)) == 1000

    def test_inside_box(self):
        for p in spherical_grid(self.LIMITS, 1000):
            assert self.LIMITS.contains(p)

    def test_deterministic(self):
        assert spherical_grid(self.LIMITS, 1000) == spherical_grid(self.LIMITS, 1000)

    def test_bad_cardinality(self):
        with pytest.raises(GridShapeError) as exc:
            spherical_grid(self.LIMITS, 900)
        assert exc.value.nearest == 1000

    def test_limits_from_targets(self, rng):
        targets = rng.uniform(-2, 2, size=(40, 3))
        box = target_limits(targets)
        assert np.allclose(box.lo, targets.min(axis=0))
        assert np.allclose(box.hi, targets.max(axis=0))
