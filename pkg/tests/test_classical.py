"""Unit tests for the classical dissipative map and its dimension oracle."""

from __future__ import annotations

import numpy as np
import pytest

from bakerlab.classical import (
    AttractorSample,
    PhasePoint,
    attractor_dimension,
    attractor_histogram,
    baker_step,
    box_counting_dimension,
    iterate_to_attractor,
)


class TestPhasePoint:
    def test_reduces_mod_one(self):
        pt = PhasePoint(1.25, -0.25)
        assert pt.q == 0.25
        assert pt.p == 0.75

    def test_is_frozen(self):
        pt = PhasePoint(0.1, 0.2)
        with pytest.raises(AttributeError):
            pt.q = 0.5

    def test_stays_in_half_open_interval(self):
        pt = PhasePoint(1.0, 2.0)
        assert pt.q == 0.0 and pt.p == 0.0


class TestBakerStep:
    def test_left_branch_example(self):
        pt = baker_step(PhasePoint(0.25, 0.5), 0.8)
        assert pt.q == pytest.approx(0.5, abs=1e-15)
        assert pt.p == pytest.approx(0.2, abs=1e-15)

    def test_right_branch_closed_limit(self):
        pt = baker_step(PhasePoint(0.75, 0.5), 1.0)
        assert pt.q == pytest.approx(0.5, abs=1e-15)
        assert pt.p == pytest.approx(0.75, abs=1e-15)

    def test_origin_is_fixed_point(self):
        for eps in (0.4, 0.8, 1.0):
            pt = baker_step(PhasePoint(0.0, 0.0), eps)
            assert (pt.q, pt.p) == (0.0, 0.0)

    def test_midpoint_belongs_to_right_branch(self):
        pt = baker_step(PhasePoint(0.5, 0.0), 0.8)
        assert pt.q == 0.0
        assert pt.p == 0.5  # (eps*0 + 1)/2, not eps*0/2

    def test_momentum_contraction_is_exact(self):
        # two points sharing q map to images whose p-distance is exactly
        # (eps/2) times the original p-distance
        eps = 0.6
        a = baker_step(PhasePoint(0.3, 0.125), eps)
        b = baker_step(PhasePoint(0.3, 0.625), eps)
        assert abs(a.p - b.p) == pytest.approx(eps / 2 * 0.5, abs=1e-15)

    def test_jacobian_determinant_equals_eps(self):
        eps = 0.7
        h = 1e-7
        for q0, p0 in ((0.2, 0.3), (0.8, 0.6)):
            f = lambda q, p: baker_step(PhasePoint(q, p), eps)  # noqa: E731
            base = f(q0, p0)
            dq = ((f(q0 + h, p0).q - base.q) / h, (f(q0 + h, p0).p - base.p) / h)
            dp = ((f(q0, p0 + h).q - base.q) / h, (f(q0, p0 + h).p - base.p) / h)
            det = dq[0] * dp[1] - dq[1] * dp[0]
            assert det == pytest.approx(eps, rel=1e-5)

    def test_rejects_eps_out_of_range(self):
        with pytest.raises(ValueError):
            baker_step(PhasePoint(0.1, 0.1), 0.0)
        with pytest.raises(ValueError):
            baker_step(PhasePoint(0.1, 0.1), 1.2)


class TestAttractorDimension:
    def test_closed_form_values(self):
        assert attractor_dimension(0.8) == pytest.approx(1.756, abs=5e-4)
        assert attractor_dimension(0.6) == pytest.approx(1.576, abs=5e-4)
        assert attractor_dimension(0.4) == pytest.approx(1.431, abs=5e-4)

    def test_formula(self):
        eps = 0.55
        expected = 1.0 + np.log(2) / (np.log(2) - np.log(eps))
        assert attractor_dimension(eps) == pytest.approx(expected, rel=1e-15)

    def test_monotone_in_eps(self):
        eps = np.linspace(0.05, 0.95, 19)
        dims = [attractor_dimension(e) for e in eps]
        assert np.all(np.diff(dims) > 0)

    def test_rejects_unit_and_out_of_range(self):
        for bad in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                attractor_dimension(bad)


class TestIterateToAttractor:
    def test_shapes_and_ranges(self):
        sample = iterate_to_attractor(0.8, n_seeds=500, transient=20, keep=4, seed=3)
        assert isinstance(sample, AttractorSample)
        assert sample.points.shape == (2000, 2)
        assert np.all((sample.points >= 0) & (sample.points < 1))

    def test_deterministic_for_fixed_seed(self):
        a = iterate_to_attractor(0.6, n_seeds=200, transient=15, keep=3, seed=11)
        b = iterate_to_attractor(0.6, n_seeds=200, transient=15, keep=3, seed=11)
        assert np.array_equal(a.points, b.points)

    def test_different_seeds_differ(self):
        a = iterate_to_attractor(0.6, n_seeds=200, transient=15, keep=3, seed=1)
        b = iterate_to_attractor(0.6, n_seeds=200, transient=15, keep=3, seed=2)
        assert not np.array_equal(a.points, b.points)

    def test_long_orbits_stay_generic(self):
        # the raw doubling map drains one mantissa bit per step and pins
        # every double-precision orbit to q = 0 after ~53 iterations; the
        # sampler's noise reinjection must keep orbits alive indefinitely
        sample = iterate_to_attractor(0.8, n_seeds=64, transient=300, keep=2, seed=5)
        q = sample.points[:, 0]
        assert np.count_nonzero(q == 0.0) == 0
        assert np.unique(q).size > 100

    def test_closed_limit_fills_torus(self):
        sample = iterate_to_attractor(1.0, n_seeds=4000, transient=25, keep=5, seed=1)
        hist = attractor_histogram(sample, grid=8)
        assert np.all(hist > 0)  # every cell of an 8x8 partition occupied
        # cell counts consistent with a uniform distribution (Poisson noise)
        rel_std = hist.std() / hist.mean()
        assert rel_std < 3.0 / np.sqrt(hist.mean())

    def test_validation(self):
        with pytest.raises(ValueError):
            iterate_to_attractor(0.8, n_seeds=0)
        with pytest.raises(ValueError):
            iterate_to_attractor(0.8, keep=0)
        with pytest.raises(ValueError):
            iterate_to_attractor(1.0001)


class TestBoxCountingDimension:
    def test_uniform_plane_has_dimension_two(self):
        rng = np.random.default_rng(0)
        pts = rng.random((100_000, 2))
        est = box_counting_dimension(pts)
        assert est.dimension == pytest.approx(2.0, abs=0.05)

    def test_line_has_dimension_one(self):
        rng = np.random.default_rng(1)
        pts = np.column_stack([rng.random(100_000), np.zeros(100_000)])
        est = box_counting_dimension(pts)
        assert est.dimension == pytest.approx(1.0, abs=0.05)

    def test_attractor_sample_matches_formula(self):
        sample = iterate_to_attractor(0.6, n_seeds=10_000, transient=30, keep=10, seed=0)
        est = box_counting_dimension(sample)
        assert est.dimension == pytest.approx(1.576, abs=0.05)

    def test_counts_non_increasing_with_scale(self):
        sample = iterate_to_attractor(0.8, n_seeds=2000, transient=30, keep=5, seed=0)
        est = box_counting_dimension(sample)
        order = np.argsort(est.scales)  # ascending box side
        counts = np.asarray(est.counts)[order]
        assert np.all(np.diff(counts) <= 0)

    def test_r_squared_reported(self):
        sample = iterate_to_attractor(0.8, n_seeds=2000, transient=30, keep=5, seed=0)
        est = box_counting_dimension(sample)
        assert 0.9 < est.r_squared <= 1.0

    def test_validation(self):
        pts = np.random.default_rng(0).random((100, 2))
        with pytest.raises(ValueError):
            box_counting_dimension(pts)  # too few points
        big = np.random.default_rng(0).random((20_000, 2))
        with pytest.raises(ValueError):
            box_counting_dimension(big, scales=np.array([0.25, 0.125]))  # < 3 scales
        with pytest.raises(ValueError):
            # span below 1.5 decades
            box_counting_dimension(big, scales=np.array([0.2, 0.1, 0.05]))
        with pytest.raises(ValueError):
            box_counting_dimension(big, scales=np.array([0.8, 0.1, 0.01]))  # side > 0.5


class TestAttractorHistogram:
    def test_orientation_rows_are_momentum(self):
        pts = np.array([[0.1, 0.9]])  # q = 0.1, p = 0.9
        hist = attractor_histogram(pts, grid=10)
        assert hist[9, 1] == 1
        assert hist.sum() == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            attractor_histogram(np.zeros((4, 2)), grid=1)
