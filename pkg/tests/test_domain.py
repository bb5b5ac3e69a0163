from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcount.domain import GridAxis, InputDomain
from vcount.errors import InputError, NotSplittableError


def unit(eps, dims=1):
    return InputDomain.from_bounds([(0.0, 1.0)] * dims, eps)


@st.composite
def small_domains(draw):
    dims = draw(st.integers(1, 3))
    axes = []
    for _ in range(dims):
        lo = draw(st.integers(-5, 5)) / 4
        n = draw(st.integers(0, 9))
        step = draw(st.sampled_from([0.1, 0.25, 0.5, 1.0]))
        axes.append(GridAxis.from_bounds(lo, lo + n * step, step))
    return InputDomain(tuple(axes))


class TestCounting:
    def test_unit_square_hundredths(self):
        assert unit(0.01, 2).total_points == 10201

    def test_single_point(self):
        assert InputDomain.from_bounds([(0.0, 0.0)], 1.0).total_points == 1

    def test_five_axes(self):
        assert unit(0.5, 5).total_points == 243

    def test_exceeds_64_bits(self):
        d = unit(0.0001, 5)
        assert d.total_points == 10001**5
        assert d.total_points > 2**63

    def test_bad_step(self):
        with pytest.raises(InputError):
            unit(0.0)


class TestSplitEqual:
    def test_hundred_and_one(self):
        left, right = unit(0.01).split_equal(0)
        assert (left.axes[0].index_lo, left.axes[0].index_hi) == (0, 50)
        assert (right.axes[0].index_lo, right.axes[0].index_hi) == (51, 100)

    def test_smallest(self):
        left, right = unit(1.0).split_equal(0)
        assert left.total_points == right.total_points == 1

    def test_single_point_refused(self):
        with pytest.raises(NotSplittableError):
            InputDomain.from_bounds([(0.0, 0.0)], 1.0).split_equal(0)


class TestSplitAtValue:
    def test_paper_interval(self):
        res = unit(0.01).split_at_value(0, 0.33)
        assert res.left.total_points == 34 and res.right.total_points == 67
        assert res.left.axes[0].coord_hi == pytest.approx(0.33)
        assert res.right.axes[0].coord_lo == pytest.approx(0.34)
        assert (res.alpha_left, res.alpha_right) == (Fraction(34, 101), Fraction(67, 101))

    def test_clamped_at_lo(self):
        res = unit(0.01).split_at_value(0, 0.0)
        assert res.left.total_points == 1

    def test_clamped_at_hi(self):
        res = unit(0.01).split_at_value(0, 1.0)
        assert res.right.total_points == 1

    def test_three_point_grid(self):
        res = unit(0.5).split_at_value(0, 0.5)
        assert (res.left.total_points, res.right.total_points) == (2, 1)

    def test_tie_goes_to_lo(self):
        res = unit(1.0, 1).split_at_value(0, 0.5)
        assert res.left.total_points == 1

    def test_single_point_refused(self):
        with pytest.raises(NotSplittableError):
            InputDomain.from_bounds([(0.0, 0.0)], 1.0).split_at_value(0, 0.0)


class TestSampling:
    def test_zero_draws(self):
        assert unit(0.1, 2).sample_uniform(np.random.default_rng(0), 0).shape == (0, 2)

    def test_single_point_domain(self):
        d = InputDomain.from_bounds([(0.3, 0.3), (2.0, 2.0)], 0.1)
        pts = d.sample_uniform(np.random.default_rng(0), 5)
        assert pts.tolist() == [[0.3, 2.0]] * 5

    def test_uniform_mean(self):
        d = unit(0.01, 2)
        idx = d.sample_indices(np.random.default_rng(7), 10**6)
        # sd of the index mean is 29.2 / 1000
        np.testing.assert_allclose(idx.mean(axis=0), [50, 50], atol=0.5)

    def test_deterministic(self):
        d = unit(0.01, 3)
        a = d.sample_uniform(np.random.default_rng(11), 100)
        b = d.sample_uniform(np.random.default_rng(11), 100)
        assert np.array_equal(a, b)


class TestEnumeration:
    def test_one_axis(self):
        assert list(unit(0.5).enumerate_points()) == [(0.0,), (0.5,), (1.0,)]

    def test_two_axes(self):
        assert list(unit(1.0, 2).enumerate_points()) == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]

    @settings(max_examples=50, deadline=None)
    @given(small_domains())
    def test_count_matches_total(self, d):
        pts = list(d.enumerate_points())
        assert len(pts) == d.total_points == len(set(pts))

    @settings(max_examples=50, deadline=None)
    @given(small_domains())
    def test_coordinate_fidelity(self, d):
        pts = np.array(list(d.enumerate_points()))
        for j, ax in enumerate(d.axes):
            expected = {ax.lo + k * ax.step for k in range(ax.index_lo, ax.index_hi + 1)}
            assert set(pts[:, j].tolist()) == expected

    @settings(max_examples=50, deadline=None)
    @given(small_domains(), st.data())
    def test_partition(self, d, data):
        axes = d.splittable_axes()
        if not axes:
            return
        axis = data.draw(st.sampled_from(axes))
        ax = d.axes[axis]
        v = data.draw(st.floats(ax.coord_lo, ax.coord_hi))
        parent = set(d.enumerate_points())
        for left, right in (d.split_equal(axis), (lambda r: (r.left, r.right))(d.split_at_value(axis, v))):
            lp, rp = set(left.enumerate_points()), set(right.enumerate_points())
            assert lp.isdisjoint(rp) and lp | rp == parent
            assert left.total_points + right.total_points == d.total_points
        res = d.split_at_value(axis, v)
        assert res.alpha_left + res.alpha_right == 1


class TestContains:
    def test_grid_points_are_members(self):
        d = InputDomain.from_bounds([(-0.3, 0.4), (0.0, 1.0)], 0.1)
        assert all(d.contains(p) for p in d.enumerate_points())

    def test_off_grid_and_outside(self):
        d = unit(0.1, 2)
        assert not d.contains((0.05, 0.0))
        assert not d.contains((1.1, 0.0))
        assert not d.contains((0.0,))
