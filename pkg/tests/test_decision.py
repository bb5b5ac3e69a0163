import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcount.decision import BoxStatus, Limits, classify, decide, interval_bounds
from vcount.domain import InputDomain
from vcount.errors import VerificationTimeout
from vcount.network import Activation, Layer, Network, example_network
from vcount.oracle import exists_brute
from vcount.property import simple_post
from support import UNIT_SQUARE, example_instance, random_instance, random_network


class TestIntervalBounds:
    def test_example_hand_propagation(self):
        b = interval_bounds(example_network(), InputDomain.from_bounds(UNIT_SQUARE, 0.01))
        lo, hi = b.pre_activation[0]
        np.testing.assert_allclose(lo, [-1, -1], atol=1e-12)
        np.testing.assert_allclose(hi, [5, 3], atol=1e-12)
        np.testing.assert_allclose(b.lower, [-5], atol=1e-12)
        np.testing.assert_allclose(b.upper, [9], atol=1e-12)
        assert b.lower[0] <= -5 and b.upper[0] >= 9

    def test_degenerate_box(self):
        box = InputDomain.from_bounds([(0.3, 0.3), (0.7, 0.7)], 0.1)
        b = interval_bounds(example_network(), box)
        y = example_network().forward([0.3, 0.7])
        np.testing.assert_allclose(b.lower, y, atol=1e-12)
        np.testing.assert_allclose(b.upper, y, atol=1e-12)

    def test_identity_layer(self):
        net = Network((Layer(np.eye(2), np.zeros(2), Activation.IDENTITY),))
        b = interval_bounds(net, InputDomain.from_bounds([(-1.0, 2.0), (0.5, 1.5)], 0.5))
        np.testing.assert_allclose(b.lower, [-1.0, 0.5])
        np.testing.assert_allclose(b.upper, [2.0, 1.5])

    def test_containment(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            net = random_network(rng, 3, [16, 8], 2)
            lo = rng.uniform(-1, 0, size=3)
            box = InputDomain.from_bounds(list(zip(lo, lo + rng.uniform(0.1, 1, size=3))), 0.01)
            b = interval_bounds(net, box)
            ys = net.forward(box.sample_uniform(rng, 5000))
            assert (ys >= b.lower).all() and (ys <= b.upper).all()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_shrinking_never_widens(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng, 2, [8], 2)
        box = InputDomain.from_bounds([(-1.0, 1.0), (-0.5, 0.5)], 0.05)
        outer = interval_bounds(net, box)
        for axis in (0, 1):
            for half in box.split_equal(axis):
                inner = interval_bounds(net, half)
                assert (inner.lower >= outer.lower - 1e-12).all()
                assert (inner.upper <= outer.upper + 1e-12).all()


class TestClassify:
    def test_example_unknown_on_root(self):
        net = example_network()
        b = interval_bounds(net, InputDomain.from_bounds(UNIT_SQUARE, 0.01))
        assert classify(simple_post([1], 0, "LT"), net, b) is BoxStatus.UNKNOWN
        assert classify(simple_post([1], 10, "LT"), net, b) is BoxStatus.NONE
        assert classify(simple_post([1], -10, "LT"), net, b) is BoxStatus.ALL


class TestDecide:
    def test_example_sat(self):
        inst = example_instance()
        v = decide(inst)
        assert v.sat
        assert inst.post.holds(inst.network.forward(v.witness))

    def test_example_unsat_below_minus_ten(self):
        inst = example_instance(post=simple_post([1], 10, "LT"))
        assert not decide(inst).sat
        assert not exists_brute(inst)

    @pytest.mark.parametrize("point", [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.4, 0.6)])
    def test_single_point(self, point):
        box = InputDomain.from_bounds([(p, p) for p in point], 0.1)
        inst = example_instance().with_domain(box)
        expected = inst.post.holds(inst.network.forward(point))
        assert decide(inst).sat == expected

    def test_timeout_is_not_unsat(self):
        inst = example_instance(eps=0.001, post=simple_post([1], 5.0, "LT"))
        with pytest.raises(VerificationTimeout):
            decide(inst, limits=Limits(node_limit=1), leaf_threshold=1, probe=False)

    def test_deterministic_witness(self):
        inst = example_instance(eps=0.001)
        assert decide(inst).witness == decide(inst).witness

    def test_agrees_with_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            inst = random_instance(rng, max_points=10_000)
            v = decide(inst, leaf_threshold=int(rng.choice([16, 256, 4096])))
            assert v.sat == exists_brute(inst)
            if v.sat:
                assert inst.domain.contains(v.witness)
                assert inst.post.holds(inst.network.forward(v.witness))
