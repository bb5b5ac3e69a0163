"""Instance builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from vcount.domain import InputDomain
from vcount.network import Activation, Layer, Network, example_network
from vcount.property import LinearAtom, Postcondition, Relation, VerificationInstance, simple_post

UNIT_SQUARE = [(0.0, 1.0), (0.0, 1.0)]

# Output thresholds giving violation rates 0.1003, 0.4998 and 0.8997 on the
# 51 x 51 grid (checked by brute force in test_acceptance).
RATE_THRESHOLDS = {0.1: 0.481, 0.5: 0.958, 0.9: 1.419}


def example_instance(eps: float = 0.01, post: Postcondition | None = None) -> VerificationInstance:
    return VerificationInstance(
        example_network(), InputDomain.from_bounds(UNIT_SQUARE, eps), post or simple_post([1], 0, "LT")
    )


def constant_instance(value: float, eps: float = 0.1) -> VerificationInstance:
    net = Network((Layer(np.zeros((1, 2)), [value], Activation.IDENTITY),))
    return VerificationInstance(net, InputDomain.from_bounds(UNIT_SQUARE, eps), simple_post([1], 0, "LT"))


def rate_instance(target: float) -> VerificationInstance:
    """Two-input ReLU net at eps = 0.02 whose violation rate is close to ``target``."""
    c = RATE_THRESHOLDS[target]
    net = Network(
        (
            Layer([[1.0, 0.3], [-0.4, 1.0]], [0.0, 0.2], Activation.RELU),
            Layer([[1.0, 0.6]], [-c], Activation.IDENTITY),
        )
    )
    return VerificationInstance(net, InputDomain.from_bounds(UNIT_SQUARE, 0.02), simple_post([1], 0, "LT"))


def random_network(rng: np.random.Generator, in_dim: int, widths: list[int], out_dim: int) -> Network:
    layers = []
    prev = in_dim
    for w in widths:
        layers.append(Layer(rng.normal(size=(w, prev)), rng.normal(scale=0.5, size=w), Activation.RELU))
        prev = w
    layers.append(Layer(rng.normal(size=(out_dim, prev)), rng.normal(scale=0.5, size=out_dim), Activation.IDENTITY))
    return Network(tuple(layers))


def random_post(rng: np.random.Generator, net: Network, domain: InputDomain) -> Postcondition:
    """A random DNF whose atoms cut through the observed output range."""
    probe = net.forward(domain.sample_uniform(rng, 256))
    disjuncts = []
    for _ in range(int(rng.integers(1, 3))):
        atoms = []
        for _ in range(int(rng.integers(1, 3))):
            c = rng.normal(size=net.output_dim)
            values = probe @ c
            offset = -float(np.quantile(values, rng.uniform(0.1, 0.9)))
            atoms.append(LinearAtom(tuple(c), offset, list(Relation)[int(rng.integers(len(Relation)))]))
        disjuncts.append(tuple(atoms))
    return Postcondition(tuple(disjuncts))


def random_instance(
    rng: np.random.Generator,
    in_dims: tuple[int, ...] = (2, 3),
    max_width: int = 16,
    epsilons: tuple[float, ...] = (0.05, 0.1),
    max_points: int = 20_000,
) -> VerificationInstance:
    in_dim = int(rng.choice(in_dims))
    widths = [int(rng.integers(2, max_width + 1)) for _ in range(int(rng.integers(1, 3)))]
    net = random_network(rng, in_dim, widths, int(rng.integers(1, 3)))
    eps = float(rng.choice(epsilons))
    while True:
        bounds = []
        for _ in range(in_dim):
            lo = round(float(rng.uniform(-1, 0.5)), 2)
            hi = round(lo + float(rng.uniform(0.2, 1.5)), 2)
            bounds.append((lo, hi))
        domain = InputDomain.from_bounds(bounds, eps)
        if domain.total_points <= max_points:
            break
    return VerificationInstance(net, domain, random_post(rng, net, domain))
