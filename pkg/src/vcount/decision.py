"""Sound and complete decision procedure over a grid domain.

Branch and bound on the input box: interval bound propagation discharges
boxes where Q is certainly false (or certifies boxes where one disjunct is
certainly true), undecided boxes are bisected, and boxes with at most
``leaf_threshold`` grid points are settled by enumeration. The grid is finite,
so the procedure is complete.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .domain import InputDomain
from .errors import VerificationTimeout
from .network import Activation, Network
from .property import LinearAtom, Postcondition, VerificationInstance

DEFAULT_LEAF_THRESHOLD = 4096

# float64 round-off allowance per affine layer, relative to sum |w|*|x| + |b|.
_ROUNDING = 64 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class Limits:
    node_limit: int | None = None
    time_limit: float | None = None

    def tracker(self) -> Tracker:
        return Tracker(self)

    def to_dict(self) -> dict[str, Any]:
        return {"node_limit": self.node_limit, "time_limit": self.time_limit}


class Tracker:
    """Mutable node/time accounting shared by nested searches."""

    def __init__(self, limits: Limits | None = None) -> None:
        self.limits = limits or Limits()
        self.nodes = 0
        self.started = time.perf_counter()

    def tick(self, stats: dict[str, Any] | None = None) -> None:
        self.nodes += 1
        lim = self.limits
        if lim.node_limit is not None and self.nodes > lim.node_limit:
            raise VerificationTimeout(f"node limit {lim.node_limit} exceeded", stats=stats)
        if lim.time_limit is not None and time.perf_counter() - self.started > lim.time_limit:
            raise VerificationTimeout(f"time limit {lim.time_limit}s exceeded", stats=stats)


@dataclass(frozen=True)
class OutputBounds:
    """Interval bounds on the outputs.

    ``layer_inputs[i]`` bounds the input of layer ``i`` and ``pre_activation[i]``
    its affine output before the activation.
    """

    lower: np.ndarray
    upper: np.ndarray
    layer_inputs: tuple[tuple[np.ndarray, np.ndarray], ...]
    pre_activation: tuple[tuple[np.ndarray, np.ndarray], ...]


def _affine_bounds(w: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    wp = np.maximum(w, 0.0)
    wn = np.minimum(w, 0.0)
    low = wp @ lo + wn @ hi + b
    up = wp @ hi + wn @ lo + b
    slack = _ROUNDING * w.shape[1] * (np.abs(w) @ np.maximum(np.abs(lo), np.abs(hi)) + np.abs(b))
    return low - slack, up + slack


def interval_bounds(net: Network, box: InputDomain) -> OutputBounds:
    lo, hi = box.bounding_box()
    inputs, pre = [], []
    for layer in net.layers:
        inputs.append((lo, hi))
        lo, hi = _affine_bounds(layer.weights, layer.biases, lo, hi)
        pre.append((lo, hi))
        if layer.activation is Activation.RELU:
            lo, hi = np.maximum(lo, 0.0), np.maximum(hi, 0.0)
    return OutputBounds(lo, hi, tuple(inputs), tuple(pre))


def atom_range(atom: LinearAtom, net: Network, bounds: OutputBounds) -> tuple[float, float]:
    """Bounds on ``coeffs . y + offset`` over the analyzed box.

    When the last layer is affine the atom is folded into it, which keeps the
    correlation between outputs (important for argmax-style atoms).
    """
    c = np.asarray(atom.coeffs)
    last = net.layers[-1]
    if last.activation is Activation.IDENTITY:
        w = (c @ last.weights)[None, :]
        b = np.array([c @ last.biases + atom.offset])
        lo, hi = bounds.layer_inputs[-1]
    else:
        w, b = c[None, :], np.array([atom.offset])
        lo, hi = bounds.lower, bounds.upper
    low, up = _affine_bounds(w, b, lo, hi)
    return float(low[0]), float(up[0])


class BoxStatus(Enum):
    ALL = "all"  # every point of the box satisfies Q
    NONE = "none"  # no point of the box satisfies Q
    UNKNOWN = "unknown"


def classify(post: Postcondition, net: Network, bounds: OutputBounds) -> BoxStatus:
    ranges: dict[LinearAtom, tuple[float, float]] = {}

    def rng(atom: LinearAtom) -> tuple[float, float]:
        if atom not in ranges:
            ranges[atom] = atom_range(atom, net, bounds)
        return ranges[atom]

    if any(all(a.holds_on_range(*rng(a)) for a in conj) for conj in post.disjuncts):
        return BoxStatus.ALL
    if all(any(a.fails_on_range(*rng(a)) for a in conj) for conj in post.disjuncts):
        return BoxStatus.NONE
    return BoxStatus.UNKNOWN


class VerdictKind(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


@dataclass
class Verdict:
    kind: VerdictKind
    witness: tuple[float, ...] | None = None
    witness_output: tuple[float, ...] | None = None
    stats: dict[str, int] = field(default_factory=lambda: {"boxes_explored": 0, "leaf_enumerations": 0})

    @property
    def sat(self) -> bool:
        return self.kind is VerdictKind.SAT

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.kind.value,
            "witness": None if self.witness is None else list(self.witness),
            "witness_output": None if self.witness_output is None else list(self.witness_output),
            "stats": dict(self.stats),
        }


def _sat_at(inst: VerificationInstance, point: np.ndarray, stats: dict[str, int]) -> Verdict | None:
    y = inst.network.forward(point)
    if inst.post.holds(y):
        return Verdict(VerdictKind.SAT, tuple(map(float, point)), tuple(map(float, y)), stats)
    return None


def decide(
    inst: VerificationInstance,
    limits: Limits | None = None,
    leaf_threshold: int = DEFAULT_LEAF_THRESHOLD,
    tracker: Tracker | None = None,
    probe: bool = True,
) -> Verdict:
    """SAT iff some grid point of ``inst.domain`` maps to an output satisfying Q.

    Boxes are explored depth first with the lower half first, so the search
    order (and hence the witness) is deterministic. Raises
    :class:`VerificationTimeout` when the limits are exhausted.
    """
    tracker = tracker if tracker is not None else Tracker(limits)
    stats = {"boxes_explored": 0, "leaf_enumerations": 0}
    net, post = inst.network, inst.post
    stack = [inst.domain]
    while stack:
        box = stack.pop()
        tracker.tick(stats)
        stats["boxes_explored"] += 1
        if box.total_points <= leaf_threshold:
            stats["leaf_enumerations"] += 1
            points = box.grid_points()
            hits = np.flatnonzero(post.holds(net.forward(points)))
            if hits.size:
                return _sat_at(inst, points[hits[0]], stats)
            continue
        status = classify(post, net, interval_bounds(net, box))
        if status is BoxStatus.NONE:
            continue
        if status is BoxStatus.ALL:
            verdict = _sat_at(inst, box.first_point(), stats)
            if verdict is None:  # pragma: no cover - bounds are padded for round-off
                raise AssertionError("interval bounds certified a point that fails Q")
            return verdict
        if probe:
            verdict = _sat_at(inst, box.center_point(), stats)
            if verdict is not None:
                return verdict
        left, right = box.split_equal(box.widest_axis())
        stack.append(right)
        stack.append(left)
    return Verdict(VerdictKind.UNSAT, stats=stats)

