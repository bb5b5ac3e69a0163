"""Exact violation counting by recursive bisection.

A box whose Q-query is UNSAT contributes nothing; a box whose not-Q query is
UNSAT contributes all of its points; anything else is split in two equal
halves. Boxes small enough for enumeration are counted point by point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .decision import (
    DEFAULT_LEAF_THRESHOLD,
    BoxStatus,
    Limits,
    Tracker,
    classify,
    decide,
    interval_bounds,
)
from .errors import VerificationTimeout
from .property import VerificationInstance


@dataclass
class CountReport:
    violations: int
    total: int
    leaves_full: int = 0
    leaves_empty: int = 0
    leaves_enumerated: int = 0
    boxes: int = 0
    elapsed: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.violations <= self.total:
            raise ValueError(f"violations {self.violations} outside [0, {self.total}]")

    @property
    def violation_rate(self) -> Fraction:
        return Fraction(self.violations, self.total)

    def to_dict(self) -> dict[str, Any]:
        vr = self.violation_rate
        return {
            "violations": self.violations,
            "total": self.total,
            "violation_rate": str(vr),
            "violation_rate_decimal": float(vr),
            "leaves_full": self.leaves_full,
            "leaves_empty": self.leaves_empty,
            "leaves_enumerated": self.leaves_enumerated,
            "boxes": self.boxes,
            "elapsed": self.elapsed,
        }


def count_exact(
    inst: VerificationInstance,
    limits: Limits | None = None,
    leaf_threshold: int = DEFAULT_LEAF_THRESHOLD,
    tracker: Tracker | None = None,
) -> CountReport:
    """Exact ``|{x in P : Q(N(x))}|``.

    Raises :class:`VerificationTimeout` (with partial statistics) when the
    limits run out. The limits cover the nested decision queries too.
    """
    started = time.perf_counter()
    tracker = tracker if tracker is not None else Tracker(limits)
    neg = inst.negated()
    net, post = inst.network, inst.post
    total = inst.domain.total_points
    rep = CountReport(0, total)
    stack = [inst.domain]
    try:
        while stack:
            box = stack.pop()
            tracker.tick()
            rep.boxes += 1
            n = box.total_points
            if n <= leaf_threshold:
                rep.violations += int(np.count_nonzero(inst.violates(box.grid_points())))
                rep.leaves_enumerated += 1
                continue
            # Bounds shared by the Q and not-Q queries at this box.
            status = classify(post, net, interval_bounds(net, box))
            if status is BoxStatus.NONE:
                rep.leaves_empty += 1
                continue
            if status is BoxStatus.ALL:
                rep.violations += n
                rep.leaves_full += 1
                continue
            sub = inst.with_domain(box)
            if not decide(sub, leaf_threshold=leaf_threshold, tracker=tracker).sat:
                rep.leaves_empty += 1
                continue
            if not decide(neg.with_domain(box), leaf_threshold=leaf_threshold, tracker=tracker).sat:
                rep.violations += n
                rep.leaves_full += 1
                continue
            left, right = box.split_equal(box.widest_axis())
            stack.append(right)
            stack.append(left)
    except VerificationTimeout as exc:
        exc.stats.update(
            partial_violations=rep.violations,
            boxes=rep.boxes,
            leaves_enumerated=rep.leaves_enumerated,
            pending_boxes=len(stack) + 1,
        )
        raise
    rep.elapsed = time.perf_counter() - started
    return rep
