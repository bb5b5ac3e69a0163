"""Brute-force reference answers by full grid enumeration."""

from __future__ import annotations

import time

import numpy as np

from .errors import BudgetRefusal
from .exact import CountReport
from .property import VerificationInstance

DEFAULT_POINT_CAP = 10**7


def _check_cap(inst: VerificationInstance, cap: int) -> int:
    total = inst.domain.total_points
    if total > cap:
        raise BudgetRefusal(
            f"domain has {total} grid points, brute force is capped at {cap}", total=total, cap=cap
        )
    return total


def count_brute(inst: VerificationInstance, cap: int = DEFAULT_POINT_CAP) -> CountReport:
    started = time.perf_counter()
    total = _check_cap(inst, cap)
    violations = 0
    for block in inst.domain.iter_blocks():
        violations += int(np.count_nonzero(inst.violates(block)))
    return CountReport(violations, total, leaves_enumerated=1, elapsed=time.perf_counter() - started)


def exists_brute(inst: VerificationInstance, cap: int = DEFAULT_POINT_CAP) -> bool:
    _check_cap(inst, cap)
    return any(np.any(inst.violates(block)) for block in inst.domain.iter_blocks())
