"""Randomized lower/upper bounds on the violation rate (CountingProVe).

Each iteration repeatedly halves the domain around the median of sampled
violation points, keeps one side chosen by a fair coin, and counts the
surviving leaf exactly. Rescaling the leaf count by ``2**s`` gives an unbiased
estimate of the violation rate; the extra ``2**-beta`` factor makes a single
iteration overshoot the true rate with probability below ``2**-beta`` (Markov),
so the minimum over ``t`` iterations is a lower bound with confidence
``1 - 2**(-beta * t)``. Running the same procedure on not-Q bounds the safe rate
from below, i.e. the violation rate from above.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .decision import DEFAULT_LEAF_THRESHOLD, Limits
from .domain import InputDomain, SplitResult
from .errors import InputError, VerificationTimeout
from .exact import count_exact
from .property import VerificationInstance

AUTO = "auto"
DEFAULT_EXACT_LIMITS = Limits(node_limit=10_000)

# Seed-sequence stream ids: the safe-rate run must not reuse the violation-rate draws.
_VR_STREAM = 0
_SR_STREAM = 1

Splitter = Callable[[InputDomain, int, np.ndarray], SplitResult]


def auto_prelim_splits(total_points: int) -> int:
    """``floor(log2 N) - 1`` preliminary splits, never negative."""
    return max(total_points.bit_length() - 1 - 1, 0)


def confidence(beta: float, t: int) -> float:
    return 1.0 - 2.0 ** (-beta * t)


@dataclass(frozen=True)
class ApproxConfig:
    beta: float = 0.02
    t: int = 350
    m: int = 1000
    sample_budget: int | None = None
    prelim_splits: int | str = AUTO
    exact_limits: Limits = DEFAULT_EXACT_LIMITS
    leaf_threshold: int = DEFAULT_LEAF_THRESHOLD
    seed: int = 0
    splitter: str = "median"
    threads: int = 1

    def __post_init__(self) -> None:
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise InputError(f"beta must be positive, got {self.beta}")
        if self.t < 1:
            raise InputError(f"t must be at least 1, got {self.t}")
        if self.m < 1:
            raise InputError(f"m must be at least 1, got {self.m}")
        if self.sample_budget is not None and self.sample_budget < 0:
            raise InputError("sample_budget must be nonnegative")
        if self.prelim_splits != AUTO and (not isinstance(self.prelim_splits, int) or self.prelim_splits < 0):
            raise InputError(f"prelim_splits must be 'auto' or a nonnegative integer, got {self.prelim_splits!r}")
        if self.threads < 1:
            raise InputError("threads must be at least 1")
        make_splitter(self.splitter)

    @property
    def draws(self) -> int:
        return 10 * self.m if self.sample_budget is None else self.sample_budget

    @property
    def confidence(self) -> float:
        return confidence(self.beta, self.t)

    def resolved_prelim_splits(self, total_points: int) -> int:
        if self.prelim_splits == AUTO:
            return auto_prelim_splits(total_points)
        return int(self.prelim_splits)

    def to_dict(self, total_points: int | None = None) -> dict[str, Any]:
        d = asdict(self)
        del d["threads"]  # affects speed only; reported separately
        d["exact_limits"] = self.exact_limits.to_dict()
        d["sample_budget"] = self.draws
        if total_points is not None:
            d["prelim_splits_resolved"] = self.resolved_prelim_splits(total_points)
        return d


# -- splitting heuristics -------------------------------------------------


def sample_violations(
    inst: VerificationInstance,
    box: InputDomain,
    m: int,
    budget: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Up to ``m`` violation points found among at most ``budget`` uniform draws from ``box``."""
    kept: list[np.ndarray] = []
    n_kept = drawn = 0
    while n_kept < m and drawn < budget:
        n = min(m, budget - drawn)
        pts = box.sample_uniform(rng, n)
        drawn += n
        hits = pts[inst.violates(pts)]
        kept.append(hits)
        n_kept += len(hits)
    if not kept:
        return np.empty((0, box.dim))
    return np.concatenate(kept)[:m]


def lower_median(values: np.ndarray) -> float:
    """Element ``ceil(k/2)`` (1-based) of the sorted values."""
    ordered = np.sort(values)
    return float(ordered[(len(ordered) + 1) // 2 - 1])


def median_split(box: InputDomain, axis: int, samples: np.ndarray) -> SplitResult:
    """Split at the median sample coordinate; at the grid midpoint when nothing was sampled."""
    if len(samples) == 0:
        ax = box.axes[axis]
        return box.split_at_index(axis, (ax.index_lo + ax.index_hi) // 2)
    return box.split_at_value(axis, lower_median(samples[:, axis]))


def fixed_fraction_split(fraction: float) -> Splitter:
    """Deliberately unbalanced splitter: the lower side keeps about ``fraction`` of the axis."""

    def split(box: InputDomain, axis: int, samples: np.ndarray) -> SplitResult:
        ax = box.axes[axis]
        keep = max(math.ceil(fraction * ax.point_count), 1)
        return box.split_at_index(axis, ax.index_lo + keep - 1)

    return split


def make_splitter(name: str) -> Splitter:
    if name == "median":
        return median_split
    if name.startswith("fixed:"):
        try:
            frac = float(name.split(":", 1)[1])
        except ValueError:
            frac = -1.0
        if 0 < frac < 1:
            return fixed_fraction_split(frac)
    raise InputError(f"unknown splitter {name!r} (expected 'median' or 'fixed:<fraction>')")


# -- one iteration --------------------------------------------------------


@dataclass
class IterationTrace:
    s: int = 0
    alphas: list[Fraction] = field(default_factory=list)
    sides: list[int] = field(default_factory=list)
    axes: list[int] = field(default_factory=list)
    samples: list[int] = field(default_factory=list)
    leaf_points: int = 0
    leaf_violations: int = 0
    leaf_vr: Fraction = Fraction(0)
    raw_estimate: float = 0.0
    vr_t: float = 0.0
    clamped: bool = False
    exact_timeouts: int = 0

    @property
    def alpha_product(self) -> Fraction:
        return math.prod(self.alphas, start=Fraction(1))

    def to_dict(self) -> dict[str, Any]:
        return {
            "s": self.s,
            "alphas": [str(a) for a in self.alphas],
            "log2_alpha_product": sum(math.log2(a) for a in self.alphas),
            "sides": list(self.sides),
            "axes": list(self.axes),
            "samples": list(self.samples),
            "leaf_points": self.leaf_points,
            "leaf_violations": self.leaf_violations,
            "leaf_vr": str(self.leaf_vr),
            "raw_estimate": self.raw_estimate,
            "vr_t": self.vr_t,
            "clamped": self.clamped,
            "exact_timeouts": self.exact_timeouts,
        }


def _iteration_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def run_iteration(
    inst: VerificationInstance,
    cfg: ApproxConfig,
    rng: np.random.Generator,
    splitter: Splitter | None = None,
) -> IterationTrace:
    splitter = splitter or make_splitter(cfg.splitter)
    total = inst.domain.total_points
    dim = inst.domain.dim
    box = inst.domain
    trace = IterationTrace()
    cursor = 0

    def split_once() -> bool:
        nonlocal box, cursor
        for k in range(dim):
            axis = (cursor + k) % dim
            if box.axes[axis].point_count >= 2:
                break
        else:
            return False
        samples = sample_violations(inst, box, cfg.m, cfg.draws, rng)
        res = splitter(box, axis, samples)
        bit = int(rng.integers(2))
        box, alpha = res.side(bit)
        trace.alphas.append(alpha)
        trace.sides.append(bit)
        trace.axes.append(axis)
        trace.samples.append(len(samples))
        trace.s += 1
        cursor = axis + 1
        return True

    for _ in range(cfg.resolved_prelim_splits(total)):
        if not split_once():
            break
    while True:
        try:
            rep = count_exact(inst.with_domain(box), limits=cfg.exact_limits, leaf_threshold=cfg.leaf_threshold)
            break
        except VerificationTimeout:
            trace.exact_timeouts += 1
            if not split_once():  # pragma: no cover - a single point is always enumerated
                raise
    trace.leaf_points = rep.total
    trace.leaf_violations = rep.violations
    trace.leaf_vr = rep.violation_rate
    # VR_leaf * prod(alpha) telescopes to leaf_violations / A_Tot exactly.
    unshrunk = trace.leaf_vr * trace.alpha_product * 2**trace.s
    trace.raw_estimate = float(unshrunk) * 2.0 ** (-cfg.beta)
    trace.clamped = trace.raw_estimate > 1.0
    trace.vr_t = min(max(trace.raw_estimate, 0.0), 1.0)
    return trace


# -- reports --------------------------------------------------------------


@dataclass
class BoundRun:
    """Result of one CountingProVe run (t iterations) on one postcondition."""

    bound: float
    traces: list[IterationTrace]

    def to_dict(self) -> dict[str, Any]:
        return {"bound": self.bound, "traces": [tr.to_dict() for tr in self.traces]}


@dataclass
class ApproxReport:
    lower_bound: float
    confidence: float
    config: dict[str, Any]
    traces: list[IterationTrace]
    upper_bound: float | None = None
    safe_rate_lower: float | None = None
    sr_traces: list[IterationTrace] | None = None
    interval_clamped: bool = False
    elapsed: float = 0.0

    @property
    def union_confidence(self) -> float | None:
        if self.upper_bound is None:
            return None
        return max(1.0 - 2.0 * (1.0 - self.confidence), 0.0)

    @property
    def interval_size(self) -> float | None:
        return None if self.upper_bound is None else self.upper_bound - self.lower_bound

    @property
    def any_iteration_clamped(self) -> bool:
        return any(tr.clamped for tr in self.traces + (self.sr_traces or []))

    def to_dict(self) -> dict[str, Any]:
        return {
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "interval_size": self.interval_size,
            "safe_rate_lower": self.safe_rate_lower,
            "confidence": self.confidence,
            "union_bound_confidence": self.union_confidence,
            "interval_clamped": self.interval_clamped,
            "iteration_clamped": self.any_iteration_clamped,
            "traces": [tr.to_dict() for tr in self.traces],
            "sr_traces": None if self.sr_traces is None else [tr.to_dict() for tr in self.sr_traces],
            "elapsed": self.elapsed,
        }


def _bound_run(
    inst: VerificationInstance,
    cfg: ApproxConfig,
    stream: int,
    splitter: Splitter | None,
) -> BoundRun:
    def one(i: int) -> IterationTrace:
        return run_iteration(inst, cfg, _iteration_rng(cfg.seed, stream, i), splitter)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            traces = list(pool.map(one, range(cfg.t)))
    else:
        traces = [one(i) for i in range(cfg.t)]
    bound = min([1.0] + [tr.vr_t for tr in traces])
    return BoundRun(bound, traces)


def counting_prove(
    inst: VerificationInstance,
    cfg: ApproxConfig,
    splitter: Splitter | None = None,
) -> ApproxReport:
    """Lower bound on the violation rate, correct with probability ``1 - 2**(-beta t)``."""
    started = time.perf_counter()
    run = _bound_run(inst, cfg, _VR_STREAM, splitter)
    return ApproxReport(
        lower_bound=run.bound,
        confidence=cfg.confidence,
        config=cfg.to_dict(inst.domain.total_points),
        traces=run.traces,
        elapsed=time.perf_counter() - started,
    )


def confidence_interval(
    inst: VerificationInstance,
    cfg: ApproxConfig,
    splitter: Splitter | None = None,
) -> ApproxReport:
    """Lower bound from Q and upper bound ``1 - SR_lower`` from not-Q."""
    started = time.perf_counter()
    vr = _bound_run(inst, cfg, _VR_STREAM, splitter)
    sr = _bound_run(inst.negated(), cfg, _SR_STREAM, splitter)
    lower, upper = vr.bound, 1.0 - sr.bound
    clamped = lower > upper
    if clamped:
        upper = lower
    return ApproxReport(
        lower_bound=lower,
        upper_bound=upper,
        safe_rate_lower=sr.bound,
        confidence=cfg.confidence,
        config=cfg.to_dict(inst.domain.total_points),
        traces=vr.traces,
        sr_traces=sr.traces,
        interval_clamped=clamped,
        elapsed=time.perf_counter() - started,
    )


TRACE_CSV_COLUMNS = (
    "run",
    "iteration",
    "s",
    "leaf_points",
    "leaf_violations",
    "leaf_vr",
    "raw_estimate",
    "vr_t",
    "clamped",
    "exact_timeouts",
    "log2_alpha_product",
    "sides",
)


def trace_rows(report: ApproxReport) -> list[dict[str, Any]]:
    rows = []
    for run, traces in (("vr", report.traces), ("sr", report.sr_traces or [])):
        for i, tr in enumerate(traces):
            d = tr.to_dict()
            rows.append(
                {
                    "run": run,
                    "iteration": i,
                    **{k: d[k] for k in TRACE_CSV_COLUMNS[2:-1]},
                    "sides": "".join(str(b) for b in tr.sides),
                }
            )
    return rows


def with_seed(cfg: ApproxConfig, seed: int) -> ApproxConfig:
    return replace(cfg, seed=seed)


def estimates(traces: Sequence[IterationTrace]) -> np.ndarray:
    return np.array([tr.vr_t for tr in traces])
