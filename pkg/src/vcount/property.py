"""Postconditions as DNF over linear output inequalities, plus property files.

An atom is ``coeffs . y + offset  <rel>  0``. A postcondition is a disjunction
of conjunctions of atoms. By convention Q describes the *unsafe* outputs, so a
grid point is a violation when Q holds on its output.

Property JSON::

    {"input": [{"lo": 0, "hi": 1}, {"lo": 0, "hi": 1}],
     "output_constraints": [[{"coeffs": [1], "offset": 0, "relation": "LT"}]]}

Inside a conjunction an atom may also be the macro string ``"argmax_is k"`` /
``"argmin_is k"`` or an object ``{"argmax_is": k, "strict": false}``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .domain import InputDomain
from .errors import ComplexityError, ParseError, ShapeError
from .network import Network

DEFAULT_TERM_LIMIT = 4096


class Relation(str, Enum):
    LT = "LT"
    LE = "LE"
    GT = "GT"
    GE = "GE"

    @property
    def complement(self) -> Relation:
        return _COMPLEMENT[self]

    def holds(self, value: Any) -> Any:
        if self is Relation.LT:
            return value < 0
        if self is Relation.LE:
            return value <= 0
        if self is Relation.GT:
            return value > 0
        return value >= 0


_COMPLEMENT = {
    Relation.LT: Relation.GE,
    Relation.GE: Relation.LT,
    Relation.LE: Relation.GT,
    Relation.GT: Relation.LE,
}


@dataclass(frozen=True)
class LinearAtom:
    coeffs: tuple[float, ...]
    offset: float
    relation: Relation

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs or not all(np.isfinite(coeffs)) or not np.isfinite(self.offset):
            raise ShapeError("atom coefficients must be a nonempty finite vector")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "relation", Relation(self.relation))

    def negated(self) -> LinearAtom:
        return LinearAtom(self.coeffs, self.offset, self.relation.complement)

    def value(self, y: np.ndarray) -> np.ndarray:
        return y @ np.asarray(self.coeffs) + self.offset

    def holds(self, y: np.ndarray) -> np.ndarray:
        return self.relation.holds(self.value(y))

    def holds_on_range(self, lo: float, hi: float) -> bool:
        """True if the atom holds for every value in ``[lo, hi]``."""
        if self.relation is Relation.LT:
            return hi < 0
        if self.relation is Relation.LE:
            return hi <= 0
        if self.relation is Relation.GT:
            return lo > 0
        return lo >= 0

    def fails_on_range(self, lo: float, hi: float) -> bool:
        """True if the atom is false for every value in ``[lo, hi]``."""
        return self.negated().holds_on_range(lo, hi)

    def to_dict(self) -> dict[str, Any]:
        return {"coeffs": list(self.coeffs), "offset": self.offset, "relation": self.relation.value}


Conjunction = tuple[LinearAtom, ...]


@dataclass(frozen=True)
class Postcondition:
    disjuncts: tuple[Conjunction, ...]

    def __post_init__(self) -> None:
        disjuncts = tuple(tuple(c) for c in self.disjuncts)
        if not disjuncts or any(not c for c in disjuncts):
            raise ShapeError("a postcondition needs nonempty disjuncts and conjunctions")
        dims = {len(a.coeffs) for c in disjuncts for a in c}
        if len(dims) != 1:
            raise ShapeError("all atoms must have the same number of coefficients", dims=sorted(dims))
        object.__setattr__(self, "disjuncts", disjuncts)

    @property
    def output_dim(self) -> int:
        return len(self.disjuncts[0][0].coeffs)

    def holds(self, y: Any) -> Any:
        """Evaluate on one output vector (returns bool) or a batch (returns bool array)."""
        arr = np.asarray(y, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.shape[1] != self.output_dim:
            raise ShapeError(
                f"output has {arr.shape[1]} components, postcondition expects {self.output_dim}"
            )
        result = np.zeros(arr.shape[0], dtype=bool)
        for conj in self.disjuncts:
            term = np.ones(arr.shape[0], dtype=bool)
            for atom in conj:
                term &= atom.holds(arr)
            result |= term
        return bool(result[0]) if single else result

    def to_list(self) -> list[list[dict[str, Any]]]:
        return [[a.to_dict() for a in conj] for conj in self.disjuncts]


def eval_post(q: Postcondition, y: Any) -> Any:
    return q.holds(y)


def negate(q: Postcondition, term_limit: int = DEFAULT_TERM_LIMIT) -> Postcondition:
    """De Morgan: not(OR_i AND_j a_ij) = AND_i OR_j not a_ij, redistributed into DNF."""
    n_terms = 1
    for conj in q.disjuncts:
        n_terms *= len(conj)
        if n_terms > term_limit:
            raise ComplexityError(
                f"negated postcondition would exceed {term_limit} DNF terms; simplify Q",
                term_limit=term_limit,
            )
    choices = [[a.negated() for a in conj] for conj in q.disjuncts]
    terms = []
    seen = set()
    for combo in itertools.product(*choices):
        term = tuple(dict.fromkeys(combo))
        if term not in seen:
            seen.add(term)
            terms.append(term)
    return Postcondition(tuple(terms))


@dataclass(frozen=True)
class VerificationInstance:
    """The tuple (N, P, Q)."""

    network: Network
    domain: InputDomain
    post: Postcondition

    def __post_init__(self) -> None:
        if self.domain.dim != self.network.input_dim:
            raise ShapeError(
                f"domain has {self.domain.dim} axes but the network takes {self.network.input_dim} inputs"
            )
        if self.post.output_dim != self.network.output_dim:
            raise ShapeError(
                f"postcondition is over {self.post.output_dim} outputs but the network has "
                f"{self.network.output_dim}"
            )

    def with_domain(self, domain: InputDomain) -> VerificationInstance:
        return VerificationInstance(self.network, domain, self.post)

    def negated(self) -> VerificationInstance:
        return VerificationInstance(self.network, self.domain, negate(self.post))

    def violates(self, points: np.ndarray) -> np.ndarray:
        return self.post.holds(self.network.forward(points))


# -- property files -------------------------------------------------------


def argmax_atoms(k: int, output_dim: int, strict: bool = False, minimum: bool = False) -> Conjunction:
    """``y_k >= y_j`` for every ``j != k`` (``<=`` when ``minimum``; strict on request)."""
    if not 0 <= k < output_dim:
        raise ShapeError(f"output index {k} out of range for {output_dim} outputs")
    if minimum:
        rel = Relation.LT if strict else Relation.LE
    else:
        rel = Relation.GT if strict else Relation.GE
    atoms = []
    for j in range(output_dim):
        if j == k:
            continue
        coeffs = [0.0] * output_dim
        coeffs[k], coeffs[j] = 1.0, -1.0
        atoms.append(LinearAtom(tuple(coeffs), 0.0, rel))
    return tuple(atoms)


@dataclass(frozen=True)
class PropertySpec:
    """Input bounds (precondition) and the postcondition read from a property file."""

    input_bounds: tuple[tuple[float, float], ...]
    post: Postcondition

    def domain(self, epsilon: float) -> InputDomain:
        return InputDomain.from_bounds(self.input_bounds, epsilon)

    def instance(self, network: Network, epsilon: float) -> VerificationInstance:
        return VerificationInstance(network, self.domain(epsilon), self.post)


def _parse_macro(item: Any, path: str, output_dim: int | None) -> Conjunction | None:
    strict = False
    if isinstance(item, str):
        parts = item.split()
        if len(parts) != 2 or parts[0] not in ("argmax_is", "argmin_is"):
            raise ParseError(f"unknown atom macro {item!r}", path=path)
        name, raw_k = parts
    elif isinstance(item, dict) and ("argmax_is" in item or "argmin_is" in item):
        name = "argmax_is" if "argmax_is" in item else "argmin_is"
        raw_k = item[name]
        strict = bool(item.get("strict", False))
    else:
        return None
    try:
        k = int(raw_k)
    except (TypeError, ValueError):
        raise ParseError(f"macro index must be an integer, got {raw_k!r}", path=path) from None
    if output_dim is None:
        raise ParseError("argmax/argmin macros need the network output dimension", path=path)
    try:
        return argmax_atoms(k, output_dim, strict=strict, minimum=name == "argmin_is")
    except ShapeError as exc:
        raise ParseError(exc.message, path=path) from None


def _parse_atom(item: Any, path: str, output_dim: int | None) -> LinearAtom:
    if not isinstance(item, dict):
        raise ParseError("atom must be an object", path=path)
    for key in ("coeffs", "relation"):
        if key not in item:
            raise ParseError(f"atom is missing '{key}'", path=f"{path}.{key}")
    rel = item["relation"]
    try:
        relation = Relation(str(rel).upper())
    except ValueError:
        raise ParseError(f"unknown relation {rel!r} (expected LT, LE, GT or GE)", path=f"{path}.relation") from None
    coeffs = item["coeffs"]
    if not isinstance(coeffs, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
        raise ParseError("coeffs must be a list of numbers", path=f"{path}.coeffs")
    if output_dim is not None and len(coeffs) != output_dim:
        raise ParseError(
            f"coeffs has {len(coeffs)} entries, network has {output_dim} outputs", path=f"{path}.coeffs"
        )
    offset = item.get("offset", 0.0)
    if not isinstance(offset, (int, float)) or isinstance(offset, bool):
        raise ParseError("offset must be a number", path=f"{path}.offset")
    try:
        return LinearAtom(tuple(coeffs), offset, relation)
    except ShapeError as exc:
        raise ParseError(exc.message, path=path) from None


def property_from_dict(doc: Any, output_dim: int | None = None) -> PropertySpec:
    if not isinstance(doc, dict):
        raise ParseError("property document must be a JSON object", path="$")
    output_dim = doc.get("output_dim", output_dim)
    raw_input = doc.get("input")
    if not isinstance(raw_input, list) or not raw_input:
        raise ParseError("'input' must be a nonempty list of {lo, hi}", path="$.input")
    bounds = []
    for i, ax in enumerate(raw_input):
        path = f"$.input[{i}]"
        if isinstance(ax, dict) and "lo" in ax and "hi" in ax:
            lo, hi = ax["lo"], ax["hi"]
        elif isinstance(ax, list) and len(ax) == 2:
            lo, hi = ax
        else:
            raise ParseError("axis must be {lo, hi}", path=path)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (lo, hi)):
            raise ParseError("axis bounds must be numbers", path=path)
        if lo > hi:
            raise ParseError(f"axis lower bound {lo} exceeds upper bound {hi}", path=path)
        bounds.append((float(lo), float(hi)))
    raw_q = doc.get("output_constraints")
    if not isinstance(raw_q, list) or not raw_q:
        raise ParseError("'output_constraints' must be a nonempty list of conjunctions", path="$.output_constraints")
    disjuncts = []
    for i, conj in enumerate(raw_q):
        cpath = f"$.output_constraints[{i}]"
        if not isinstance(conj, list) or not conj:
            raise ParseError("conjunction must be a nonempty list of atoms", path=cpath)
        atoms: list[LinearAtom] = []
        for j, item in enumerate(conj):
            apath = f"{cpath}[{j}]"
            expanded = _parse_macro(item, apath, output_dim)
            if expanded is not None:
                atoms.extend(expanded)
            else:
                atoms.append(_parse_atom(item, apath, output_dim))
        disjuncts.append(tuple(atoms))
    try:
        post = Postcondition(tuple(disjuncts))
    except ShapeError as exc:
        raise ParseError(exc.message, path="$.output_constraints") from None
    return PropertySpec(tuple(bounds), post)


def parse_property(path: str | Path, output_dim: int | None = None) -> PropertySpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, path="$") from None
    return property_from_dict(doc, output_dim)


def property_to_dict(bounds: Sequence[tuple[float, float]], post: Postcondition) -> dict[str, Any]:
    return {
        "input": [{"lo": lo, "hi": hi} for lo, hi in bounds],
        "output_constraints": post.to_list(),
    }


def save_property(bounds: Sequence[tuple[float, float]], post: Postcondition, path: str | Path) -> None:
    Path(path).write_text(json.dumps(property_to_dict(bounds, post), indent=1))


def simple_post(coeffs: Sequence[float], offset: float, relation: str) -> Postcondition:
    return Postcondition(((LinearAtom(tuple(coeffs), offset, Relation(relation)),),))
