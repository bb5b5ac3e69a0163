"""3-CNF to ReLU network compiler whose violation count is the model count.

Fused form (three layers): literal values, per-clause ``u_i = ReLU(1 - sum of
literals)``, and ``output = n - sum u_i``. On a {0,1} input the output is the
number of satisfied clauses, so ``output == n`` exactly on models of the formula.
The gadget-per-layer form keeps negation, the two halves of the disjunction
and the final conjunction as separate layers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .domain import InputDomain
from .errors import BudgetRefusal, InputError, ParseError
from .network import Activation, Layer, Network
from .property import LinearAtom, Postcondition, Relation, VerificationInstance

DEFAULT_VAR_CAP = 20


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        clauses = tuple(tuple(int(lit) for lit in c) for c in self.clauses)
        if self.num_vars < 1:
            raise InputError(f"formula needs at least one variable, got {self.num_vars}")
        for i, clause in enumerate(clauses):
            if not clause:
                raise InputError(f"clause {i} is empty", clause=i)
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise InputError(f"clause {i}: literal {lit} out of range 1..{self.num_vars}", clause=i)
        object.__setattr__(self, "clauses", clauses)

    @property
    def max_width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def satisfied_by(self, assignment: Sequence[int]) -> bool:
        return all(any((assignment[abs(l) - 1] == 1) == (l > 0) for l in c) for c in self.clauses)


def brute_sat_count(f: CnfFormula, var_cap: int = DEFAULT_VAR_CAP) -> int:
    """Truth-table model count."""
    if f.num_vars > var_cap:
        raise BudgetRefusal(
            f"{f.num_vars} variables exceed the truth-table cap of {var_cap}", num_vars=f.num_vars, cap=var_cap
        )
    table = np.array(list(itertools.product((0, 1), repeat=f.num_vars)), dtype=bool)
    sat = np.ones(len(table), dtype=bool)
    for clause in f.clauses:
        ok = np.zeros(len(table), dtype=bool)
        for lit in clause:
            col = table[:, abs(lit) - 1]
            ok |= col if lit > 0 else ~col
        sat &= ok
    return int(np.count_nonzero(sat))


def _equals(value: float) -> Postcondition:
    return Postcondition(
        ((LinearAtom((1.0,), -value, Relation.GE), LinearAtom((1.0,), -value, Relation.LE)),)
    )


def boolean_domain(num_vars: int) -> InputDomain:
    return InputDomain.from_bounds([(0.0, 1.0)] * num_vars, 1.0)


def _check_3cnf(f: CnfFormula) -> None:
    if f.max_width > 3:
        wide = next(i for i, c in enumerate(f.clauses) if len(c) > 3)
        raise InputError(f"clause {wide} has {len(f.clauses[wide])} literals; only 3-CNF is supported", clause=wide)


def fused_network(f: CnfFormula) -> Network:
    _check_3cnf(f)
    k, n = f.num_vars, len(f.clauses)
    if n == 0:
        return Network((Layer(np.zeros((1, k)), [0.0], Activation.IDENTITY),))
    width = sum(len(c) for c in f.clauses)
    w1, b1 = np.zeros((width, k)), np.zeros(width)
    w2, b2 = np.zeros((n, width)), np.ones(n)
    row = 0
    for i, clause in enumerate(f.clauses):
        for lit in clause:
            if lit > 0:
                w1[row, lit - 1] = 1.0
            else:
                w1[row, -lit - 1], b1[row] = -1.0, 1.0
            w2[i, row] = -1.0
            row += 1
    w3, b3 = -np.ones((1, n)), np.array([float(n)])
    return Network(
        (
            Layer(w1, b1, Activation.RELU),
            Layer(w2, b2, Activation.RELU),
            Layer(w3, b3, Activation.IDENTITY),
        )
    )


def faithful_network(f: CnfFormula) -> Network:
    """One layer per gadget: negation, disjunction (two steps), conjunction."""
    _check_3cnf(f)
    k, n = f.num_vars, len(f.clauses)
    if n == 0:
        return Network((Layer(np.zeros((1, k)), [0.0], Activation.IDENTITY),))
    # unit 2j is x_j, unit 2j+1 is 1 - x_j
    w1, b1 = np.zeros((2 * k, k)), np.zeros(2 * k)
    for j in range(k):
        w1[2 * j, j] = 1.0
        w1[2 * j + 1, j], b1[2 * j + 1] = -1.0, 1.0
    w2, b2 = np.zeros((n, 2 * k)), np.ones(n)
    for i, clause in enumerate(f.clauses):
        for lit in clause:
            w2[i, 2 * (abs(lit) - 1) + (lit < 0)] -= 1.0
    w3, b3 = -np.eye(n), np.ones(n)
    w4, b4 = np.ones((1, n)), np.zeros(1)
    return Network(
        (
            Layer(w1, b1, Activation.RELU),
            Layer(w2, b2, Activation.RELU),
            Layer(w3, b3, Activation.RELU),
            Layer(w4, b4, Activation.IDENTITY),
        )
    )


def cnf_to_instance(f: CnfFormula, faithful_layers: bool = False) -> VerificationInstance:
    """Instance over {0,1}^k whose violations are exactly the models of ``f``."""
    net = faithful_network(f) if faithful_layers else fused_network(f)
    return VerificationInstance(net, boolean_domain(f.num_vars), _equals(float(len(f.clauses))))


# -- DIMACS ---------------------------------------------------------------


def parse_dimacs_text(text: str) -> CnfFormula:
    header: tuple[int, int] | None = None
    header_line = 0
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    clause_start = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise ParseError(f"line {lineno}: duplicate problem line", line=lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"line {lineno}: expected 'p cnf <vars> <clauses>'", line=lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer counts in problem line", line=lineno) from None
            header_line = lineno
            continue
        if header is None:
            raise ParseError(f"line {lineno}: clause before the 'p cnf' problem line", line=lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"line {lineno}: invalid literal {tok!r}", line=lineno, token=tok) from None
            if lit == 0:
                if not current:
                    raise ParseError(f"line {lineno}: empty clause", line=lineno)
                clauses.append(tuple(current))
                current = []
                continue
            if abs(lit) > header[0]:
                raise ParseError(
                    f"line {lineno}: literal {lit} exceeds declared variable count {header[0]}", line=lineno
                )
            if not current:
                clause_start = lineno
            current.append(lit)
    if header is None:
        raise ParseError("missing 'p cnf' problem line", line=0)
    if current:
        raise ParseError(f"line {clause_start}: clause is not terminated by 0", line=clause_start)
    if len(clauses) != header[1]:
        raise ParseError(
            f"line {header_line}: header declares {header[1]} clauses, found {len(clauses)}", line=header_line
        )
    try:
        return CnfFormula(header[0], tuple(clauses))
    except InputError as exc:
        raise ParseError(exc.message, line=header_line) from None


def parse_dimacs(path: str | Path) -> CnfFormula:
    return parse_dimacs_text(Path(path).read_text())


def format_dimacs(f: CnfFormula, comments: Iterable[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    lines.extend(" ".join(str(lit) for lit in c) + " 0" for c in f.clauses)
    return "\n".join(lines) + "\n"


def random_3cnf(rng: np.random.Generator, num_vars: int, num_clauses: int) -> CnfFormula:
    """Clauses of 1 to 3 distinct variables with random signs."""
    clauses = []
    for _ in range(num_clauses):
        width = int(rng.integers(1, min(3, num_vars) + 1))
        vars_ = rng.choice(num_vars, size=width, replace=False) + 1
        signs = rng.choice((-1, 1), size=width)
        clauses.append(tuple(int(v * s) for v, s in zip(vars_, signs)))
    return CnfFormula(num_vars, tuple(clauses))
