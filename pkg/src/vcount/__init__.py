"""Exact and approximate counting of safety violations in ReLU networks."""

from .approx import ApproxConfig, ApproxReport, confidence_interval, counting_prove
from .decision import Limits, Verdict, decide, interval_bounds
from .domain import GridAxis, InputDomain
from .errors import (
    BudgetRefusal,
    InputError,
    ParseError,
    VCountError,
    VerificationTimeout,
)
from .exact import CountReport, count_exact
from .network import Layer, Network, load_json, load_network, load_nnet, save_json
from .oracle import count_brute
from .property import (
    LinearAtom,
    Postcondition,
    Relation,
    VerificationInstance,
    eval_post,
    negate,
    parse_property,
)
from .reduction import CnfFormula, brute_sat_count, cnf_to_instance, parse_dimacs

__version__ = "0.1.0"

__all__ = [
    "ApproxConfig",
    "ApproxReport",
    "BudgetRefusal",
    "CnfFormula",
    "CountReport",
    "GridAxis",
    "InputDomain",
    "InputError",
    "Layer",
    "Limits",
    "LinearAtom",
    "Network",
    "ParseError",
    "Postcondition",
    "Relation",
    "VCountError",
    "Verdict",
    "VerificationInstance",
    "VerificationTimeout",
    "brute_sat_count",
    "cnf_to_instance",
    "confidence_interval",
    "count_brute",
    "count_exact",
    "counting_prove",
    "decide",
    "eval_post",
    "interval_bounds",
    "load_json",
    "load_network",
    "load_nnet",
    "negate",
    "parse_dimacs",
    "parse_property",
    "save_json",
]
