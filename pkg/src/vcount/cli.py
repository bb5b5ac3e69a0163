"""Command line interface.

Every subcommand writes one JSON report (see ``schemas/report.schema.json``)
to stdout or ``--output``. Errors go to stderr as ``{"code", "message", "context"}``.

Exit codes: ``verify`` returns 0 for UNSAT, 1 for SAT and 2 on timeout. The
counting commands return 0 on success, 2 on timeout, 3 when a budget cap refuses
the instance and 4 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import secrets
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .approx import AUTO, TRACE_CSV_COLUMNS, ApproxConfig, confidence_interval, counting_prove, trace_rows
from .decision import DEFAULT_LEAF_THRESHOLD, Limits, decide
from .errors import BudgetRefusal, InputError, VCountError, VerificationTimeout
from .exact import count_exact
from .network import Network, load_network, save_json
from .oracle import DEFAULT_POINT_CAP, count_brute
from .property import PropertySpec, VerificationInstance, parse_property, save_property
from .reduction import DEFAULT_VAR_CAP, brute_sat_count, cnf_to_instance, parse_dimacs
from .report import envelope

EXIT_OK = 0
EXIT_SAT = 1
EXIT_TIMEOUT = 2
EXIT_BUDGET = 3
EXIT_INPUT = 4


class _CommandResult:
    def __init__(
        self,
        result: dict[str, Any],
        config: dict[str, Any],
        code: int = EXIT_OK,
        csv_rows=None,
        runtime: dict[str, Any] | None = None,
    ):
        self.result = result
        self.config = config
        self.runtime = runtime
        self.code = code
        self.csv_rows = csv_rows


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _prelim(text: str) -> int | str:
    if text == AUTO:
        return AUTO
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def _default_threads() -> int:
    env = os.environ.get("VC_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            pass
    return os.cpu_count() or 1


def _load_instance(args: argparse.Namespace) -> tuple[VerificationInstance, dict[str, Any]]:
    for attr in ("model", "property"):
        path = Path(getattr(args, attr))
        if not path.is_file():
            raise InputError(f"{attr} file not found: {path}", path=str(path))
    net = load_network(args.model)
    if args.nnet_normalize:
        net = net.normalized()
    spec = parse_property(args.property, output_dim=net.output_dim)
    inst = spec.instance(net, args.epsilon)
    config = {
        "model": str(args.model),
        "property": str(args.property),
        "epsilon": args.epsilon,
        "nnet_normalize": args.nnet_normalize,
        "total_points": inst.domain.total_points,
    }
    return inst, config


def _limits(time_limit: float | None, node_limit: int | None) -> Limits:
    return Limits(node_limit=node_limit, time_limit=time_limit)


# -- subcommands ----------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> _CommandResult:
    inst, config = _load_instance(args)
    limits = _limits(args.time_limit, args.node_limit)
    config.update(limits=limits.to_dict(), leaf_threshold=args.leaf_threshold)
    try:
        verdict = decide(inst, limits, leaf_threshold=args.leaf_threshold)
    except VerificationTimeout as exc:
        return _CommandResult({"verdict": "TIMEOUT", "message": exc.message, "stats": exc.stats}, config, EXIT_TIMEOUT)
    return _CommandResult(verdict.to_dict(), config, EXIT_SAT if verdict.sat else EXIT_OK)


def cmd_count_exact(args: argparse.Namespace) -> _CommandResult:
    inst, config = _load_instance(args)
    limits = _limits(args.time_limit, args.node_limit)
    config.update(limits=limits.to_dict(), leaf_threshold=args.leaf_threshold)
    rep = count_exact(inst, limits, leaf_threshold=args.leaf_threshold)
    return _CommandResult(rep.to_dict(), config)


def cmd_count_brute(args: argparse.Namespace) -> _CommandResult:
    inst, config = _load_instance(args)
    config.update(cap=args.cap)
    return _CommandResult(count_brute(inst, cap=args.cap).to_dict(), config)


def cmd_count_approx(args: argparse.Namespace) -> _CommandResult:
    inst, config = _load_instance(args)
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    cfg = ApproxConfig(
        beta=args.beta,
        t=args.t,
        m=args.m,
        sample_budget=args.sample_budget,
        prelim_splits=args.prelim_splits,
        exact_limits=_limits(args.exact_time_limit, args.exact_node_limit),
        leaf_threshold=args.leaf_threshold,
        seed=seed,
        splitter=args.splitter,
        threads=args.threads,
    )
    config.update(cfg.to_dict(inst.domain.total_points), upper=args.upper)
    report = confidence_interval(inst, cfg) if args.upper else counting_prove(inst, cfg)
    rows = trace_rows(report)
    if args.trace_csv:
        Path(args.trace_csv).write_text(_csv_text(rows))
    return _CommandResult(report.to_dict(), config, csv_rows=rows, runtime={"threads": cfg.threads})


def cmd_reduce_cnf(args: argparse.Namespace) -> _CommandResult:
    f = parse_dimacs(args.dimacs)
    inst = cnf_to_instance(f, faithful_layers=args.faithful_layers)
    save_json(inst.network, args.out_model)
    bounds = [(ax.coord_lo, ax.coord_hi) for ax in inst.domain.axes]
    save_property(bounds, inst.post, args.out_property)
    config = {"dimacs": str(args.dimacs), "faithful_layers": args.faithful_layers, "epsilon": 1.0}
    result = {
        "num_vars": f.num_vars,
        "num_clauses": len(f.clauses),
        "model": str(args.out_model),
        "property": str(args.out_property),
        "layers": [layer.out_dim for layer in inst.network.layers],
    }
    return _CommandResult(result, config)


def cmd_count_cnf(args: argparse.Namespace) -> _CommandResult:
    f = parse_dimacs(args.dimacs)
    config = {"dimacs": str(args.dimacs), "via": args.via}
    if args.via == "brute":
        count = brute_sat_count(f, var_cap=args.var_cap)
        config["var_cap"] = args.var_cap
    else:
        count = count_exact(cnf_to_instance(f, faithful_layers=args.faithful_layers)).violations
        config["faithful_layers"] = args.faithful_layers
    return _CommandResult({"num_vars": f.num_vars, "num_clauses": len(f.clauses), "count": count}, config)


def cmd_info(args: argparse.Namespace) -> _CommandResult:
    if not Path(args.model).is_file():
        raise InputError(f"model file not found: {args.model}", path=str(args.model))
    net: Network = load_network(args.model)
    config: dict[str, Any] = {"model": str(args.model)}
    result: dict[str, Any] = {
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "layers": [{"units": layer.out_dim, "activation": layer.activation.value} for layer in net.layers],
        "parameters": sum(layer.weights.size + layer.biases.size for layer in net.layers),
        "has_nnet_normalization": net.nnet_metadata is not None,
    }
    if args.property:
        if args.epsilon is None:
            raise InputError("--epsilon is required together with --property")
        spec: PropertySpec = parse_property(args.property, output_dim=net.output_dim)
        dom = spec.domain(args.epsilon)
        from .approx import auto_prelim_splits

        config.update(property=str(args.property), epsilon=args.epsilon)
        result.update(
            axis_points=list(dom.shape),
            total_points=dom.total_points,
            auto_prelim_splits=auto_prelim_splits(dom.total_points),
            disjuncts=len(spec.post.disjuncts),
        )
    return _CommandResult(result, config)


# -- parser ---------------------------------------------------------------


def _common_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--pretty", action="store_true", help="human-readable summary instead of JSON")


def _instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="network file (.nnet or JSON)")
    p.add_argument("--property", required=True, help="property JSON file")
    p.add_argument("--epsilon", required=True, type=_positive_float, help="grid step on every input axis")
    p.add_argument("--nnet-normalize", action="store_true", help="apply NNet input/output normalization")
    _common_output(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vcount", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vcount {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="decide whether any grid point violates the property")
    _instance_args(p)
    p.add_argument("--time-limit", type=_positive_float)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("count-exact", help="exact violation count by recursive bisection")
    _instance_args(p)
    p.add_argument("--time-limit", type=_positive_float)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.set_defaults(func=cmd_count_exact)

    p = sub.add_parser("count-brute", help="violation count by full enumeration")
    _instance_args(p)
    p.add_argument("--cap", type=int, default=DEFAULT_POINT_CAP, help="refuse domains larger than this")
    p.set_defaults(func=cmd_count_brute)

    p = sub.add_parser("count-approx", help="probabilistic bounds on the violation rate")
    _instance_args(p)
    p.add_argument("--beta", type=_positive_float, default=0.02, help="error tolerance factor")
    p.add_argument("--t", type=int, default=350, help="iterations")
    p.add_argument("--m", type=int, default=1000, help="violation samples per split")
    p.add_argument("--sample-budget", type=int, help="uniform draws per split (default 10*m)")
    p.add_argument("--prelim-splits", type=_prelim, default=AUTO, help="'auto' or an integer")
    p.add_argument("--exact-time-limit", type=_positive_float, help="per-leaf exact count time limit (s)")
    p.add_argument(
        "--exact-node-limit", type=int, default=10_000, help="per-leaf exact count node limit"
    )
    p.add_argument("--leaf-threshold", type=int, default=DEFAULT_LEAF_THRESHOLD)
    p.add_argument("--splitter", default="median", help="'median' or 'fixed:<fraction>'")
    p.add_argument("--seed", type=int, help="master seed (generated and echoed when omitted)")
    p.add_argument("--upper", action="store_true", help="also bound the rate from above via the safe rate")
    p.add_argument("--threads", type=int, default=_default_threads(), help="worker threads (env VC_THREADS)")
    p.add_argument("--trace-csv", help="write per-iteration trace rows to this CSV file")
    p.add_argument("--format", choices=("json", "csv-trace"), default="json")
    p.set_defaults(func=cmd_count_approx)

    p = sub.add_parser("reduce-cnf", help="compile a 3-CNF into a network and property")
    p.add_argument("--dimacs", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-property", required=True)
    p.add_argument("--faithful-layers", action="store_true", help="one layer per gadget")
    _common_output(p)
    p.set_defaults(func=cmd_reduce_cnf)

    p = sub.add_parser("count-cnf", help="model count of a 3-CNF")
    p.add_argument("--dimacs", required=True)
    p.add_argument("--via", choices=("reduction", "brute"), default="reduction")
    p.add_argument("--faithful-layers", action="store_true")
    p.add_argument("--var-cap", type=int, default=DEFAULT_VAR_CAP)
    _common_output(p)
    p.set_defaults(func=cmd_count_cnf)

    p = sub.add_parser("info", help="summarize a network (and optionally a property domain)")
    p.add_argument("--model", required=True)
    p.add_argument("--property")
    p.add_argument("--epsilon", type=_positive_float)
    _common_output(p)
    p.set_defaults(func=cmd_info)
    return parser


# -- output ---------------------------------------------------------------


def _csv_text(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TRACE_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _pretty(report: dict[str, Any]) -> str:
    lines = [f"{report['tool']} {report['version']}  {report['command']}"]
    for key, value in report["config"].items():
        lines.append(f"  config.{key:<22} {value}")
    for key, value in report["result"].items():
        if key in ("traces", "sr_traces"):
            n = 0 if value is None else len(value)
            lines.append(f"  {key:<29} [{n} iterations]")
            continue
        lines.append(f"  {key:<29} {value}")
    lines.append(f"  wall time                     {report['wall_time_s']:.3f}s")
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _error(exc: VCountError | Exception, code: str | None = None) -> None:
    if isinstance(exc, VCountError):
        payload = exc.to_dict()
        if isinstance(exc, VerificationTimeout):
            payload["context"] = {**payload["context"], "stats": exc.stats}
    else:
        payload = {"code": code or "error", "message": str(exc), "context": {}}
    sys.stderr.write(json.dumps(payload, default=str) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func: Callable[[argparse.Namespace], _CommandResult] = args.func
    started = time.perf_counter()
    try:
        out = func(args)
    except VerificationTimeout as exc:
        _error(exc)
        return EXIT_TIMEOUT
    except BudgetRefusal as exc:
        _error(exc)
        return EXIT_BUDGET
    except (InputError, VCountError) as exc:
        _error(exc)
        return EXIT_INPUT
    except OSError as exc:
        _error(exc, "io_error")
        return EXIT_INPUT
    report = envelope(args.command, out.config, out.result, time.perf_counter() - started, out.runtime)
    if getattr(args, "format", "json") == "csv-trace" and out.csv_rows is not None:
        text = _csv_text(out.csv_rows)
    elif args.pretty:
        text = _pretty(report)
    else:
        text = json.dumps(report, indent=1) + "\n"
    _emit(text, args.output)
    return out.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
