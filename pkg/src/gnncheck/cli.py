"""Command-line interface: verify, sat, compile, eval, oracle, fuzz.

Exit codes: 0 valid/sat/all-agree, 1 invalid/unsat/disagreement, 2 usage or
input errors, 3 unknown (limits hit).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .arith import ArithmeticSpec
from .compile import compile_lvp
from .errors import GnnCheckError
from .formula import parse as parse_formula
from .formula import to_text
from .fuzz import run_differential
from .gnn import DeltaMode, gnn_from_json, gnn_eval, lvp_from_json
from .graph import load_json as graph_from_json
from .graph import save_json as graph_to_json
from .graph import to_dot
from .semantics import Sat, Unknown, Unsat, brute_force_sat
from .tableau import Invalid, SolveLimits, Valid, solve, verify_lvp

EXIT_POSITIVE = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3


def _limits(args) -> SolveLimits:
    time_limit = args.time_limit
    if time_limit is None:
        env = os.environ.get("QGNN_TIME_LIMIT")
        if env:
            time_limit = float(env)
    return SolveLimits(time_limit=time_limit, max_terms=args.term_limit, max_arity=args.max_arity)


def _load_doc(path: str):
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise GnnCheckError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise GnnCheckError(f"{path} is not valid JSON: {exc}") from None


def _read_formula(args):
    spec = ArithmeticSpec.parse(args.arith)
    text = args.formula
    if os.path.exists(text):
        with open(text) as handle:
            text = handle.read()
    return parse_formula(text, spec, default_activation=args.alpha)


def _print_graph(graph, point, out):
    for node in graph.nodes:
        label = " ".join(f"{f}={graph.spec.format_payload(graph.labels[node][f])}" for f in graph.features)
        marker = " <- point" if node == point else ""
        print(f"  {node}: {label}{marker}", file=out)
    if graph.edges:
        print("  edges: " + ", ".join(f"{s}->{t}" for s, t in graph.edges), file=out)


def _emit_dot(args, graph, point):
    if getattr(args, "emit_dot", None):
        with open(args.emit_dot, "w") as handle:
            handle.write(to_dot(graph, point))


def _sat_result(args, verdict) -> int:
    as_json = args.output == "json"
    if isinstance(verdict, Sat):
        model = verdict.model
        if as_json:
            print(json.dumps({"verdict": "sat", "model": graph_to_json(model.graph, model.point)}))
        else:
            print("sat")
            _print_graph(model.graph, model.point, sys.stdout)
        _emit_dot(args, model.graph, model.point)
        return EXIT_POSITIVE
    if isinstance(verdict, Unsat):
        print(json.dumps({"verdict": "unsat"}) if as_json else "unsat")
        return EXIT_NEGATIVE
    print(json.dumps({"verdict": "unknown", "reason": verdict.reason}) if as_json else f"unknown ({verdict.reason})")
    return EXIT_UNKNOWN


def _delta_for_oracle(text: str) -> int:
    mode = DeltaMode.parse(text)
    if mode.kind == "inf":
        raise GnnCheckError("the brute-force oracle needs a finite arity bound")
    return mode.value


def cmd_verify(args) -> int:
    doc = _load_doc(args.instance)
    if args.arith:
        doc.setdefault("gnn", {})["arith"] = args.arith
    if args.delta:
        mode = DeltaMode.parse(args.delta)
        doc["delta"] = {"mode": mode.kind} | ({} if mode.value is None else {"value": mode.value})
    instance = lvp_from_json(doc)
    result = verify_lvp(instance, _limits(args))
    as_json = args.output == "json"
    if isinstance(result, Valid):
        print(json.dumps({"verdict": "valid"}) if as_json else "valid")
        return EXIT_POSITIVE
    if isinstance(result, Invalid):
        graph = result.counterexample.graph
        point = result.counterexample.point
        outputs = {
            name: graph.spec.format_payload(v.payload)
            for name, v in zip(instance.model.output_features, result.outputs)
        }
        if as_json:
            print(json.dumps({
                "verdict": "invalid",
                "counterexample": graph_to_json(graph, point),
                "outputs": outputs,
            }))
        else:
            print("invalid")
            print("counterexample:")
            _print_graph(graph, point, sys.stdout)
            print("outputs: " + " ".join(f"{k}={v}" for k, v in outputs.items()))
        _emit_dot(args, graph, point)
        return EXIT_NEGATIVE
    print(json.dumps({"verdict": "unknown", "reason": result.reason}) if as_json else f"unknown ({result.reason})")
    return EXIT_UNKNOWN


def cmd_sat(args) -> int:
    formula = _read_formula(args)
    return _sat_result(args, solve(formula, DeltaMode.parse(args.delta), _limits(args)))


def cmd_compile(args) -> int:
    doc = _load_doc(args.instance)
    if args.arith:
        doc.setdefault("gnn", {})["arith"] = args.arith
    instance = lvp_from_json(doc)
    print(to_text(compile_lvp(instance).formula))
    return EXIT_POSITIVE


def cmd_eval(args) -> int:
    model = gnn_from_json(_load_doc(args.gnn))
    graph_doc = _load_doc(args.graph)
    graph, point = graph_from_json(graph_doc, model.spec)
    if args.point:
        point = args.point
    if point is None:
        raise GnnCheckError("the graph document has no point; pass --point")
    from .graph import PointedGraph

    outputs = gnn_eval(model, PointedGraph(graph, point))
    if args.output == "json":
        print(json.dumps({name: str(v) for name, v in zip(model.output_features, outputs)}))
    else:
        print("(" + ", ".join(str(v) for v in outputs) + ")")
    return EXIT_POSITIVE


def cmd_oracle_sat(args) -> int:
    formula = _read_formula(args)
    time_limit = args.time_limit
    if time_limit is None and os.environ.get("QGNN_TIME_LIMIT"):
        time_limit = float(os.environ["QGNN_TIME_LIMIT"])
    verdict = brute_force_sat(
        formula,
        _delta_for_oracle(args.delta),
        depth=args.depth,
        time_limit=time_limit,
        max_steps=args.term_limit or 5_000_000,
    )
    return _sat_result(args, verdict)


def cmd_fuzz(args) -> int:
    spec = ArithmeticSpec.parse(args.arith)
    results = run_differential(
        args.cases,
        args.seed,
        spec,
        _delta_for_oracle(args.delta),
        agg_kinds=tuple(args.agg.split(",")),
        max_agg_depth=args.agg_depth,
    )
    disagreements = [r for r in results if not r.agree]
    for r in disagreements:
        print(f"case {r.index}: tableau={r.tableau} oracle={r.oracle}")
        print(f"  {r.text}")
    summary = f"{len(results)} cases, {len(disagreements)} disagreements"
    if args.output == "json":
        print(json.dumps({"cases": len(results), "disagreements": len(disagreements)}))
    else:
        print(summary)
    return EXIT_POSITIVE if not disagreements else EXIT_NEGATIVE


def _add_common(parser, with_arith=True, with_delta=True):
    if with_arith:
        parser.add_argument("--arith", help="arithmetic spec, satint:<a> or fixed:<bits>:<decimals>")
    if with_delta:
        parser.add_argument("--delta", help="arity bound: unary:<k>, binary:<k> or inf")
    parser.add_argument("--time-limit", type=float, default=None, help="seconds before giving up (default: QGNN_TIME_LIMIT)")
    parser.add_argument("--term-limit", type=int, default=None, help="created-term budget before giving up")
    parser.add_argument("--max-arity", type=int, default=None, help="practical cap on guessed arities")
    parser.add_argument("--output", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnncheck", description="Verification toolkit for quantized GNNs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="decide an LVP instance")
    p.add_argument("instance", help="LVP JSON document")
    _add_common(p)
    p.add_argument("--emit-dot", help="write the counterexample as DOT")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sat", help="decide satisfiability of a formula")
    p.add_argument("formula", help="formula text or a file containing it")
    _add_common(p)
    p.add_argument("--alpha", default="relu", choices=("relu", "truncrelu", "id"), help="activation the alpha token resolves to")
    p.add_argument("--emit-dot", help="write the model as DOT")
    p.set_defaults(func=cmd_sat, require_arith=True, require_delta=True)

    p = sub.add_parser("compile", help="print the formula an LVP instance reduces to")
    p.add_argument("instance")
    p.add_argument("--arith")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="run a GNN forward on a pointed graph")
    p.add_argument("gnn")
    p.add_argument("graph")
    p.add_argument("--point", help="evaluation point (defaults to the graph document's)")
    p.add_argument("--output", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_eval)

    oracle = sub.add_parser("oracle", help="reference procedures")
    osub = oracle.add_subparsers(dest="oracle_command", required=True)
    p = osub.add_parser("sat", help="decide satisfiability by brute force")
    p.add_argument("formula")
    _add_common(p)
    p.add_argument("--alpha", default="relu", choices=("relu", "truncrelu", "id"))
    p.add_argument("--depth", type=int, default=None, help="tree depth (defaults to the aggregation depth)")
    p.add_argument("--emit-dot", help="write the model as DOT")
    p.set_defaults(func=cmd_oracle_sat, require_arith=True, require_delta=True)

    p = sub.add_parser("fuzz", help="differential test: tableau vs brute force")
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--arith", default="satint:3")
    p.add_argument("--delta", default="unary:2")
    p.add_argument("--agg", default="sum", help="comma-separated aggregation kinds to generate")
    p.add_argument("--agg-depth", type=int, default=2)
    p.add_argument("--output", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_fuzz)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if getattr(args, "require_arith", False) and not args.arith:
        print("error: --arith is required for this command", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "require_delta", False) and not args.delta:
        print("error: --delta is required for this command", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except GnnCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
