"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines and timings.
"""

import random
import time
from contextlib import contextmanager

import pytest

from gnncheck.arith import ArithmeticSpec, Value, act_inverses, add_inverses, mul_inverses, values_geq, values_lt
from gnncheck.compile import compile_generalized, compile_lvp, compile_gnn
from gnncheck.formula import Arena, parse, rewrite_truncrelu, structural_key, to_text
from gnncheck.fuzz import random_formula, run_differential
from gnncheck.gnn import DeltaMode, Fnn, FnnLayer, GnnLayer, GnnModel, LinIneq, LvpInstance, eval_linineq, gnn_eval
from gnncheck.graph import LabeledGraph, PointedGraph
from gnncheck.semantics import Sat, Unsat, brute_force_sat, check
from gnncheck.tableau import Invalid, SolveLimits, solve, verify_lvp

from conftest import (
    FIX32_4,
    SAT7,
    message_counterexample,
    message_instance,
    message_model,
    two_layer_graph,
    two_layer_instance,
    two_layer_model,
)
from test_compile import example_two_layer, random_model


@contextmanager
def criterion(number: int, description: str, budget_seconds: float):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number}: FAIL ({description})")
        raise
    elapsed = time.monotonic() - start
    status = "PASS" if elapsed < budget_seconds else "FAIL (over time budget)"
    print(f"ACCEPTANCE {number}: {status} ({description}; {elapsed:.2f}s of {budget_seconds:.0f}s)")
    assert elapsed < budget_seconds


def test_criterion_1_forward_evaluation_golden():
    with criterion(1, "two-layer forward evaluation golden values", 1.0):
        for a in (7, 31):
            spec = ArithmeticSpec.satint(a)
            model = two_layer_model(spec)
            out = gnn_eval(model, two_layer_graph(spec))
            assert [v.payload for v in out] == [5, 0, 1]
            single = LabeledGraph(spec, ("x1", "x2"), ("v",), (), {"v": {"x1": 0, "x2": 0}})
            out = gnn_eval(model, PointedGraph(single, "v"))
            assert [v.payload for v in out] == [0, 2, 0]


def test_criterion_2_fixed_point_evaluation_golden():
    with criterion(2, "message-count model on the four-successor graph", 1.0):
        out = gnn_eval(message_model(), message_counterexample())
        assert [str(v) for v in out] == ["0.8000", "1.0000"]


def test_criterion_3_worked_instance_satisfiable():
    with criterion(3, "worked 32-bit instance is satisfiable with a checked model", 60.0):
        inst = message_instance()
        compiled = compile_lvp(inst)
        verdict = solve(compiled.formula, DeltaMode.unary(5), SolveLimits(time_limit=55))
        assert isinstance(verdict, Sat)
        model = verdict.model
        assert check(model.graph, model.point, compiled.formula)
        labels = {
            n: {"x1": model.graph.labels[n]["x1"]} for n in model.graph.nodes
        }
        projected = PointedGraph(
            LabeledGraph(FIX32_4, ("x1",), model.graph.nodes, model.graph.edges, labels),
            model.point,
        )
        outputs = gnn_eval(inst.model, projected)
        assert outputs[0].payload < FIX32_4.parse_literal("0.9")


def test_criterion_4_aggregate_counting_suite():
    with criterion(4, "aggregate counting: arities and unsatisfiable sums", 10.0):
        spec = ArithmeticSpec.satint(15)
        f = parse("agg(1) = 4", spec)
        verdict = solve(f, DeltaMode.unary(5))
        assert isinstance(verdict, Sat)
        assert verdict.model.graph.out_degree(verdict.model.point) == 4
        assert isinstance(solve(f, DeltaMode.unary(2)), Unsat)
        assert isinstance(brute_force_sat(f, delta=2), Unsat)
        g = parse("agg(3) = 10", spec)
        for mode in (DeltaMode.unary(5), DeltaMode.binary(5), DeltaMode.infinite()):
            assert isinstance(solve(g, mode), Unsat)


def scaled_message_model(spec):
    w = spec.parse_literal
    comb = Fnn((FnnLayer(((w("0.1"), 0), (0, w("0.1"))), (0, 0), ("relu", "id")),))
    return GnnModel(spec, (GnnLayer("sum", comb),), Fnn.identity(2, spec), ("x1",), ("y1", "y2"))


def scaled_message_twin(spec):
    w = spec.parse_literal
    comb = Fnn((FnnLayer(((0, w("0.1")),), (0,), ("id",)),))
    return GnnModel(spec, (GnnLayer("sum", comb),), Fnn.identity(1, spec), ("x1",), ("y1",))


def test_criterion_5_lvp_verdicts():
    with criterion(5, "two-layer instance invalid; scaled property valid", 130.0):
        inst = two_layer_instance()
        t0 = time.monotonic()
        result = verify_lvp(inst, SolveLimits(time_limit=10))
        assert time.monotonic() - t0 < 10
        assert isinstance(result, Invalid)
        spec = inst.model.spec
        point = result.counterexample.point
        labels = {
            f: result.counterexample.graph.label_payload(point, f)
            for f in inst.model.input_features
        }
        assert all(eval_linineq(q, labels, spec) for q in inst.l_in)
        outs = dict(zip(inst.model.output_features, (v.payload for v in result.outputs)))
        assert not all(eval_linineq(q, outs, spec) for q in inst.l_out)

        # scaled stand-in for the full-precision unsatisfiability claims
        spec16 = ArithmeticSpec.fixed(16, 1)
        compiled = compile_generalized(
            scaled_message_model(spec16),
            parse("agg(x1) >= 10", spec16),
            parse("y2 >= 1.0", spec16),
        )
        assert isinstance(solve(compiled.formula, DeltaMode.unary(5), SolveLimits(time_limit=110)), Unsat)

        # brute-force agreement on the widest oracle-feasible twin
        spec6 = ArithmeticSpec.fixed(6, 1)
        twin = compile_generalized(
            scaled_message_twin(spec6),
            parse("agg(x1) >= 1.0", spec6),
            parse("y1 >= 0.1", spec6),
        )
        assert isinstance(solve(twin.formula, DeltaMode.unary(5), SolveLimits(time_limit=30)), Unsat)
        assert isinstance(brute_force_sat(twin.formula, delta=5, time_limit=60), Unsat)


def test_criterion_6_differential_suite():
    with criterion(6, "500 random formulas: tableau, oracle and modes agree", 600.0):
        results = run_differential(250, seed=61, spec=ArithmeticSpec.satint(2), delta=2)
        results += run_differential(250, seed=62, spec=ArithmeticSpec.satint(3), delta=2)
        assert len(results) == 500
        disagreements = [r for r in results if not r.agree]
        assert not disagreements, disagreements[:3]


def test_criterion_7_truncated_relu_rewrite():
    with criterion(7, "truncated ReLU rewrite: pointwise and verdict equality", 120.0):
        for spec in (ArithmeticSpec.satint(8), ArithmeticSpec.fixed(16, 1)):
            one = spec.one
            for x in spec.values_p():
                rewritten = spec.act_p(
                    "relu",
                    spec.add_p(
                        spec.act_p("relu", x),
                        spec.mul_p(-one, spec.act_p("relu", spec.add_p(x, -one))),
                    ),
                )
                assert rewritten == spec.act_p("truncrelu", x)
        spec = ArithmeticSpec.satint(3)
        rng = random.Random(71)
        checked = 0
        while checked < 100:
            f = random_formula(rng, spec, max_agg_depth=1, activations=("truncrelu",))
            _, eids = f.arena.reachable(f.root)
            if not any(
                f.arena.expr(e)[0] == "act" and f.arena.expr(e)[1] == "truncrelu" for e in eids
            ):
                continue
            g = rewrite_truncrelu(f)
            a = brute_force_sat(f, delta=2)
            b = brute_force_sat(g, delta=2)
            assert type(a) is type(b), to_text(f)
            checked += 1


def test_criterion_8_compile_shape_and_size():
    with criterion(8, "compiled recurrence structure and linear size", 60.0):
        arena = Arena(ArithmeticSpec.satint(15))
        fid, outputs = compile_gnn(arena, example_two_layer())
        expected = Arena(ArithmeticSpec.satint(15))
        xi, xip = expected.feature("x"), expected.feature("xp")

        def layer_step(a, b):
            aggs = (expected.agg("sum", a), expected.agg("sum", b))
            first = expected.act(
                "relu",
                expected.add(
                    expected.add(
                        expected.add(expected.add(a, expected.scale(2, b)), expected.scale(-3, aggs[0])),
                        expected.scale(4, aggs[1]),
                    ),
                    expected.const(5),
                ),
            )
            second = expected.act(
                "relu",
                expected.add(
                    expected.add(
                        expected.add(
                            expected.add(expected.scale(6, a), expected.scale(7, b)),
                            expected.scale(8, aggs[0]),
                        ),
                        expected.scale(-9, aggs[1]),
                    ),
                    expected.const(10),
                ),
            )
            return first, second

        xi1, xip1 = layer_step(xi, xip)
        xi2, xip2 = layer_step(xi1, xip1)
        out_expr = expected.act("relu", expected.add(expected.add(xi2, xip2), expected.const(-2)))
        want = expected.eq(expected.add(out_expr, expected.scale(-1, expected.feature("y"))), 0)
        assert structural_key(arena, fid) == structural_key(expected, want)

        rng = random.Random(81)
        spec = ArithmeticSpec.satint(8)
        points = []
        for _ in range(25):
            model = random_model(rng, spec, max_layers=4, max_dim=3)
            inst = LvpInstance(
                model,
                (LinIneq(((model.input_features[0], spec.one),), 0),),
                (LinIneq(((model.output_features[0], spec.one),), 0),),
                DeltaMode.unary(2),
            )
            compiled = compile_lvp(inst)
            budget = model.size() + len(inst.l_in) + len(inst.l_out)
            size = compiled.formula.arena.dag_size(compiled.formula.root)
            points.append((budget, size))
            assert size <= 8 * budget + 20
        n = len(points)
        mean_x = sum(p[0] for p in points) / n
        mean_y = sum(p[1] for p in points) / n
        slope = sum((x - mean_x) * (y - mean_y) for x, y in points) / sum(
            (x - mean_x) ** 2 for x, y in points
        )
        assert 0 < slope <= 8, slope


def test_criterion_9_inverse_enumerator_completeness():
    with criterion(9, "inverse streams equal brute force over satint:3", 10.0):
        spec = ArithmeticSpec.satint(3)
        values = [Value(p, spec) for p in spec.values_p()]
        for k in values:
            got_pairs = [(a.payload, b.payload) for a, b in add_inverses(k)]
            want_pairs = [
                (a.payload, b.payload)
                for a in values
                for b in values
                if spec.add_p(a.payload, b.payload) == k.payload
            ]
            assert sorted(got_pairs) == sorted(want_pairs)
            assert got_pairs == sorted(got_pairs)
            for c in values:
                got = [v.payload for v in mul_inverses(c, k)]
                want = [p for p in spec.values_p() if spec.mul_p(c.payload, p) == k.payload]
                assert got == want
            for name in ("relu", "truncrelu", "id"):
                got = [v.payload for v in act_inverses(name, k)]
                want = [p for p in spec.values_p() if spec.act_p(name, p) == k.payload]
                assert got == want
            assert [v.payload for v in values_geq(k)] == [
                p for p in spec.values_p() if p >= k.payload
            ]
            assert [v.payload for v in values_lt(k)] == sorted(
                (p for p in spec.values_p() if p < k.payload), reverse=True
            )


def test_criterion_10_aggregation_variants():
    with criterion(10, "mean/max/weighted differential agreement", 300.0):
        for kind, seed in (("mean", 101), ("max", 102), ("weighted", 103)):
            results = run_differential(
                100,
                seed=seed,
                spec=ArithmeticSpec.satint(2),
                delta=2,
                agg_kinds=(kind,),
                max_agg_depth=1,
            )
            disagreements = [r for r in results if not r.agree]
            assert not disagreements, (kind, disagreements[:3])
