"""Direct semantics of formulas on pointed graphs, plus a brute-force oracle.

The oracle decides satisfiability by exhaustively enumerating all labeled
trees of bounded depth and arity.  Trees are enumerated bottom-up through the
profiles of values their roots can produce, which covers exactly the same
space as listing trees one by one but shares identical subtrees; the witness
reconstruction keeps the first tree in canonical order (arity ascending, then
labels ascending).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

from .arith import ArithmeticSpec
from .errors import UsageError
from .formula import Arena, Formula, agg_depth, features_of
from .graph import LabeledGraph, PointedGraph


@dataclass
class Sat:
    model: PointedGraph
    trace: dict[str, dict[int, int]] | None = None


@dataclass
class Unsat:
    pass


@dataclass
class Unknown:
    reason: str  # "timeout" | "node-limit" | "depth-limit"


Verdict = Sat | Unsat | Unknown


def eval_payload(graph: LabeledGraph, node: str, arena: Arena, eid: int, _memo=None) -> int:
    """Value (as payload) of an expression at a node."""
    if _memo is None:
        _memo = {}
    key = (node, eid)
    if key in _memo:
        return _memo[key]
    spec = arena.spec
    expr = arena.expr(eid)
    tag = expr[0]
    if tag == "const":
        out = expr[1]
    elif tag == "feat":
        out = graph.label_payload(node, expr[1])
    elif tag == "act":
        out = spec.act_p(expr[1], eval_payload(graph, node, arena, expr[2], _memo))
    elif tag == "scale":
        out = spec.mul_p(expr[1], eval_payload(graph, node, arena, expr[2], _memo))
    elif tag == "sum":
        out = spec.add_p(
            eval_payload(graph, node, arena, expr[1], _memo),
            eval_payload(graph, node, arena, expr[2], _memo),
        )
    else:  # agg
        kind, child, weights = expr[1], expr[2], expr[3]
        succs = graph.successors(node)
        vals = [eval_payload(graph, s, arena, child, _memo) for s in succs]
        if kind == "sum":
            out = spec.fold_add(vals)
        elif kind == "mean":
            out = spec.div_p(spec.fold_add(vals), len(vals)) if vals else 0
        elif kind == "max":
            out = max(vals) if vals else 0
        else:  # weighted
            if len(weights) < len(vals):
                raise UsageError(
                    f"weighted aggregation has {len(weights)} weights but node {node} has {len(vals)} successors"
                )
            out = spec.fold_add(spec.mul_p(w, v) for w, v in zip(weights, vals))
    _memo[key] = out
    return out


def eval_expr(graph: LabeledGraph, node: str, arena: Arena, eid: int):
    from .arith import Value

    return Value(eval_payload(graph, node, arena, eid), arena.spec)


def check(graph: LabeledGraph, node: str, f: Formula, fid: int | None = None) -> bool:
    """Truth of a formula at a pointed graph."""
    arena = f.arena
    memo: dict = {}

    def truth(g: int) -> bool:
        fnode = arena.formula(g)
        tag = fnode[0]
        if tag == "geq":
            return eval_payload(graph, node, arena, fnode[1], memo) >= fnode[2]
        if tag == "eq":
            return eval_payload(graph, node, arena, fnode[1], memo) == fnode[2]
        if tag == "not":
            return not truth(fnode[1])
        if tag == "and":
            return truth(fnode[1]) and truth(fnode[2])
        return truth(fnode[1]) or truth(fnode[2])

    return truth(f.root if fid is None else fid)


# -- brute-force satisfiability oracle ----------------------------------------


class _Budget:
    def __init__(self, max_steps: int | None, time_limit: float | None):
        self.max_steps = max_steps
        self.deadline = None if time_limit is None else time.monotonic() + time_limit
        self.steps = 0

    def tick(self, n: int = 1):
        self.steps += n
        if self.max_steps is not None and self.steps > self.max_steps:
            raise _OracleLimit("node-limit")
        if self.deadline is not None and self.steps % 4096 < n and time.monotonic() > self.deadline:
            raise _OracleLimit("timeout")


class _OracleLimit(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _TreeSearch:
    def __init__(self, f: Formula, delta: int, budget: _Budget):
        self.arena = f.arena
        self.spec: ArithmeticSpec = f.arena.spec
        self.root_fid = f.root
        self.features = features_of(f)
        self.budget = budget
        _, eids = self.arena.reachable(f.root)
        self.aggs = [
            (eid, *self.arena.expr(eid)[1:])  # (eid, kind, child, weights)
            for eid in sorted(eids)
            if self.arena.expr(eid)[0] == "agg"
        ]
        self.delta = delta
        for _, kind, _, weights in self.aggs:
            if kind == "weighted":
                self.delta = min(self.delta, len(weights))
        self.labels = [
            dict(zip(self.features, combo))
            for combo in itertools.product(self.spec.values_p(), repeat=len(self.features))
        ]

    def eval_with_aggs(self, eid: int, label: dict[str, int], aggvals: dict[int, int], memo: dict) -> int:
        if eid in memo:
            return memo[eid]
        expr = self.arena.expr(eid)
        tag = expr[0]
        if tag == "const":
            out = expr[1]
        elif tag == "feat":
            out = label[expr[1]]
        elif tag == "act":
            out = self.spec.act_p(expr[1], self.eval_with_aggs(expr[2], label, aggvals, memo))
        elif tag == "scale":
            out = self.spec.mul_p(expr[1], self.eval_with_aggs(expr[2], label, aggvals, memo))
        elif tag == "sum":
            out = self.spec.add_p(
                self.eval_with_aggs(expr[1], label, aggvals, memo),
                self.eval_with_aggs(expr[2], label, aggvals, memo),
            )
        else:
            out = aggvals[eid]
        memo[eid] = out
        return out

    def profile(self, label: dict[str, int], aggvals: dict[int, int]) -> tuple[int, ...]:
        """Values of every aggregation child expression at a node."""
        memo: dict = {}
        return tuple(self.eval_with_aggs(child, label, aggvals, memo) for _, _, child, _ in self.aggs)

    def truth(self, label: dict[str, int], aggvals: dict[int, int]) -> bool:
        memo: dict = {}

        def go(fid: int) -> bool:
            node = self.arena.formula(fid)
            tag = node[0]
            if tag == "geq":
                return self.eval_with_aggs(node[1], label, aggvals, memo) >= node[2]
            if tag == "eq":
                return self.eval_with_aggs(node[1], label, aggvals, memo) == node[2]
            if tag == "not":
                return not go(node[1])
            if tag == "and":
                return go(node[1]) and go(node[2])
            return go(node[1]) or go(node[2])

        return go(self.root_fid)

    def _step_acc(self, acc: tuple, prof: tuple[int, ...], pos: int) -> tuple:
        """Advance all aggregation accumulators by one successor (1-based pos)."""
        out = []
        for j, (_, kind, _, weights) in enumerate(self.aggs):
            a = acc[j]
            v = prof[j]
            if kind in ("sum", "mean"):
                out.append(self.spec.add_p(a, v))
            elif kind == "max":
                out.append(v if a is None else max(a, v))
            else:
                out.append(self.spec.add_p(a, self.spec.mul_p(weights[pos - 1], v)))
        return tuple(out)

    def _init_acc(self) -> tuple:
        return tuple(None if kind == "max" else 0 for _, kind, _, _ in self.aggs)

    def _finalize(self, acc: tuple, arity: int) -> dict[int, int]:
        vals = {}
        for j, (eid, kind, _, _) in enumerate(self.aggs):
            a = acc[j]
            if arity == 0:
                vals[eid] = 0
            elif kind == "mean":
                vals[eid] = self.spec.div_p(a, arity)
            else:
                vals[eid] = a
        return vals

    def reachable_states(self, arity: int, prev_level: dict) -> dict:
        """Accumulator values reachable with `arity` ordered children, with first witnesses."""
        states: dict[tuple, tuple] = {self._init_acc(): ()}
        for pos in range(1, arity + 1):
            nxt: dict[tuple, tuple] = {}
            for acc, kids in states.items():
                for prof in prev_level:
                    self.budget.tick()
                    new = self._step_acc(acc, prof, pos)
                    if new not in nxt:
                        nxt[new] = kids + (prof,)
            states = nxt
        return states

    def level_profiles(self, prev_level: dict | None) -> dict:
        """Profiles achievable at the root of a tree of the next depth."""
        out: dict[tuple[int, ...], tuple] = {}
        arities = [0] if prev_level is None else range(0, self.delta + 1)
        for arity in arities:
            states = {self._init_acc(): ()} if arity == 0 else self.reachable_states(arity, prev_level)
            for acc, kids in states.items():
                aggvals = self._finalize(acc, arity)
                for label in self.labels:
                    self.budget.tick()
                    prof = self.profile(label, aggvals)
                    if prof not in out:
                        out[prof] = (label, arity, kids)
        return out

    def search(self, depth: int):
        levels: list[dict] = [self.level_profiles(None)]
        for _ in range(max(0, depth - 1)):
            levels.append(self.level_profiles(levels[-1]))
        prev = levels[depth - 1] if depth > 0 else None
        for arity in range(0, (self.delta if depth > 0 else 0) + 1):
            states = {self._init_acc(): ()} if arity == 0 else self.reachable_states(arity, prev)
            for acc, kids in states.items():
                aggvals = self._finalize(acc, arity)
                for label in self.labels:
                    self.budget.tick()
                    if self.truth(label, aggvals):
                        return (label, arity, kids), levels
        return None, levels

    def build_tree(self, witness, levels, depth: int):
        nodes: list[str] = []
        edges: list[tuple[str, str]] = []
        labels: dict[str, dict[str, int]] = {}
        trace: dict[str, dict[int, int]] = {}

        def emit(name: str, wit, level: int):
            label, arity, kids = wit
            nodes.append(name)
            labels[name] = dict(label)
            aggvals_acc = self._init_acc()
            for pos, prof in enumerate(kids, start=1):
                aggvals_acc = self._step_acc(aggvals_acc, prof, pos)
            aggvals = self._finalize(aggvals_acc, arity)
            memo: dict = {}
            _, eids = self.arena.reachable(self.root_fid)
            trace[name] = {eid: self.eval_with_aggs(eid, label, aggvals, memo) for eid in sorted(eids)}
            for pos, prof in enumerate(kids, start=1):
                child_name = f"{name}.{pos}"
                edges.append((name, child_name))
                emit(child_name, levels[level - 1][prof], level - 1)

        emit("v", witness, depth)
        graph = LabeledGraph(self.spec, self.features, tuple(nodes), tuple(edges), labels)
        return PointedGraph(graph, "v"), trace


def brute_force_sat(
    f: Formula,
    delta: int,
    depth: int | None = None,
    *,
    max_steps: int | None = 5_000_000,
    time_limit: float | None = None,
) -> Verdict:
    """Exhaustive satisfiability over labeled trees of bounded depth and arity.

    Complete for trees of depth agg_depth(f): a satisfiable formula always has
    such a tree model, so Unsat verdicts are decisive.  When an explicit lower
    depth is forced and no model is found the verdict is Unknown.
    """
    if delta < 0:
        raise UsageError(f"arity bound must be >= 0, got {delta}")
    needed = agg_depth(f)
    d = needed if depth is None else depth
    budget = _Budget(max_steps, time_limit)
    search = _TreeSearch(f, delta, budget)
    try:
        witness, levels = search.search(d)
    except _OracleLimit as hit:
        return Unknown(hit.reason)
    if witness is None:
        return Unsat() if d >= needed else Unknown("depth-limit")
    model, trace = search.build_tree(witness, levels, d)
    if not check(model.graph, model.point, f):
        raise RuntimeError("oracle produced a model that fails its own formula")
    return Sat(model, trace)
