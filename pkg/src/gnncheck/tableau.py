"""Tableau decision procedure for formula satisfiability and LVP verification.

A branch keeps one value per (word, expression) pair; asserting a second,
different value clashes the branch.  The engine alternates

1. saturation: all deterministic consequences (boolean decomposition,
   forward evaluation of ground subexpressions, single-candidate inversions),
2. a choice point, explored depth first in a fixed order: boolean splits,
   then atom value guesses in the streams' canonical orders, then composite
   inversions, then successor work (arities ascending from 0, successor
   children one at a time).

Candidate streams are pruned by sound interval reasoning (value ranges of
subexpressions and reachability of aggregation targets); pruned candidates
provably cannot be completed, so the enumeration stays exhaustive.
Aggregation constraints walk their successors incrementally with a running
accumulator, which serves both the unary rule and the binary/unbounded rules;
the arity modes differ only in the arity cap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .arith import ArithmeticSpec, Value
from .compile import compile_lvp
from .errors import UsageError
from .formula import Arena, Formula
from .gnn import DeltaMode, LvpInstance, eval_linineq, gnn_eval
from .graph import LabeledGraph, PointedGraph
from .semantics import Sat, Unknown, Unsat, Verdict, check

Word = tuple[int, ...]


@dataclass
class SolveLimits:
    time_limit: float | None = None
    max_terms: int | None = None
    max_arity: int | None = None


@dataclass
class Valid:
    pass


@dataclass
class Invalid:
    counterexample: PointedGraph
    outputs: list[Value]


LvpVerdict = Valid | Invalid | Unknown


class _Clash(Exception):
    pass


class _LimitHit(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _State:
    __slots__ = ("values", "arity", "bounds", "bools", "atoms", "obligations", "walks", "walked")

    def __init__(self):
        self.values: dict[tuple[Word, int], int] = {}
        self.arity: dict[Word, int] = {}
        self.bounds: dict[tuple[Word, int], tuple[int, int]] = {}
        self.bools: list[tuple[Word, int, bool]] = []
        self.atoms: list[tuple[Word, int, bool]] = []
        self.obligations: dict[tuple[Word, int], bool] = {}
        self.walks: list[tuple] = []  # (word, agg_eid, pos, acc)
        self.walked: set[tuple[Word, int]] = set()

    def fork(self) -> "_State":
        child = _State.__new__(_State)
        child.values = dict(self.values)
        child.arity = dict(self.arity)
        child.bounds = dict(self.bounds)
        child.bools = list(self.bools)
        child.atoms = list(self.atoms)
        child.obligations = dict(self.obligations)
        child.walks = list(self.walks)
        child.walked = set(self.walked)
        return child


class _Search:
    def __init__(self, formula: Formula, delta: DeltaMode, limits: SolveLimits):
        self.formula = formula
        self.arena: Arena = formula.arena
        self.spec: ArithmeticSpec = formula.spec
        self.limits = limits
        self.deadline = None if limits.time_limit is None else time.monotonic() + limits.time_limit
        self.ticks = 0
        # arity cap: 2^n * |formula| successors always suffice for distinct
        # summand combinations, so larger guesses are never needed
        combinatorial = (2 ** self.spec.bit_width) * self.arena.dag_size(formula.root)
        if delta.kind == "unary":
            cap = delta.value
        elif delta.kind == "binary":
            cap = min(delta.value, combinatorial)
        else:
            cap = combinatorial
        self.cap_truncated = limits.max_arity is not None and limits.max_arity < cap
        if self.cap_truncated:
            cap = limits.max_arity
        self.arity_cap = cap

    # -- bookkeeping -----------------------------------------------------------

    def tick(self, n: int = 1):
        self.ticks += n
        if self.limits.max_terms is not None and self.ticks > self.limits.max_terms:
            raise _LimitHit("node-limit")
        if self.deadline is not None and self.ticks % 1024 < n and time.monotonic() > self.deadline:
            raise _LimitHit("timeout")

    def assign(self, st: _State, word: Word, eid: int, payload: int):
        """Constrain an expression's value at a word; clash on disagreement."""
        key = (word, eid)
        old = st.values.get(key)
        if old is not None:
            if old != payload:
                raise _Clash()
            return
        self.tick()
        node = self.arena.expr(eid)
        tag = node[0]
        if tag == "const":
            if node[1] != payload:
                raise _Clash()
            return
        bounds = st.bounds.get(key)
        if bounds is not None and not bounds[0] <= payload <= bounds[1]:
            raise _Clash()
        st.values[key] = payload
        if tag != "feat":
            st.obligations[key] = True

    def record(self, st: _State, word: Word, eid: int, payload: int):
        """Memoize a derived (forward-computed) value; clash on disagreement."""
        key = (word, eid)
        old = st.values.get(key)
        if old is not None:
            if old != payload:
                raise _Clash()
            return
        self.tick()
        bounds = st.bounds.get(key)
        if bounds is not None and not bounds[0] <= payload <= bounds[1]:
            raise _Clash()
        st.values[key] = payload

    def tighten(self, st: _State, word: Word, eid: int, lo: int, hi: int) -> bool:
        """Narrow the known interval of an expression, pushing bounds through
        invertible unary chains down to their leaves."""
        key = (word, eid)
        known = st.values.get(key)
        if known is not None:
            if not lo <= known <= hi:
                raise _Clash()
            return False
        old = st.bounds.get(key)
        if old is not None:
            lo, hi = max(lo, old[0]), min(hi, old[1])
            if (lo, hi) == old:
                return False
        if lo > hi:
            raise _Clash()
        st.bounds[key] = (lo, hi)
        node = self.arena.expr(eid)
        tag = node[0]
        if tag == "const":
            if not lo <= node[1] <= hi:
                raise _Clash()
        elif tag == "act":
            pre = self.spec.act_preimage_interval(node[1], lo, hi)
            if pre is None:
                raise _Clash()
            self.tighten(st, word, node[2], pre[0], pre[1])
        elif tag == "scale" and node[1] != 0:
            pre = self.spec.mul_preimage(node[1], lo, hi)
            if pre is None:
                raise _Clash()
            self.tighten(st, word, node[2], pre[0], pre[1])
        return True

    def forward(self, st: _State, word: Word, eid: int) -> int | None:
        """Evaluate an expression at a word from the store, memoizing results."""
        key = (word, eid)
        if key in st.values:
            return st.values[key]
        node = self.arena.expr(eid)
        tag = node[0]
        spec = self.spec
        out: int | None = None
        if tag == "const":
            out = node[1]
        elif tag == "feat":
            return None
        elif tag == "act":
            child = self.forward(st, word, node[2])
            if child is not None:
                out = spec.act_p(node[1], child)
        elif tag == "scale":
            if node[1] == 0:
                out = 0
            else:
                child = self.forward(st, word, node[2])
                if child is not None:
                    out = spec.mul_p(node[1], child)
        elif tag == "sum":
            left = self.forward(st, word, node[1])
            right = self.forward(st, word, node[2]) if left is not None else None
            if left is not None and right is not None:
                out = spec.add_p(left, right)
        else:  # agg
            arity = st.arity.get(word)
            if arity is None:
                return None
            kind, child, weights = node[1], node[2], node[3]
            acc: int | None = None if kind == "max" else 0
            for i in range(1, arity + 1):
                v = self.forward(st, word + (i,), child)
                if v is None:
                    return None
                acc = self._step_acc(kind, weights, acc, v, i)
            out = self._finalize_acc(kind, acc, arity)
        if out is not None:
            self.record(st, word, eid, out)
        return out

    def _step_acc(self, kind: str, weights, acc, v: int, pos: int) -> int:
        spec = self.spec
        if kind == "max":
            return v if acc is None else max(acc, v)
        if kind == "weighted":
            if pos > len(weights):
                raise _Clash()  # no weight for this successor: not evaluable
            return spec.add_p(acc, spec.mul_p(weights[pos - 1], v))
        return spec.add_p(acc, v)

    def _finalize_acc(self, kind: str, acc, arity: int) -> int:
        if arity == 0:
            return 0
        if kind == "mean":
            return self.spec.div_p(acc, arity)
        return acc

    def expr_range(self, st: _State, word: Word, eid: int) -> tuple[int, int]:
        """Sound interval over-approximation of the expression's value."""
        key = (word, eid)
        if key in st.values:
            v = st.values[key]
            return v, v
        node = self.arena.expr(eid)
        tag = node[0]
        spec = self.spec
        m = spec.max_payload
        if tag == "const":
            lo, hi = node[1], node[1]
        elif tag in ("feat", "agg"):
            lo, hi = -m, m
        elif tag == "act":
            clo, chi = self.expr_range(st, word, node[2])
            lo, hi = spec.act_p(node[1], clo), spec.act_p(node[1], chi)
        elif tag == "scale":
            clo, chi = self.expr_range(st, word, node[2])
            a, b = spec.mul_p(node[1], clo), spec.mul_p(node[1], chi)
            lo, hi = (a, b) if a <= b else (b, a)
        else:
            lo1, hi1 = self.expr_range(st, word, node[1])
            lo2, hi2 = self.expr_range(st, word, node[2])
            lo, hi = spec.add_p(lo1, lo2), spec.add_p(hi1, hi2)
        bounds = st.bounds.get(key)
        if bounds is not None:
            lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
        return lo, hi

    def structural_range(self, eid: int) -> tuple[int, int]:
        """Interval of the expression's possible values at any fresh word."""
        node = self.arena.expr(eid)
        tag = node[0]
        spec = self.spec
        m = spec.max_payload
        if tag == "const":
            return node[1], node[1]
        if tag in ("feat", "agg"):
            return -m, m
        if tag == "act":
            lo, hi = self.structural_range(node[2])
            return spec.act_p(node[1], lo), spec.act_p(node[1], hi)
        if tag == "scale":
            lo, hi = self.structural_range(node[2])
            a, b = spec.mul_p(node[1], lo), spec.mul_p(node[1], hi)
            return (a, b) if a <= b else (b, a)
        lo1, hi1 = self.structural_range(node[1])
        lo2, hi2 = self.structural_range(node[2])
        return spec.add_p(lo1, lo2), spec.add_p(hi1, hi2)

    # -- saturation -------------------------------------------------------------

    def saturate(self, st: _State):
        progress = True
        while progress:
            progress = False
            progress |= self._saturate_bools(st)
            progress |= self._saturate_atoms(st)
            progress |= self._saturate_obligations(st)

    def _saturate_bools(self, st: _State) -> bool:
        progress = False
        remaining = []
        queue = st.bools
        st.bools = []
        while queue:
            word, fid, sign = queue.pop(0)
            node = self.arena.formula(fid)
            tag = node[0]
            if tag == "not":
                queue.append((word, node[1], not sign))
                progress = True
            elif (tag == "and" and sign) or (tag == "or" and not sign):
                queue.append((word, node[1], sign))
                queue.append((word, node[2], sign))
                progress = True
            elif tag == "eq" and sign:
                self.assign(st, word, node[1], node[2])
                progress = True
            elif tag in ("geq", "eq"):
                st.atoms.append((word, fid, sign))
                progress = True
            else:
                remaining.append((word, fid, sign))
        st.bools = remaining + st.bools
        return progress

    def _saturate_atoms(self, st: _State) -> bool:
        progress = False
        remaining = []
        for word, fid, sign in st.atoms:
            node = self.arena.formula(fid)
            value = self.forward(st, word, node[1])
            k = node[2]
            if value is None:
                m = self.spec.max_payload
                if node[0] == "geq" and sign:
                    progress |= self.tighten(st, word, node[1], k, m)
                elif node[0] == "geq":
                    progress |= self.tighten(st, word, node[1], -m, k - 1)
                elif sign:
                    progress |= self.tighten(st, word, node[1], k, k)
                else:
                    lo, hi = self.expr_range(st, word, node[1])
                    if lo == hi == k:
                        raise _Clash()
                remaining.append((word, fid, sign))
                continue
            progress = True
            holds = value >= k if node[0] == "geq" else value == k
            if holds != sign:
                raise _Clash()
        st.atoms = remaining
        return progress

    def _saturate_obligations(self, st: _State) -> bool:
        progress = False
        for key in list(st.obligations):
            if key not in st.obligations:
                continue
            word, eid = key
            target = st.values[key]
            node = self.arena.expr(eid)
            tag = node[0]
            if tag == "act":
                progress |= self._oblige_unary(st, key, node[2], self.spec.act_preimage(node[1], target))
            elif tag == "scale":
                if node[1] == 0:
                    # 0 * e is 0 whatever e evaluates to
                    if target != 0:
                        raise _Clash()
                    del st.obligations[key]
                    progress = True
                    continue
                progress |= self._oblige_unary(st, key, node[2], self.spec.mul_preimage(node[1], target, target))
            elif tag == "sum":
                progress |= self._oblige_sum(st, key, node)
            else:  # agg
                progress |= self._oblige_agg(st, key, node)
        return progress

    def _oblige_unary(self, st: _State, key, child: int, preimage) -> bool:
        """act/scale: verify a known child, else force a unique preimage."""
        word, eid = key
        target = st.values[key]
        node = self.arena.expr(eid)
        value = self.forward(st, word, child)
        if value is not None:
            got = self.spec.act_p(node[1], value) if node[0] == "act" else self.spec.mul_p(node[1], value)
            if got != target:
                raise _Clash()
            del st.obligations[key]
            return True
        if preimage is None:
            raise _Clash()
        lo, hi = preimage
        clo, chi = self.expr_range(st, word, child)
        lo, hi = max(lo, clo), min(hi, chi)
        if lo > hi:
            raise _Clash()
        if lo == hi:
            self.assign(st, word, child, lo)
            return True
        return False

    def _oblige_sum(self, st: _State, key, node) -> bool:
        word, eid = key
        target = st.values[key]
        left = self.forward(st, word, node[1])
        right = self.forward(st, word, node[2])
        if left is not None and right is not None:
            if self.spec.add_p(left, right) != target:
                raise _Clash()
            del st.obligations[key]
            return True
        if left is None and right is None:
            lo1, hi1 = self.expr_range(st, word, node[1])
            lo2, hi2 = self.expr_range(st, word, node[2])
            if not self.spec.add_p(lo1, lo2) <= target <= self.spec.add_p(hi1, hi2):
                raise _Clash()
            return False
        known, unknown = (left, node[2]) if left is not None else (right, node[1])
        rng = self.spec.add_preimage(known, target, target)
        if rng is None:
            raise _Clash()
        lo, hi = rng
        clo, chi = self.expr_range(st, word, unknown)
        lo, hi = max(lo, clo), min(hi, chi)
        if lo > hi:
            raise _Clash()
        if lo == hi:
            self.assign(st, word, unknown, lo)
            return True
        return False

    def _oblige_agg(self, st: _State, key, node) -> bool:
        word, eid = key
        target = st.values[key]
        arity = st.arity.get(word)
        if arity is None or key in st.walked:
            return False
        kind, child, weights = node[1], node[2], node[3]
        if arity == 0:
            # empty aggregate: every kind folds to 0
            if target != 0:
                raise _Clash()
            del st.obligations[key]
            st.walked.add(key)
            return True
        values = [self.forward(st, word + (i,), child) for i in range(1, arity + 1)]
        if all(v is not None for v in values):
            acc: int | None = None if kind == "max" else 0
            for i, v in enumerate(values, start=1):
                acc = self._step_acc(kind, weights, acc, v, i)
            if self._finalize_acc(kind, acc, arity) != target:
                raise _Clash()
            del st.obligations[key]
            st.walked.add(key)
            return True
        st.walked.add(key)
        del st.obligations[key]
        acc = None if kind == "max" else 0
        st.walks.append((word, eid, 1, acc))
        return True

    # -- choice points -----------------------------------------------------------

    def pick_choice(self, st: _State):
        if st.bools:
            word, fid, sign = st.bools[0]
            node = self.arena.formula(fid)
            return ("bool", 0, word, node, sign)
        deferred = None
        for idx, (word, fid, sign) in enumerate(st.atoms):
            # guessing a value for a sum with several unknown operands feeds
            # nothing; leave such atoms to propagation until the very end
            if deferred is None and self._atom_stuck(st, word, fid):
                deferred = idx
                continue
            return ("atom", idx, word, fid, sign)
        for key in st.obligations:
            if self.arena.expr(key[1])[0] != "agg":
                return self._plan_stuck(st, key)
        if st.walks:
            return ("walk", 0)
        for key in st.obligations:
            if key[0] not in st.arity:
                return ("arity", key[0])
        if deferred is not None:
            word, fid, sign = st.atoms[deferred]
            return ("atom", deferred, word, fid, sign)
        return None

    def _atom_stuck(self, st: _State, word: Word, fid: int) -> bool:
        """True when assigning the atom's expression would hit a sum with two
        unknown operands: guessing a value there cannot propagate."""

        def stuck(eid: int) -> bool:
            node = self.arena.expr(eid)
            tag = node[0]
            if tag in ("const", "feat", "agg"):
                return False
            if tag in ("act", "scale"):
                return self.forward(st, word, node[2]) is None and stuck(node[2])
            left = self.forward(st, word, node[1])
            right = self.forward(st, word, node[2])
            if left is None and right is None:
                return True
            if left is None:
                return stuck(node[1])
            if right is None:
                return stuck(node[2])
            return False

        return stuck(self.arena.formula(fid)[1])

    def _plan_stuck(self, st: _State, key):
        """Resolve a stuck inversion either backward (enumerate the rule's
        witnesses) or forward (ground its first unknown leaf), whichever
        branches less."""
        word, eid = key
        leaf = self._first_unknown_leaf(st, word, eid)
        invert_width = self._invert_width(st, key)
        if leaf is None:
            return ("invert", key)
        if leaf[0] == "arity":
            leaf_width = self.arity_cap + 1
        else:
            leaf_width = self.spec.n_values
        # grounding collapses everything downstream of the leaf, backward
        # inversion tends to cascade; invert only when clearly narrower
        if invert_width <= max(2, leaf_width // 64):
            return ("invert", key)
        if leaf[0] == "arity":
            return ("arity", leaf[1])
        return ("ground", leaf[1], leaf[2])

    def _first_unknown_leaf(self, st: _State, word: Word, eid: int):
        """First unvalued feature or missing arity the expression depends on."""
        node = self.arena.expr(eid)
        tag = node[0]
        if tag == "const":
            return None
        if tag == "feat":
            return None if (word, eid) in st.values else ("feat", word, eid)
        if tag in ("act", "scale"):
            return self._first_unknown_leaf(st, word, node[2])
        if tag == "sum":
            for operand in (node[1], node[2]):
                if self.forward(st, word, operand) is None:
                    found = self._first_unknown_leaf(st, word, operand)
                    if found is not None:
                        return found
            return None
        # agg
        if word not in st.arity:
            return ("arity", word)
        for i in range(1, st.arity[word] + 1):
            succ = word + (i,)
            if self.forward(st, succ, node[2]) is None:
                found = self._first_unknown_leaf(st, succ, node[2])
                if found is not None:
                    return found
        return None

    def _invert_width(self, st: _State, key) -> int:
        """Number of alternatives backward inversion of this obligation would try."""
        word, eid = key
        target = st.values[key]
        node = self.arena.expr(eid)
        tag = node[0]
        if tag in ("act", "scale"):
            pre = (
                self.spec.act_preimage(node[1], target)
                if tag == "act"
                else self.spec.mul_preimage(node[1], target, target)
            )
            if pre is None:
                return 0
            clo, chi = self.expr_range(st, word, node[2])
            return max(0, min(pre[1], chi) - max(pre[0], clo) + 1)
        alo, ahi = self.expr_range(st, word, node[1])
        blo, bhi = self.expr_range(st, word, node[2])
        window = self.spec.sum_left_window(target, blo, bhi)
        if window is None:
            return 0
        return max(0, min(window[1], ahi) - max(window[0], alo) + 1)

    def alternatives(self, st: _State, choice):
        """Deterministic candidate stream for a choice point."""
        kind = choice[0]
        if kind == "bool":
            _, idx, word, node, sign = choice
            yield ("bool_pick", idx, word, node[1], sign)
            yield ("bool_pick", idx, word, node[2], sign)
            return
        if kind == "atom":
            _, idx, word, fid, sign = choice
            node = self.arena.formula(fid)
            eid, k = node[1], node[2]
            lo, hi = self.expr_range(st, word, eid)
            if node[0] == "geq" and sign:
                for v in range(max(k, lo), hi + 1):
                    yield ("set", word, eid, v)
            elif node[0] == "geq":
                for v in range(min(k - 1, hi), lo - 1, -1):
                    yield ("set", word, eid, v)
            else:  # negated eq: any other value
                for v in range(lo, hi + 1):
                    if v != k:
                        yield ("set", word, eid, v)
            return
        if kind == "invert":
            yield from self._invert_alternatives(st, choice[1])
            return
        if kind == "ground":
            _, word, eid = choice
            for v in self.spec.values_p():
                yield ("set", word, eid, v)
            return
        if kind == "walk":
            yield from self._walk_alternatives(st)
            return
        # arity, ascending from 0
        word = choice[1]
        cap = self.arity_cap
        for key in st.obligations:
            if key[0] == word:
                node = self.arena.expr(key[1])
                if node[0] == "agg" and node[1] == "weighted":
                    cap = min(cap, len(node[3]))
        for a in range(0, cap + 1):
            yield ("set_arity", word, a)

    def _invert_alternatives(self, st: _State, key):
        word, eid = key
        target = st.values[key]
        node = self.arena.expr(eid)
        tag = node[0]
        if tag in ("act", "scale"):
            child = node[2]
            pre = (
                self.spec.act_preimage(node[1], target)
                if tag == "act"
                else self.spec.mul_preimage(node[1], target, target)
            )
            if pre is None:
                return
            clo, chi = self.expr_range(st, word, child)
            for v in range(max(pre[0], clo), min(pre[1], chi) + 1):
                yield ("set", word, child, v)
            return
        # sum with two unknown operands: pick the left value, derive partners
        a, b = node[1], node[2]
        alo, ahi = self.expr_range(st, word, a)
        blo, bhi = self.expr_range(st, word, b)
        window = self.spec.sum_left_window(target, blo, bhi)
        if window is None:
            return
        for k1 in range(max(window[0], alo), min(window[1], ahi) + 1):
            partners = self.spec.add_preimage(k1, target, target)
            if partners is None:
                continue
            for k2 in range(max(partners[0], blo), min(partners[1], bhi) + 1):
                yield ("set2", word, a, k1, b, k2)

    def _walk_alternatives(self, st: _State):
        word, eid, pos, acc = st.walks[0]
        node = self.arena.expr(eid)
        kind, child, weights = node[1], node[2], node[3]
        target = st.values[(word, eid)]
        arity = st.arity[word]
        succ = word + (pos,)
        remaining = arity - pos
        known = self.forward(st, succ, child)
        clo, chi = (known, known) if known is not None else self.expr_range(st, succ, child)
        flo, fhi = self.structural_range(child) if remaining else (0, 0)
        if kind in ("sum", "mean"):
            if kind == "sum":
                t = (target, target)
            else:
                t = self.spec.div_preimage(target, arity)
                if t is None:
                    return
            alo, ahi = self._acc_window(t, remaining, flo, fhi)
            rng = self.spec.add_preimage(acc, alo, ahi)
            if rng is None:
                return
            for v in range(max(rng[0], clo), min(rng[1], chi) + 1):
                yield ("walk_step", v)
            return
        if kind == "max":
            if acc is not None and acc > target:
                return
            reach_later = remaining >= 1 and flo <= target <= fhi
            for v in range(clo, min(chi, target) + 1):
                current = v if acc is None else max(acc, v)
                if remaining == 0:
                    if current == target:
                        yield ("walk_step", v)
                elif current == target or reach_later:
                    yield ("walk_step", v)
            return
        # weighted: candidate contribution is mul(w, v)
        if arity > len(weights):
            return
        w = weights[pos - 1]
        if remaining == 0:
            urange = self.spec.add_preimage(acc, target, target)
            if urange is None:
                return
            pre = self.spec.mul_preimage(w, urange[0], urange[1])
            if pre is None:
                return
            for v in range(max(pre[0], clo), min(pre[1], chi) + 1):
                yield ("walk_step", v)
            return
        contribs = []
        for i in range(pos + 1, arity + 1):
            a = self.spec.mul_p(weights[i - 1], flo)
            b = self.spec.mul_p(weights[i - 1], fhi)
            contribs.append((min(a, b), max(a, b)))
        for v in range(clo, chi + 1):
            nxt = self.spec.add_p(acc, self.spec.mul_p(w, v))
            lo_chain, hi_chain = nxt, nxt
            for c_lo, c_hi in contribs:
                lo_chain = self.spec.add_p(lo_chain, c_lo)
                hi_chain = self.spec.add_p(hi_chain, c_hi)
            if lo_chain <= target <= hi_chain:
                yield ("walk_step", v)

    def _acc_window(self, t: tuple[int, int], remaining: int, clo: int, chi: int) -> tuple[int, int]:
        """Accumulator values from which the target interval stays reachable."""
        m = self.spec.max_payload
        t_lo, t_hi = t
        if clo > 0 and t_hi == m:
            hi = m
        else:
            hi = t_hi - remaining * clo
        if chi < 0 and t_lo == -m:
            lo = -m
        else:
            lo = t_lo - remaining * chi
        return max(lo, -m), min(hi, m)

    def apply(self, st: _State, alternative):
        kind = alternative[0]
        if kind == "bool_pick":
            _, idx, word, fid, sign = alternative
            st.bools.pop(idx)
            st.bools.append((word, fid, sign))
        elif kind == "set":
            _, word, eid, v = alternative
            self.assign(st, word, eid, v)
        elif kind == "set2":
            _, word, a, va, b, vb = alternative
            self.assign(st, word, a, va)
            self.assign(st, word, b, vb)
        elif kind == "set_arity":
            _, word, a = alternative
            st.arity[word] = a
        else:  # walk_step
            word, eid, pos, acc = st.walks.pop(0)
            node = self.arena.expr(eid)
            kind_, child, weights = node[1], node[2], node[3]
            v = alternative[1]
            self.assign(st, word + (pos,), child, v)
            acc = self._step_acc(kind_, weights, acc, v, pos)
            arity = st.arity[word]
            if pos == arity:
                final = self._finalize_acc(kind_, acc, arity)
                if final != st.values[(word, eid)]:
                    raise _Clash()
            else:
                st.walks.append((word, eid, pos + 1, acc))

    # -- search -------------------------------------------------------------------

    def attempt(self, st: _State) -> _State | None:
        try:
            self.saturate(st)
            choice = self.pick_choice(st)
        except _Clash:
            return None
        if choice is None:
            return st
        candidates = self.alternatives(st, choice)
        while True:
            try:
                alternative = next(candidates)
            except StopIteration:
                return None
            except _Clash:
                # enumeration itself exposed a contradiction in this branch
                return None
            self.tick()
            child = st.fork()
            try:
                self.apply(child, alternative)
            except _Clash:
                continue
            result = self.attempt(child)
            if result is not None:
                return result

    def extract_model(self, st: _State) -> tuple[PointedGraph, dict[str, dict[int, int]]]:
        words: set[Word] = {()}
        for word, _ in st.values:
            words.add(word)
        for word, arity in st.arity.items():
            words.add(word)
            for i in range(1, arity + 1):
                words.add(word + (i,))
        for word in list(words):
            while word:
                word = word[:-1]
                words.add(word)
        ordered = sorted(words, key=lambda w: (len(w), w))
        names = {w: "v" + ".".join(str(i) for i in w) if w else "v" for w in ordered}
        features = self.formula.features
        feat_ids = {f: self.arena._expr_ids.get(("feat", f)) for f in features}
        labels = {}
        for w in ordered:
            labels[names[w]] = {
                f: st.values.get((w, feat_ids[f]), 0) if feat_ids[f] is not None else 0
                for f in features
            }
        edges = []
        for w in ordered:
            for i in range(1, st.arity.get(w, 0) + 1):
                edges.append((names[w], names[w + (i,)]))
        graph = LabeledGraph(self.spec, features, tuple(names[w] for w in ordered), tuple(edges), labels)
        trace: dict[str, dict[int, int]] = {}
        for (w, eid), payload in st.values.items():
            trace.setdefault(names[w], {})[eid] = payload
        return PointedGraph(graph, "v"), trace


def solve(formula: Formula, delta: DeltaMode, limits: SolveLimits | None = None) -> Verdict:
    """Decide satisfiability; Sat verdicts carry a checked model.

    When the practical arity cap truncates the search space of the requested
    mode, an exhausted search is inconclusive rather than Unsat.
    """
    import sys

    limits = limits or SolveLimits()
    search = _Search(formula, delta, limits)
    root = _State()
    root.bools.append(((), formula.root, True))
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 100_000))
    try:
        final = search.attempt(root)
    except _LimitHit as hit:
        return Unknown(hit.reason)
    except RecursionError:
        # branches deeper than the interpreter allows (gigantic arities)
        return Unknown("node-limit")
    finally:
        sys.setrecursionlimit(old_limit)
    if final is None:
        _, eids = formula.arena.reachable(formula.root)
        has_aggs = any(formula.arena.expr(e)[0] == "agg" for e in eids)
        if search.cap_truncated and has_aggs:
            return Unknown("depth-limit")
        return Unsat()
    model, trace = search.extract_model(final)
    if not check(model.graph, model.point, formula):
        raise RuntimeError("tableau produced a model that fails its own formula")
    return Sat(model, trace)


def verify_lvp(instance: LvpInstance, limits: SolveLimits | None = None) -> LvpVerdict:
    """Valid when the compiled formula is unsatisfiable, else a counterexample."""
    compiled = compile_lvp(instance)
    verdict = solve(compiled.formula, instance.delta, limits)
    if isinstance(verdict, Unknown):
        return verdict
    if isinstance(verdict, Unsat):
        return Valid()
    model = verdict.model
    spec = instance.model.spec
    inputs = tuple(instance.model.input_features)
    graph = model.graph
    labels = {n: {f: graph.labels[n].get(f, 0) for f in inputs} for n in graph.nodes}
    projected = PointedGraph(
        LabeledGraph(spec, inputs, graph.nodes, graph.edges, labels), model.point
    )
    outputs = gnn_eval(instance.model, projected)
    point_label = {f: labels[model.point][f] for f in inputs}
    if not all(eval_linineq(q, point_label, spec) for q in instance.l_in):
        raise RuntimeError("counterexample fails the input constraints")
    out_vals = dict(zip(instance.model.output_features, (v.payload for v in outputs)))
    if all(eval_linineq(q, out_vals, spec) for q in instance.l_out):
        raise RuntimeError("counterexample satisfies the output constraints")
    return Invalid(projected, outputs)
