"""Saturating fixed-width arithmetic.

Two families of value sets are supported:

* ``satint:a`` is the set ``{-a, ..., a}`` of integers where addition and
  multiplication clamp to the extremes instead of wrapping.
* ``fixed:b:d`` is the set ``{p / 10**d : |p| <= 2**(b-1) - 1}`` of decimal
  fixed-point numbers stored on ``b`` bits.

Internally every value is a scaled integer payload; all operations are exact
integer arithmetic followed by round-to-nearest (ties away from zero) and a
clamp.  Besides the forward operations this module provides the inverse
enumerators the tableau rules consume: every stream is lazy, deterministic
and yields exactly the witnessing values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterator, Optional

from .errors import ConfigError, UsageError

ACTIVATIONS = ("relu", "truncrelu", "id")


class Ordering(IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def _round_div_away(num: int, den: int) -> int:
    """num/den rounded to the nearest integer, ties away from zero (den > 0)."""
    q, r = divmod(abs(num), den)
    if 2 * r >= den:
        q += 1
    return q if num >= 0 else -q


def _intersect(a: Optional[tuple[int, int]], b: Optional[tuple[int, int]]) -> Optional[tuple[int, int]]:
    if a is None or b is None:
        return None
    lo = max(a[0], b[0])
    hi = min(a[1], b[1])
    return None if lo > hi else (lo, hi)


@dataclass(frozen=True)
class ArithmeticSpec:
    """A finite saturating number set, described by its payload range and scale.

    ``max_payload`` is the largest representable payload M; the value set is
    the symmetric range [-M, M] of payloads, each denoting payload / 10**frac_decimals.
    """

    kind: str  # "satint" | "fixed"
    max_payload: int
    frac_decimals: int
    total_bits: int | None = None

    @staticmethod
    def satint(a: int) -> "ArithmeticSpec":
        if a < 1:
            raise ConfigError(f"satint range must be >= 1 so that -1, 0, 1 are representable, got {a}")
        return ArithmeticSpec("satint", a, 0, None)

    @staticmethod
    def fixed(total_bits: int, frac_decimals: int) -> "ArithmeticSpec":
        if total_bits < 2:
            raise ConfigError(f"fixed-point needs at least 2 bits, got {total_bits}")
        if frac_decimals < 0:
            raise ConfigError(f"frac_decimals must be >= 0, got {frac_decimals}")
        m = 2 ** (total_bits - 1) - 1
        if m < 10 ** frac_decimals:
            raise ConfigError(
                f"fixed:{total_bits}:{frac_decimals} cannot represent 1 "
                f"(max payload {m} < 10^{frac_decimals})"
            )
        return ArithmeticSpec("fixed", m, frac_decimals, total_bits)

    @staticmethod
    def parse(text: str) -> "ArithmeticSpec":
        """Parse a spec string: ``satint:<a>`` or ``fixed:<total_bits>:<frac_decimals>``."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "satint" and len(parts) == 2:
                return ArithmeticSpec.satint(int(parts[1]))
            if parts[0] == "fixed" and len(parts) == 3:
                return ArithmeticSpec.fixed(int(parts[1]), int(parts[2]))
        except ValueError:
            pass
        raise ConfigError(f"bad arithmetic spec {text!r}; expected satint:<a> or fixed:<bits>:<decimals>")

    def spec_string(self) -> str:
        if self.kind == "satint":
            return f"satint:{self.max_payload}"
        return f"fixed:{self.total_bits}:{self.frac_decimals}"

    @property
    def scale(self) -> int:
        return 10 ** self.frac_decimals

    @property
    def one(self) -> int:
        """Payload of the value 1."""
        return self.scale

    @property
    def bit_width(self) -> int:
        """Minimal number of bits that encodes the payload range."""
        if self.total_bits is not None:
            return self.total_bits
        return max(1, math.ceil(math.log2(2 * self.max_payload + 1)))

    @property
    def n_values(self) -> int:
        return 2 * self.max_payload + 1

    def clamp(self, p: int) -> int:
        m = self.max_payload
        return -m if p < -m else m if p > m else p

    def contains(self, p: int) -> bool:
        return -self.max_payload <= p <= self.max_payload

    def check_payload(self, p: int) -> int:
        if not self.contains(p):
            raise UsageError(f"payload {p} outside {self.spec_string()}")
        return p

    # -- forward operations on payloads ------------------------------------

    def add_p(self, a: int, b: int) -> int:
        return self.clamp(a + b)

    def mul_p(self, c: int, p: int) -> int:
        return self.clamp(_round_div_away(c * p, self.scale))

    def div_p(self, p: int, m: int) -> int:
        if m < 1:
            raise UsageError(f"division arity must be >= 1, got {m}")
        return self.clamp(_round_div_away(p, m))

    def act_p(self, name: str, p: int) -> int:
        if name == "relu":
            return p if p >= 0 else 0
        if name == "truncrelu":
            return max(0, min(self.one, p))
        if name == "id":
            return p
        raise ConfigError(f"unknown activation {name!r}; known: {', '.join(ACTIVATIONS)}")

    def fold_add(self, payloads) -> int:
        """Left fold of saturating addition, empty fold = 0."""
        acc = 0
        for p in payloads:
            acc = self.add_p(acc, p)
        return acc

    # -- literals ------------------------------------------------------------

    def parse_literal(self, text: str) -> int:
        """Parse a decimal literal into a payload, rejecting unrepresentable ones."""
        s = text.strip()
        sign = 1
        if s.startswith(("-", "+")):
            sign = -1 if s[0] == "-" else 1
            s = s[1:]
        if not s:
            raise ConfigError(f"empty numeric literal {text!r}")
        if "." in s:
            intpart, frac = s.split(".", 1)
            if not (intpart.isdigit() and frac.isdigit()):
                raise ConfigError(f"bad numeric literal {text!r}")
            if len(frac) > self.frac_decimals:
                raise ConfigError(
                    f"literal {text!r} has {len(frac)} decimals, "
                    f"{self.spec_string()} supports {self.frac_decimals}"
                )
            frac = frac.ljust(self.frac_decimals, "0")
            p = int(intpart) * self.scale + int(frac or "0")
        else:
            if not s.isdigit():
                raise ConfigError(f"bad numeric literal {text!r}")
            p = int(s) * self.scale
        p *= sign
        if not self.contains(p):
            raise ConfigError(f"literal {text!r} out of range for {self.spec_string()}")
        return p

    def format_payload(self, p: int) -> str:
        if self.frac_decimals == 0:
            return str(p)
        sign = "-" if p < 0 else ""
        q, r = divmod(abs(p), self.scale)
        return f"{sign}{q}.{r:0{self.frac_decimals}d}"

    def values_p(self) -> Iterator[int]:
        """All payloads, ascending."""
        return iter(range(-self.max_payload, self.max_payload + 1))

    # -- inverse interval services -------------------------------------------
    # These return contiguous payload intervals (lo, hi) or None; they back the
    # public inverse streams and the tableau's pruning.

    def act_preimage(self, name: str, k: int) -> Optional[tuple[int, int]]:
        """Payload interval {p : act(p) = k} or None if no preimage exists."""
        m = self.max_payload
        if name == "relu":
            if k > 0:
                return (k, k) if k <= m else None
            if k == 0:
                return (-m, 0)
            return None
        if name == "truncrelu":
            one = self.one
            if k == 0:
                return (-m, 0)
            if k == one:
                return (one, m)
            if 0 < k < one:
                return (k, k)
            return None
        if name == "id":
            return (k, k) if self.contains(k) else None
        raise ConfigError(f"unknown activation {name!r}; known: {', '.join(ACTIVATIONS)}")

    def act_preimage_interval(self, name: str, tlo: int, thi: int) -> Optional[tuple[int, int]]:
        """Payload interval {p : act(p) in [tlo, thi]} or None."""
        m = self.max_payload
        if tlo > thi:
            return None
        if name == "relu":
            if thi < 0:
                return None
            return (tlo if tlo > 0 else -m, min(thi, m))
        if name == "truncrelu":
            one = self.one
            if max(tlo, 0) > min(thi, one):
                return None
            lo = tlo if tlo > 0 else -m
            hi = thi if thi < one else m
            return (lo, hi)
        if name == "id":
            return _intersect((tlo, thi), (-m, m))
        raise ConfigError(f"unknown activation {name!r}; known: {', '.join(ACTIVATIONS)}")

    def _round_window(self, tlo: int, thi: int):
        """Rational window of x with clamp(round_away(x)) in [tlo, thi].

        Saturation makes the window unbounded at the extremes; unbounded ends
        are returned as None.
        """
        half = Fraction(1, 2)
        if tlo == -self.max_payload:
            lo, lo_strict = None, False
        elif tlo > 0:
            lo, lo_strict = Fraction(tlo) - half, False
        else:
            lo, lo_strict = Fraction(tlo) - half, True
        if thi == self.max_payload:
            hi, hi_strict = None, False
        elif thi < 0:
            hi, hi_strict = Fraction(thi) + half, False
        else:
            hi, hi_strict = Fraction(thi) + half, True
        return lo, lo_strict, hi, hi_strict

    def mul_preimage(self, c: int, tlo: int, thi: int) -> Optional[tuple[int, int]]:
        """Payload interval {p : mul_p(c, p) in [tlo, thi]} or None."""
        if tlo > thi:
            return None
        m = self.max_payload
        if c == 0:
            return (-m, m) if tlo <= 0 <= thi else None
        lo, lo_strict, hi, hi_strict = self._round_window(tlo, thi)
        # c*p/scale in window  =>  p in scale*window/c (order flips for c < 0)
        s = Fraction(self.scale, c)
        a = None if lo is None else lo * s
        b = None if hi is None else hi * s
        if c < 0:
            a, b, lo_strict, hi_strict = b, a, hi_strict, lo_strict
        plo = -m if a is None else (math.floor(a) + 1 if lo_strict else math.ceil(a))
        phi = m if b is None else (math.ceil(b) - 1 if hi_strict else math.floor(b))
        return _intersect((plo, phi), (-m, m))

    def add_preimage(self, a: int, tlo: int, thi: int) -> Optional[tuple[int, int]]:
        """Payload interval {q : add_p(a, q) in [tlo, thi]} or None."""
        if tlo > thi:
            return None
        m = self.max_payload
        lo = -m if self.add_p(a, -m) >= tlo else tlo - a
        hi = m if self.add_p(a, m) <= thi else thi - a
        return _intersect((lo, hi), (-m, m))

    def sum_left_window(self, k: int, blo: int, bhi: int) -> Optional[tuple[int, int]]:
        """Payload interval of k1 such that some k2 in [blo, bhi] has add_p(k1, k2) = k."""
        m = self.max_payload
        if k == m:
            w = (k - bhi, m)
        elif k == -m:
            w = (-m, k - blo)
        else:
            w = (k - bhi, k - blo)
        return _intersect(w, (-m, m))

    def div_preimage(self, k: int, m: int) -> Optional[tuple[int, int]]:
        """Payload interval {S : div_p(S, m) = k}."""
        top = self.max_payload
        lo, lo_strict, hi, hi_strict = self._round_window(k, k)
        slo = -top if lo is None else (math.floor(lo * m) + 1 if lo_strict else math.ceil(lo * m))
        shi = top if hi is None else (math.ceil(hi * m) - 1 if hi_strict else math.floor(hi * m))
        return _intersect((slo, shi), (-top, top))


@dataclass(frozen=True, order=False)
class Value:
    """An element of a finite arithmetic: an integer payload plus its spec."""

    payload: int
    spec: ArithmeticSpec

    def __post_init__(self):
        self.spec.check_payload(self.payload)

    @staticmethod
    def of(spec: ArithmeticSpec, literal: str) -> "Value":
        return Value(spec.parse_literal(literal), spec)

    def __str__(self) -> str:
        return self.spec.format_payload(self.payload)

    def __repr__(self) -> str:
        return f"Value({self} @ {self.spec.spec_string()})"


def _same_spec(*values: Value) -> ArithmeticSpec:
    spec = values[0].spec
    for v in values[1:]:
        if v.spec != spec:
            raise UsageError(f"mixed arithmetic specs: {spec.spec_string()} vs {v.spec.spec_string()}")
    return spec


def add(a: Value, b: Value) -> Value:
    spec = _same_spec(a, b)
    return Value(spec.add_p(a.payload, b.payload), spec)


def mul(c: Value, v: Value) -> Value:
    spec = _same_spec(c, v)
    return Value(spec.mul_p(c.payload, v.payload), spec)


def div(a: Value, m: int) -> Value:
    return Value(a.spec.div_p(a.payload, m), a.spec)


def compare(a: Value, b: Value) -> Ordering:
    _same_spec(a, b)
    if a.payload < b.payload:
        return Ordering.LT
    if a.payload > b.payload:
        return Ordering.GT
    return Ordering.EQ


def apply_activation(name: str, v: Value) -> Value:
    return Value(v.spec.act_p(name, v.payload), v.spec)


# -- inverse enumeration streams ---------------------------------------------


def values_geq(k: Value) -> Iterator[Value]:
    """All values >= k, ascending from k."""
    spec = k.spec
    for p in range(k.payload, spec.max_payload + 1):
        yield Value(p, spec)


def values_lt(k: Value) -> Iterator[Value]:
    """All values < k, descending from the predecessor of k."""
    spec = k.spec
    for p in range(k.payload - 1, -spec.max_payload - 1, -1):
        yield Value(p, spec)


def add_inverses(k: Value) -> Iterator[tuple[Value, Value]]:
    """All pairs (k1, k2) with add(k1, k2) = k; k1 ascending, then k2 ascending."""
    spec = k.spec
    for p1 in range(-spec.max_payload, spec.max_payload + 1):
        rng = spec.add_preimage(p1, k.payload, k.payload)
        if rng is None:
            continue
        for p2 in range(rng[0], rng[1] + 1):
            yield Value(p1, spec), Value(p2, spec)


def mul_inverses(c: Value, k: Value) -> Iterator[Value]:
    """All values v with mul(c, v) = k, ascending."""
    spec = _same_spec(c, k)
    rng = spec.mul_preimage(c.payload, k.payload, k.payload)
    if rng is None:
        return
    for p in range(rng[0], rng[1] + 1):
        yield Value(p, spec)


def act_inverses(name: str, k: Value) -> Iterator[Value]:
    """All values v with activation(v) = k, ascending."""
    spec = k.spec
    rng = spec.act_preimage(name, k.payload)
    if rng is None:
        return
    for p in range(rng[0], rng[1] + 1):
        yield Value(p, spec)
