import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnncheck.arith import (
    ArithmeticSpec,
    Ordering,
    Value,
    act_inverses,
    add,
    add_inverses,
    apply_activation,
    compare,
    div,
    mul,
    mul_inverses,
    values_geq,
    values_lt,
)
from gnncheck.errors import ConfigError, UsageError

SAT10 = ArithmeticSpec.satint(10)
FIX32_4 = ArithmeticSpec.fixed(32, 4)
FIX16_1 = ArithmeticSpec.fixed(16, 1)


def v(spec, lit):
    return Value.of(spec, lit)


def all_values(spec):
    return [Value(p, spec) for p in spec.values_p()]


class TestSpecConstruction:
    def test_parse_round_trip(self):
        for text in ("satint:10", "fixed:32:4", "fixed:16:1"):
            assert ArithmeticSpec.parse(text).spec_string() == text

    def test_bad_spec_strings(self):
        for text in ("satint", "satint:x", "fixed:32", "float:32", "satint:0"):
            with pytest.raises(ConfigError):
                ArithmeticSpec.parse(text)

    def test_fixed_must_contain_one(self):
        # 2^(b-1)-1 >= 10^d is required so that 1 is representable
        with pytest.raises(ConfigError):
            ArithmeticSpec.fixed(8, 4)
        ArithmeticSpec.fixed(15, 4)

    def test_bit_width(self):
        assert ArithmeticSpec.satint(15).bit_width == 5  # 31 values
        assert ArithmeticSpec.satint(2).bit_width == 3  # 5 values
        assert FIX32_4.bit_width == 32

    def test_literals(self):
        assert v(FIX32_4, "0.0080").payload == 80
        assert v(FIX32_4, "100").payload == 1_000_000
        assert v(FIX32_4, "250").payload == 2_500_000
        assert v(FIX32_4, "-0.8").payload == -8000
        assert str(v(FIX32_4, "0")) == "0.0000"
        assert str(v(SAT10, "-7")) == "-7"

    def test_literal_rejections(self):
        with pytest.raises(ConfigError):
            v(SAT10, "11")
        with pytest.raises(ConfigError):
            v(SAT10, "0.5")
        with pytest.raises(ConfigError):
            v(FIX32_4, "0.00001")
        with pytest.raises(ConfigError):
            v(FIX32_4, "300000")


class TestAdd:
    def test_saturating_add_clamps(self):
        assert add(v(SAT10, "7"), v(SAT10, "5")).payload == 10

    def test_additive_identity(self):
        for k in all_values(ArithmeticSpec.satint(3)):
            assert add(Value(0, k.spec), k) == k

    def test_exact_cancellation(self):
        assert str(add(v(FIX32_4, "0.8"), v(FIX32_4, "-0.8"))) == "0.0000"

    def test_mixed_specs_rejected(self):
        with pytest.raises(UsageError):
            add(v(SAT10, "1"), v(FIX32_4, "1"))

    @pytest.mark.parametrize("a", [1, 2, 3, 4])
    def test_clamp_law_exhaustive(self, a):
        spec = ArithmeticSpec.satint(a)
        for x in spec.values_p():
            for y in spec.values_p():
                assert spec.add_p(x, y) == max(-a, min(a, x + y))

    def test_commutative_and_monotone_small(self):
        spec = ArithmeticSpec.satint(3)
        vals = list(spec.values_p())
        for x in vals:
            for y in vals:
                assert spec.add_p(x, y) == spec.add_p(y, x)
                for c in vals:
                    if x <= y:
                        assert spec.add_p(x, c) <= spec.add_p(y, c)


class TestMul:
    def test_fixed_point_scaling(self):
        # 1/125 * 100 = 0.8 in four-decimal fixed point
        assert mul(v(FIX32_4, "0.008"), v(FIX32_4, "100.0")) == v(FIX32_4, "0.8")

    def test_multiplicative_identity(self):
        for k in all_values(ArithmeticSpec.satint(4)):
            assert mul(Value(k.spec.one, k.spec), k) == k

    def test_clamped_product(self):
        assert mul(v(SAT10, "3"), v(SAT10, "4")).payload == 10

    def test_rounding_ties_away(self):
        # 0.5 * 0.5 = 0.25 -> rounds to 0.3 with one decimal
        assert mul(v(FIX16_1, "0.5"), v(FIX16_1, "0.5")) == v(FIX16_1, "0.3")
        assert mul(v(FIX16_1, "-0.5"), v(FIX16_1, "0.5")) == v(FIX16_1, "-0.3")


class TestDiv:
    def test_rounds_away_from_zero(self):
        assert div(v(SAT10, "7"), 2).payload == 4
        assert div(v(SAT10, "-7"), 2).payload == -4

    def test_identity_divisor(self):
        for k in all_values(ArithmeticSpec.satint(4)):
            assert div(k, 1) == k

    def test_exact_quarter(self):
        assert div(v(FIX32_4, "1.0"), 4) == v(FIX32_4, "0.25")

    def test_zero_divisor_rejected(self):
        with pytest.raises(UsageError):
            div(v(SAT10, "4"), 0)


class TestCompare:
    def test_lt(self):
        assert compare(v(FIX32_4, "0.8"), v(FIX32_4, "0.9")) is Ordering.LT

    def test_reflexive(self):
        assert compare(v(SAT10, "3"), v(SAT10, "3")) is Ordering.EQ

    def test_sign_ordering(self):
        s2 = ArithmeticSpec.satint(2)
        assert compare(v(s2, "-2"), v(s2, "2")) is Ordering.LT


class TestActivations:
    def test_relu(self):
        assert apply_activation("relu", v(FIX32_4, "-0.5")) == v(FIX32_4, "0")
        assert apply_activation("relu", v(FIX32_4, "0.8")) == v(FIX32_4, "0.8")

    def test_truncrelu(self):
        assert apply_activation("truncrelu", v(SAT10, "3")).payload == SAT10.one
        assert apply_activation("truncrelu", v(FIX32_4, "0.5")) == v(FIX32_4, "0.5")
        assert apply_activation("truncrelu", v(FIX32_4, "-3")) == v(FIX32_4, "0")

    def test_unknown_activation(self):
        with pytest.raises(ConfigError):
            apply_activation("sigmoid", v(SAT10, "1"))

    @pytest.mark.parametrize("spec", [ArithmeticSpec.satint(8), FIX16_1])
    def test_truncrelu_relu_identity_exhaustive(self, spec):
        # truncrelu(x) = relu(relu(x) - relu(x - 1)) everywhere
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


def brute_add_pairs(spec, k):
    return {
        (p1, p2)
        for p1 in spec.values_p()
        for p2 in spec.values_p()
        if spec.add_p(p1, p2) == k
    }


class TestInverseStreams:
    def test_add_inverses_zero(self):
        s2 = ArithmeticSpec.satint(2)
        got = [(a.payload, b.payload) for a, b in add_inverses(Value(0, s2))]
        assert got == [(-2, 2), (-1, 1), (0, 0), (1, -1), (2, -2)]

    def test_add_inverses_saturating_target(self):
        s2 = ArithmeticSpec.satint(2)
        got = [(a.payload, b.payload) for a, b in add_inverses(Value(2, s2))]
        for pair in [(0, 2), (1, 1), (1, 2), (2, 2)]:
            assert pair in got
        assert got == sorted(got)

    def test_add_inverses_contains_identity_pair(self):
        for k in all_values(ArithmeticSpec.satint(3)):
            pairs = {(a.payload, b.payload) for a, b in add_inverses(k)}
            assert (0, k.payload) in pairs

    @pytest.mark.parametrize("a", [1, 2, 3])
    def test_add_inverses_complete(self, a):
        spec = ArithmeticSpec.satint(a)
        for k in spec.values_p():
            got = {(x.payload, y.payload) for x, y in add_inverses(Value(k, spec))}
            assert got == brute_add_pairs(spec, k)

    def test_act_inverses_relu_zero(self):
        s2 = ArithmeticSpec.satint(2)
        assert [x.payload for x in act_inverses("relu", Value(0, s2))] == [-2, -1, 0]

    def test_mul_inverses_negation(self):
        got = list(mul_inverses(v(FIX32_4, "-1"), v(FIX32_4, "-0.8")))
        assert got == [v(FIX32_4, "0.8")]

    @pytest.mark.parametrize("a", [1, 2, 3])
    def test_mul_inverses_complete(self, a):
        spec = ArithmeticSpec.satint(a)
        for c in spec.values_p():
            for k in spec.values_p():
                got = [x.payload for x in mul_inverses(Value(c, spec), Value(k, spec))]
                want = [p for p in spec.values_p() if spec.mul_p(c, p) == k]
                assert got == want, (c, k)

    @pytest.mark.parametrize("name", ["relu", "truncrelu", "id"])
    def test_act_inverses_complete(self, name):
        spec = ArithmeticSpec.satint(3)
        for k in spec.values_p():
            got = [x.payload for x in act_inverses(name, Value(k, spec))]
            want = [p for p in spec.values_p() if spec.act_p(name, p) == k]
            assert got == want

    def test_values_geq_lt_orders(self):
        spec = ArithmeticSpec.satint(3)
        assert [x.payload for x in values_geq(Value(1, spec))] == [1, 2, 3]
        assert [x.payload for x in values_lt(Value(1, spec))] == [0, -1, -2, -3]
        start = values_geq(v(FIX32_4, "100"))
        assert [str(next(start)) for _ in range(2)] == ["100.0000", "100.0001"]

    @pytest.mark.parametrize("a", [2, 3])
    def test_values_streams_complete(self, a):
        spec = ArithmeticSpec.satint(a)
        for k in spec.values_p():
            geq = [x.payload for x in values_geq(Value(k, spec))]
            lt = [x.payload for x in values_lt(Value(k, spec))]
            assert geq == [p for p in spec.values_p() if p >= k]
            assert lt == sorted((p for p in spec.values_p() if p < k), reverse=True)


@settings(max_examples=300)
@given(
    x=st.integers(-(2 ** 15) + 1, 2 ** 15 - 1),
    y=st.integers(-(2 ** 15) + 1, 2 ** 15 - 1),
)
def test_closure_fixed_point(x, y):
    spec = FIX16_1
    for p in (spec.add_p(x, y), spec.mul_p(x, y), spec.div_p(x, 3), spec.act_p("truncrelu", x)):
        assert spec.contains(p)


@settings(max_examples=200)
@given(
    c=st.integers(-(2 ** 15) + 1, 2 ** 15 - 1),
    k=st.integers(-(2 ** 15) + 1, 2 ** 15 - 1),
)
def test_mul_preimage_sound_fixed_point(c, k):
    spec = FIX16_1
    rng = spec.mul_preimage(c, k, k)
    if rng is not None:
        lo, hi = rng
        assert spec.mul_p(c, lo) == k
        assert spec.mul_p(c, hi) == k
        mid = (lo + hi) // 2
        assert spec.mul_p(c, mid) == k
    # neighbours just outside the interval must not map onto k
    if rng is not None and c != 0:
        lo, hi = rng
        if spec.contains(lo - 1):
            assert spec.mul_p(c, lo - 1) != k
        if spec.contains(hi + 1):
            assert spec.mul_p(c, hi + 1) != k
