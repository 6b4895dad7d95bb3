from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmconn.expr import (BinOp, Call, Name, Neg, Num, ParseError, evaluate,
                         exact_value, parse, to_text)


def val(text, **bindings):
    return evaluate(text, bindings or None, digits=30)


def test_arithmetic_precedence():
    assert val("2 + 3 * 4") == 14
    assert val("(2 + 3) * 4") == 20
    assert val("2 - 3 - 4") == -5  # left associative
    assert val("12 / 3 / 2") == 2
    assert val("-2^2") == -4  # exponent binds tighter than unary minus
    assert val("2^3") == 8
    assert val("2^(-2)") == Fraction(1, 4)


def test_decimal_literals_exact():
    # 0.1 is the exact rational 1/10, not a binary float
    v = evaluate("0.1 - 1/10", digits=40)
    assert v == 0


def test_builtins_and_bindings():
    with mp.workdps(30):
        assert abs(val("pi") - mp.pi) < mp.mpf("1e-25")
    assert val("i * i") == -1
    assert val("x + 1", x=mp.mpf(2)) == 3


def test_functions():
    with mp.workdps(30):
        assert abs(val("exp(1)") - mp.e) < mp.mpf("1e-25")
        assert abs(val("log(exp(2))") - 2) < mp.mpf("1e-25")
        assert abs(val("gamma(1/4)") - mp.gamma(mp.mpf(1) / 4)) < mp.mpf("1e-25")


def test_gamma_requires_literal_rational():
    with pytest.raises(ParseError):
        parse("gamma(x)", names=("x",))
    with pytest.raises(ParseError):
        parse("gamma(pi)")
    parse("gamma(3/7)")
    parse("gamma(2)")


def test_integer_exponents_only():
    with pytest.raises(ParseError):
        parse("2^0.5")
    with pytest.raises(ParseError):
        parse("x^x", names=("x",))


def test_unknown_identifier_with_position():
    with pytest.raises(ParseError) as e:
        parse("2 + bogus")
    assert e.value.pos == 4
    # the same name is fine once declared
    parse("2 + bogus", names=("bogus",))


def test_unknown_function():
    with pytest.raises(ParseError):
        parse("sin(1)")


def test_unbalanced_parens():
    with pytest.raises(ParseError):
        parse("(1 + 2")
    with pytest.raises(ParseError):
        parse("1 + 2)")


def test_unexpected_character():
    with pytest.raises(ParseError) as e:
        parse("1 & 2")
    assert e.value.pos == 2


def test_exact_gaussian_arithmetic():
    # stays exact in Q(i): (1+i)^4 = -4 with no rounding
    assert exact_value("(1 + i)^4") == (Fraction(-4), Fraction(0))
    assert exact_value("(2/3 + i/3) * (2/3 - i/3)") == (Fraction(5, 9),
                                                        Fraction(0))
    assert exact_value("pi + 1") is None


def test_ast_shape():
    node = parse("-x + 2", names=("x",))
    assert node == BinOp("+", Neg(Name("x")), Num(Fraction(2)))


# round-trip: printing is a canonical form, stable under reparsing

leaf = st.one_of(
    st.integers(0, 9).map(lambda n: Num(Fraction(n))),
    st.fractions(min_value=0, max_value=5, max_denominator=7).map(Num),
    st.sampled_from(["pi", "i", "x", "y"]).map(Name),
)


def trees(depth):
    if depth == 0:
        return leaf
    sub = trees(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(
            lambda t: BinOp(t[0], t[1], t[2])),
        sub.map(Neg),
        st.tuples(sub, st.integers(0, 4)).map(
            lambda t: BinOp("^", t[0], Num(Fraction(t[1])))),
        sub.map(lambda a: Call("exp", a)),
    )


@settings(max_examples=120, deadline=None)
@given(trees(3))
def test_print_parse_round_trip(node):
    text = to_text(node)
    reparsed = parse(text, names=("x", "y"))
    assert to_text(reparsed) == text
    bindings = {"x": mp.mpf("1.5"), "y": mp.mpf("0.25")}
    try:
        v1 = evaluate(node, bindings, digits=25)
    except ZeroDivisionError:
        return
    v2 = evaluate(reparsed, bindings, digits=25)
    assert abs(v1 - v2) <= mp.mpf("1e-20") * (1 + abs(v1))
