import re
from decimal import Decimal

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from rotsqueeze.errors import (
    EmptyFamily,
    ExprDomainError,
    ExprSyntaxError,
    NegativeOrZeroConstant,
    NonConstantExponent,
)
from rotsqueeze.expr import (
    Const,
    Log,
    Pow,
    Prod,
    Quot,
    ScheduleExpr,
    SequenceExpr,
    Sum,
    Var,
    check_monotone,
    check_schedule,
    eval_log,
    eval_log_array,
    parse,
    pretty,
    validate_family_order,
)

from oracles import ref_ln


def test_parse_examples():
    assert parse("n^0.5") == Pow(Var(), Const("0.5"))
    assert parse("log(n+1)^2 * 3") == Prod(Pow(Log(Sum(Var(), Const("1"))), Const("2")), Const("3"))
    assert parse("  n / 2 * n ") == Prod(Quot(Var(), Const("2")), Var())
    assert parse("((n))") == Var()


@pytest.mark.parametrize(
    "text, exc, offset",
    [
        ("n-5", ExprSyntaxError, 1),
        ("n^n", NonConstantExponent, 2),
        ("0*n", NegativeOrZeroConstant, 0),
        ("n+", ExprSyntaxError, 2),
        ("log n", ExprSyntaxError, 4),
        ("(n", ExprSyntaxError, 2),
        ("m", ExprSyntaxError, 0),
        ("n^2^3", ExprSyntaxError, 3),
        ("n $", ExprSyntaxError, 2),
        ("", ExprSyntaxError, 0),
    ],
)
def test_parse_errors(text, exc, offset):
    with pytest.raises(exc) as info:
        parse(text)
    assert info.value.offset == offset


def test_schedule_allows_variable_exponent():
    eps = ScheduleExpr.parse("1/2^(i+1)")
    assert [eps.value(i) for i in range(3)] == [0.5, 0.25, 0.125]
    assert ScheduleExpr.parse("i+1").value(0) == 1
    with pytest.raises(ExprDomainError):
        ScheduleExpr.parse("i").value(0)


def _trees(var="n"):
    consts = st.sampled_from(["1", "2", "0.5", "3.25", "1e3", "7"]).map(Const)
    leaves = st.one_of(st.just(Var(var)), consts)

    def extend(children):
        return st.one_of(
            st.builds(Sum, children, children),
            st.builds(Prod, children, children),
            st.builds(Quot, children, children),
            st.builds(Pow, children, consts),
            st.builds(Log, children),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@settings(max_examples=300)
@given(_trees())
def test_round_trip(tree):
    text = pretty(tree)
    assert parse(text) == tree
    spaced = re.sub(r"([-+*/^()])", r" \1  ", text)
    assert parse(spaced) == tree
    assert parse(f"({text})") == tree


CORPUS = [
    "n",
    "n^0.25",
    "n^0.75",
    "log(n+2)",
    "log(n)^2*3+n^0.5",
    "n/log(n+3)",
    "(n+1)^0.5*log(log(n+16))",
    "2*n^0.3+7",
    "n^(1/3)",
]


@pytest.mark.parametrize("text", CORPUS)
@pytest.mark.parametrize("n", [1, 2, 10, 10**6, 3**200, 10**500 + 7, 10**1000])
def test_eval_log_against_reference(text, n):
    tree = parse(text)
    try:
        got = eval_log(tree, n)
    except ExprDomainError:
        with pytest.raises(Exception):
            assert ref_ln(tree, n).is_finite()
        return
    ref = ref_ln(tree, n)
    assert abs(Decimal(mpmath.nstr(got, 70)) - ref) < Decimal("1e-30")


def test_eval_log_examples():
    with mpmath.workdps(80):
        assert abs(eval_log(parse("n^0.25"), 10000) - mpmath.log(10)) < mpmath.mpf("1e-60")
    with mpmath.workdps(80):
        ref = mpmath.mpf("2.302585092994045684017991454684364")
        assert abs(eval_log(parse("n"), 10) - ref) < mpmath.mpf("1e-30")
    got = eval_log(parse("log(n)"), 10**500)
    assert abs(Decimal(mpmath.nstr(got, 60)) - ref_ln(parse("log(n)"), 10**500)) < Decimal("1e-30")
    assert abs(float(got) - 7.048640543670148) < 1e-12


def test_eval_log_array_screen():
    import numpy as np

    ns = np.array([1, 5, 100, 10**6])
    for text in CORPUS:
        tree = parse(text)
        arr = eval_log_array(tree, ns)
        for n, v in zip(ns.tolist(), arr.tolist()):
            try:
                exact = float(eval_log(tree, n))
            except ExprDomainError:
                assert v != v or v == float("-inf")
                continue
            assert abs(v - exact) < 1e-9


def test_family_order_examples():
    assert validate_family_order(["n^0.2"], ["n^0.8"], [10**2, 10**4, 10**8]).ok
    bad = validate_family_order(["n^0.6"], ["n^0.4"], [10**2, 10**4, 10**8])
    assert not bad.ok
    for n in (10**2, 10**4, 10**8):
        assert any(v.startswith(f"n={n}:") for v in bad.violations)
    assert validate_family_order(["n^0.2", "n^0.3"], ["n^0.7", "n^0.6"], [10**3, 10**6]).ok
    with pytest.raises(EmptyFamily):
        validate_family_order([], ["n^0.5"], [10])


def test_family_gap_must_widen():
    # Same growth rate: the ratio does not tend to 0.
    report = validate_family_order(["n^0.5"], ["2*n^0.5"], [10**3, 10**6])
    assert not report.ok
    assert any("does not widen" in v for v in report.violations)


def test_monotone_check():
    assert check_monotone(SequenceExpr.parse("log(n+2)")) == []
    assert check_monotone(SequenceExpr.parse("1/n"))
    assert check_monotone(SequenceExpr.parse("log(n)"))  # zero at n = 1
    assert check_monotone(SequenceExpr.parse("log(n)+1")) == []


def test_schedule_checks():
    assert check_schedule(ScheduleExpr.parse("i+1"), 5, "N") == []
    assert check_schedule(ScheduleExpr.parse("1/2^(i+1)"), 5, "eps") == []
    assert check_schedule(ScheduleExpr.parse("1/(i+1)"), 5, "N")
    assert check_schedule(ScheduleExpr.parse("3"), 5, "N")
