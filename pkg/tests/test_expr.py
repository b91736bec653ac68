import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from hessianlab.errors import (
    DomainError,
    ExprSyntaxError,
    SingularMatrix,
    UnknownIdentifier,
    VariableOutOfRange,
)
from hessianlab.expr import (
    Binary,
    Const,
    Domain,
    Pow,
    Potential,
    Unary,
    Var,
    affine_pullback,
    evaluate,
    parse,
    to_string,
)
from hessianlab.jets import Jet, algebra, seed


def test_parse_quadratic():
    ast = parse("x1^2/2 + x2^2/2", 2)
    assert ast.root == Binary(
        "add",
        Binary("div", Pow(Var(1), 2), Const(2.0)),
        Binary("div", Pow(Var(2), 2), Const(2.0)),
    )
    assert evaluate(ast, (1.0, 2.0)) == 2.5


def test_parse_exp_sum():
    ast = parse("exp(x1) + exp(x2)", 2)
    assert ast.root == Binary("add", Unary("exp", Var(1)), Unary("exp", Var(2)))


def test_variable_out_of_range():
    with pytest.raises(VariableOutOfRange) as exc:
        parse("log(x3)", 2)
    assert (exc.value.index, exc.value.n) == (3, 2)
    with pytest.raises(VariableOutOfRange):
        parse("x0", 2)


@pytest.mark.parametrize("src, pos", [("x1 +", 4), ("(x1", 3), ("x1 x2", 3), ("2 ** 3", 3), ("exp x1", 4), ("x1 $ 2", 3)])
def test_syntax_errors_carry_position(src, pos):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(src, 2)
    assert exc.value.position == pos
    assert exc.value.expected


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as exc:
        parse("tan(x1)", 1)
    assert exc.value.name == "tan"
    with pytest.raises(UnknownIdentifier):
        parse("y1 + 1", 1)


@pytest.mark.parametrize(
    "src, x, expected",
    [
        ("-x1^2", 3.0, -9.0),
        ("2^3^2", 0.0, 512.0),
        ("x1^-2", 2.0, 0.25),
        ("-2^2", 0.0, -4.0),
        ("(-2)^2", 0.0, 4.0),
        ("1e-1 * 2.5E+1", 0.0, 2.5),
        (".5 + 1.", 0.0, 1.5),
        ("x1 - 1 - 1", 5.0, 3.0),
        ("8 / 2 / 2", 0.0, 2.0),
        ("x1^0.5", 4.0, 2.0),
        ("sqrt(x1) * cosh(0) + sinh(0) + sin(0) + cos(0)", 9.0, 4.0),
    ],
)
def test_precedence_and_literals(src, x, expected):
    assert evaluate(parse(src, 1), (x,)) == pytest.approx(expected, rel=1e-15)


def test_noninteger_power_rewritten():
    ast = parse("x1^1.5", 1)
    assert isinstance(ast.root, Unary) and ast.root.op == "exp"
    assert isinstance(parse("x1^(1+1)", 1).root, Pow)
    assert isinstance(parse("x1^x1", 1).root, Unary)


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(parse("log(x1)", 1), (-1.0,))
    with pytest.raises(DomainError):
        evaluate(parse("1/x1", 1), (0.0,))
    with pytest.raises(DomainError):
        evaluate(parse("sqrt(x1)", 1), (-4.0,))
    with pytest.raises(DomainError):
        evaluate(parse("log(x1)", 1), seed([0.0], 2))
    with pytest.raises(DomainError):
        evaluate(parse("x1/x1", 1), seed([0.0], 2))


def test_domain_box():
    d = Domain((0, -1), (1, 1))
    assert d.contains([0.5, 1.0]) and not d.contains([1.5, 0])
    with pytest.raises(ValueError):
        Domain((1,), (0,))
    with pytest.raises(ValueError):
        Domain((0,), (math.inf,))
    with pytest.raises(ValueError):
        Potential.from_string("x1", Domain((0, 0), (1, 1))).ast and Potential(parse("x1", 1), Domain((0, 0), (1, 1)))


# -- random expression trees -------------------------------------------------

def _trees(n):
    leaves = st.one_of(
        st.floats(0.1, 3.0).map(lambda v: Const(round(v, 3))),
        st.integers(1, n).map(Var),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(["add", "sub", "mul"]), children, children).map(lambda t: Binary(*t)),
            st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(*t)),
            st.tuples(st.sampled_from(["neg", "sin", "cos"]), children).map(lambda t: Unary(*t)),
            # keep exp/log arguments tame
            children.map(lambda c: Unary("exp", Unary("sin", c))),
            children.map(lambda c: Unary("log", Binary("add", Const(2.0), Unary("cos", c)))),
            children.map(lambda c: Binary("div", c, Binary("add", Const(1.5), Unary("sin", c)))),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@given(_trees(2), st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=2))
def test_print_parse_round_trip(root, x):
    from hessianlab.expr import Ast

    ast = Ast(root, 2)
    again = parse(to_string(ast), 2)
    a = evaluate(ast, x)
    b = evaluate(again, x)
    assert abs(a - b) <= 1e-14 * max(1.0, abs(a))


@given(_trees(2), st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=2))
def test_real_eval_matches_order_zero_jets(root, x):
    from hessianlab.expr import Ast

    ast = Ast(root, 2)
    real = evaluate(ast, x)
    jet = evaluate(ast, seed(x, 0))
    jet_val = jet.value if isinstance(jet, Jet) else jet
    assert real == jet_val


def test_eval_jets_exp_sum():
    j = evaluate(parse("exp(x1)+exp(x2)", 2), seed([0.0, 0.0], 2))
    assert j.value == 2.0
    np.testing.assert_allclose(j.gradient(), [1, 1])
    np.testing.assert_allclose(j.hessian(), np.eye(2))


# -- affine pullback ---------------------------------------------------------

def test_pullback_identity(rng):
    ast = parse("x1^2", 1)
    g = affine_pullback(ast, np.eye(1), np.zeros(1))
    for x in rng.uniform(-3, 3, 10):
        assert abs(evaluate(g, [x]) - x * x) <= 1e-14 * max(1, x * x)


def test_pullback_scaled_shift():
    g = affine_pullback(parse("x1^2", 1), [[2.0]], [1.0])
    for x in (-1.0, 0.0, 0.3, 2.0):
        assert evaluate(g, [x]) == pytest.approx((2 * x + 1) ** 2, rel=1e-15)


def test_pullback_swap(rng):
    f = parse("exp(x1)+2*exp(x2)", 2)
    g = affine_pullback(f, [[0, 1], [1, 0]], [0, 0])
    for x in rng.uniform(-1, 1, (10, 2)):
        assert evaluate(g, x) == pytest.approx(evaluate(f, x[::-1]), rel=1e-14)


def test_pullback_singular():
    with pytest.raises(SingularMatrix):
        affine_pullback(parse("x1+x2", 2), [[1, 2], [2, 4]], [0, 0])


@given(_trees(3), st.integers(0, 2**32 - 1))
def test_pullback_matches_composition(root, s):
    from hessianlab.expr import Ast
    from hessianlab.potentials import random_affine

    r = np.random.default_rng(s)
    ast = Ast(root, 3)
    A, b = random_affine(r, 3)
    g = affine_pullback(ast, A, b)
    y = r.uniform(-1, 1, 3)
    lhs = evaluate(g, y)
    rhs = evaluate(ast, A @ y + b)
    assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(rhs)) * 10
