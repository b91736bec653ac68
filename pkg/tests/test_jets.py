from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from hessianlab.errors import DivisionByZeroValuePart, DomainError, OrderExceeded
from hessianlab.expr import evaluate, parse
from hessianlab.jets import Jet, algebra, elementary, lu_det_inv, seed


def test_sizes_and_graded_order():
    for n in range(1, 6):
        for K in range(0, 8):
            alg = algebra(n, K)
            assert alg.size == comb(n + K, K)
            assert np.all(np.diff(alg.degree) >= 0)
    assert algebra(5, 7).size == 792


def test_seed():
    x1, x2 = seed([3.0, 5.0], 2)
    assert x1.value == 3.0
    assert x1.partial((1, 0)) == 1.0 and x1.partial((0, 1)) == 0.0
    assert np.count_nonzero(x1.coeffs) == 2
    (z,) = seed([0.0], 0)
    assert z.coeffs.shape == (1,)


def test_seed_then_product():
    x1, x2 = seed([3.0, 5.0], 2)
    p = x1 * x2
    assert p.value == 15.0
    np.testing.assert_array_equal(p.gradient(), [5.0, 3.0])
    assert p.partial((1, 1)) == 1.0
    assert p.partial((2, 0)) == 0.0


def test_arith_examples():
    (x,) = seed([0.0], 2)
    np.testing.assert_array_equal(((1 + x) * (1 - x)).coeffs, [1, 0, -1])
    (x,) = seed([0.0], 3)
    np.testing.assert_allclose((1 / (1 - x)).coeffs, [1, 1, 1, 1], rtol=0, atol=0)
    with pytest.raises(DivisionByZeroValuePart):
        x / x


def test_mismatched_algebras():
    (a,) = seed([1.0], 2)
    (b,) = seed([1.0], 3)
    with pytest.raises(ValueError):
        a + b


def test_exp_series():
    (x,) = seed([0.0], 3)
    np.testing.assert_allclose(x.exp().coeffs, [1, 1, 1 / 2, 1 / 6], rtol=1e-15)


def test_partial_examples():
    (x,) = seed([2.0], 3)
    j = x**3
    assert j.partial((3,)) == pytest.approx(6.0)
    assert j.partial((0,)) == 8.0
    with pytest.raises(OrderExceeded):
        j.partial((4,))
    # all partials of exp(x1 + x2) at the origin equal 1
    x1, x2 = seed([0.0, 0.0], 3)
    e = (x1 + x2).exp()
    assert e.partial((2, 1)) == pytest.approx(1.0, rel=1e-15)
    assert e.partial((0, 3)) == pytest.approx(1.0, rel=1e-15)


def test_elementary_floats():
    assert elementary("exp", 0.0) == 1.0
    with pytest.raises(DomainError):
        elementary("log", -1.0)
    with pytest.raises(DomainError):
        elementary("sqrt", 0.0)


def _rand_jet(n, K, seed_):
    r = np.random.default_rng(seed_)
    alg = algebra(n, K)
    c = r.normal(size=alg.size) / (1 + alg.degree)
    return Jet(alg, c)


jet_seeds = st.integers(0, 2**32 - 1)


@given(jet_seeds, st.integers(1, 3), st.integers(0, 5))
def test_ring_axioms(s, n, K):
    a, b, c = (_rand_jet(n, K, s + i) for i in range(3))
    np.testing.assert_allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-13)
    np.testing.assert_allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, atol=1e-13)
    np.testing.assert_allclose((a * b).coeffs, (b * a).coeffs, atol=1e-13)
    np.testing.assert_allclose(((a + b) - b).coeffs, a.coeffs, atol=1e-14)


def test_ring_exact_for_integers():
    alg = algebra(2, 4)
    r = np.random.default_rng(1)
    a, b, c = (Jet(alg, r.integers(-5, 5, alg.size).astype(float)) for _ in range(3))
    assert np.array_equal(((a * b) * c).coeffs, (a * (b * c)).coeffs)
    assert np.array_equal((a * (b + c)).coeffs, (a * b + a * c).coeffs)


@given(jet_seeds, st.integers(1, 3))
def test_log_exp_inverse(s, n):
    j = _rand_jet(n, 4, s)
    j = j - j.value + np.random.default_rng(s).uniform(-1, 1)
    np.testing.assert_allclose(j.exp().log().coeffs, j.coeffs, atol=1e-13)


@given(jet_seeds, st.integers(1, 3))
def test_pythagoras(s, n):
    j = _rand_jet(n, 4, s)
    one = j.sin() * j.sin() + j.cos() * j.cos()
    np.testing.assert_allclose(one.coeffs, np.eye(1, j.alg.size)[0], atol=1e-13)


@given(jet_seeds)
def test_sqrt_squared_and_hyperbolic(s):
    j = _rand_jet(2, 4, s)
    j = j - j.value + 2.0
    np.testing.assert_allclose((j.sqrt() * j.sqrt()).coeffs, j.coeffs, atol=1e-13)
    one = j.cosh() * j.cosh() - j.sinh() * j.sinh()
    np.testing.assert_allclose(one.coeffs, np.eye(1, j.alg.size)[0], atol=1e-12)
    np.testing.assert_allclose((j ** 2.5).coeffs, (j * j * j.sqrt()).coeffs, atol=1e-12)


def test_domain_errors():
    j = _rand_jet(1, 3, 0) - 10.0
    with pytest.raises(DomainError):
        j.log()
    with pytest.raises(DomainError):
        j.sqrt()


# -- finite-difference oracle for the elementary functions --------------------

_FD = {  # central stencils, second order accurate
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _fd(f, x0, k, h=1e-2):
    def d(step):
        offs, ws = _FD[k]
        return sum(w * f(x0 + o * step) for o, w in zip(offs, ws)) / step**k
    return (4 * d(h / 2) - d(h)) / 3


@pytest.mark.parametrize("name", ["exp", "log", "sqrt", "sin", "cos", "sinh", "cosh"])
@pytest.mark.parametrize("x0", [0.3, 0.9, 1.7])
def test_elementary_vs_finite_differences(name, x0):
    import math

    inner = lambda x: 0.5 + 0.3 * x + 0.2 * x * x  # positive near x0
    f = lambda x: getattr(math, name)(inner(x))
    (x,) = seed([x0], 4)
    j = (0.5 + 0.3 * x + 0.2 * x * x).apply(name)
    for k in range(1, 5):
        exact = j.partial((k,))
        fd = _fd(f, x0, k)
        assert abs(exact - fd) <= 1e-5 * max(1.0, abs(exact)), (k, exact, fd)


def test_seeded_ast_reproduces_partials():
    ast = parse("exp(x1) * sin(x2) + x1^3 * x2", 2)
    j = evaluate(ast, seed([0.4, -0.2], 4))
    import math

    x, y = 0.4, -0.2
    assert j.partial((1, 0)) == pytest.approx(math.exp(x) * math.sin(y) + 3 * x * x * y, rel=1e-14)
    assert j.partial((2, 1)) == pytest.approx(math.exp(x) * math.cos(y) + 6 * x, rel=1e-14)
    assert j.partial((3, 1)) == pytest.approx(math.exp(x) * math.cos(y) + 6, rel=1e-14)
    assert j.partial((0, 4)) == pytest.approx(math.exp(x) * math.sin(y), rel=1e-13)


def test_derivative_field_shifts():
    ast = parse("exp(2*x1 + x2)", 2)
    j = evaluate(ast, seed([0.0, 0.0], 5))
    f3 = j.alg.derivative_field(j.coeffs, 3, 2)
    sub = algebra(2, 2)
    # d_112 f = 4 exp(2x1+x2); its jet at 0 has gradient (8, 4)
    g = Jet(sub, f3[0, 0, 1])
    assert g.value == pytest.approx(4.0)
    np.testing.assert_allclose(g.gradient(), [8.0, 4.0])
    np.testing.assert_allclose(g.hessian(), [[16, 8], [8, 4]])
    with pytest.raises(OrderExceeded):
        j.alg.derivative_field(j.coeffs, 4, 2)


def test_truncate_is_prefix():
    j = evaluate(parse("exp(x1 - x2)", 2), seed([0.1, 0.2], 5))
    k = evaluate(parse("exp(x1 - x2)", 2), seed([0.1, 0.2], 3))
    np.testing.assert_allclose(j.alg.truncate(j.coeffs, 3), k.coeffs, rtol=1e-15)


def test_lu_det_inv_against_numpy():
    r = np.random.default_rng(3)
    alg = algebra(2, 3)
    M = r.normal(size=(4, 4, alg.size))
    M[..., 0] += 4 * np.eye(4)
    det, inv = lu_det_inv(alg, M)
    assert det[0] == pytest.approx(np.linalg.det(M[..., 0]), rel=1e-12)
    np.testing.assert_allclose(inv[..., 0], np.linalg.inv(M[..., 0]), atol=1e-12)
    # inverse property holds to every order
    eye = np.einsum("ikYZ,kjZ->ijY", alg._gather(M), inv)
    np.testing.assert_allclose(eye, alg.constant(np.eye(4)), atol=1e-12)
    # det jet matches the determinant of the matrix evaluated along a line (FD)
    t = 1e-3
    e = np.array([0.7, -0.3])
    def at(s):
        return np.linalg.det(sum(M[..., i] * np.prod((s * e) ** alg.indices[i]) for i in range(alg.size)))
    fd = (at(t) - at(-t)) / (2 * t)
    assert Jet(alg, det).gradient() @ e == pytest.approx(fd, rel=1e-5)


def test_lu_pivoting_needed():
    alg = algebra(1, 2)
    M = alg.constant(np.array([[0.0, 1.0], [1.0, 0.0]]))
    M[0, 0, 1] = 1.0
    det, inv = lu_det_inv(alg, M)
    assert det[0] == -1.0
    np.testing.assert_allclose(inv[..., 0], [[0, 1], [1, 0]])
