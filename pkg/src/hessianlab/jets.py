"""
Truncated multivariate Taylor series ("jets").

A jet of order K in n variables stores the Taylor coefficients
``d^alpha f / alpha!`` for every multi-index ``|alpha| <= K``, laid out in
graded-lexicographic order.  Because the order is graded, the jet of a
lower order is a prefix of the coefficient vector, so truncation is a slice.

Arithmetic lives on :class:`JetAlgebra` and works on plain ndarrays whose
*last* axis is the coefficient axis; any leading axes are broadcast.  This
lets the geometry code treat tensors of jets as ordinary arrays.  The
:class:`Jet` class is a thin scalar wrapper used by expression evaluation.
"""

from functools import lru_cache
from itertools import combinations_with_replacement, product
from math import comb, factorial

import numpy as np

from .errors import DivisionByZeroValuePart, DomainError, OrderExceeded

__all__ = [
    "JetAlgebra",
    "algebra",
    "Jet",
    "seed",
    "elementary",
    "lu_det_inv",
]


def _multi_indices(n, order):
    out = []
    for deg in range(order + 1):
        # combinations over variables, converted to exponent vectors
        degs = []
        for combo in combinations_with_replacement(range(n), deg):
            a = [0] * n
            for v in combo:
                a[v] += 1
            degs.append(tuple(a))
        degs.sort(reverse=True)
        out.extend(degs)
    return out


class JetAlgebra:
    """Index tables and arithmetic for jets with fixed ``(n, order)``.

    Use :func:`algebra` to get a cached instance.
    """

    def __init__(self, n, order):
        if n < 1:
            raise ValueError("n must be positive")
        if order < 0:
            raise ValueError("order must be nonnegative")
        self.n = n
        self.order = order
        idx = _multi_indices(n, order)
        self.size = len(idx)
        assert self.size == comb(n + order, order)
        self.indices = np.array(idx, dtype=np.int64).reshape(self.size, n)
        self.index = {a: i for i, a in enumerate(idx)}
        self.degree = self.indices.sum(axis=1)
        self.factorial = np.array(
            [np.prod([factorial(k) for k in a]) for a in idx], dtype=float
        )
        # product table: T[c, j] = i with alpha_i + alpha_j = alpha_c, else size (zero pad)
        P = self.size
        T = np.full((P, P), P, dtype=np.int64)
        for c, ac in enumerate(idx):
            for j, aj in enumerate(idx):
                d = tuple(x - y for x, y in zip(ac, aj))
                if min(d) >= 0:
                    T[c, j] = self.index[d]
        self._table = T
        self._deriv_cache = {}

    def __repr__(self):
        return f"JetAlgebra(n={self.n}, order={self.order})"

    # -- constructors ----------------------------------------------------

    def zeros(self, shape=()):
        return np.zeros(tuple(shape) + (self.size,))

    def constant(self, value):
        value = np.asarray(value, dtype=float)
        out = np.zeros(value.shape + (self.size,))
        out[..., 0] = value
        return out

    def variable(self, i, value):
        """Jet of the coordinate function x_i (0-based) at ``value``."""
        out = self.constant(value)
        if self.order >= 1:
            e = [0] * self.n
            e[i] = 1
            out[..., self.index[tuple(e)]] = 1.0
        return out

    # -- arithmetic ------------------------------------------------------

    def _gather(self, a):
        pad = np.concatenate([a, np.zeros(a.shape[:-1] + (1,))], axis=-1)
        return pad[..., self._table]

    def mul(self, a, b):
        if self.size == 1:
            return a * b
        return np.matmul(self._gather(a), b[..., None])[..., 0]

    def contract(self, subscripts, a, b):
        """``np.einsum`` over tensor indices with jet multiplication of entries.

        ``subscripts`` names only the tensor axes, e.g. ``"kl,ijl->kij"``.
        """
        if self.size == 1:
            lhs, out = subscripts.split("->")
            sa, sb = lhs.split(",")
            return np.einsum(f"{sa}Z,{sb}Z->{out}Z", a, b)
        lhs, out = subscripts.split("->")
        sa, sb = lhs.split(",")
        return np.einsum(f"{sa}YZ,{sb}Z->{out}Y", self._gather(a), b, optimize=True)

    def compose(self, a, coeffs):
        """Evaluate ``sum_k coeffs[k] * (a - a0)^k`` for k = 0..order.

        ``coeffs`` has shape ``(order + 1,) + a.shape[:-1]``; entry k is the
        k-th Taylor coefficient of the outer univariate function at the value
        part of ``a``.
        """
        h = a.copy()
        h[..., 0] = 0.0
        out = self.constant(coeffs[self.order])
        for k in range(self.order - 1, -1, -1):
            out = self.mul(out, h)
            out[..., 0] += coeffs[k]
        return out

    def reciprocal(self, a):
        v = a[..., 0]
        if np.any(v == 0.0):
            raise DivisionByZeroValuePart("jet division with zero value part")
        ks = np.arange(self.order + 1).reshape((-1,) + (1,) * v.ndim)
        coeffs = (-1.0) ** ks / v ** (ks + 1)
        return self.compose(a, coeffs)

    def div(self, a, b):
        out = self.mul(a, self.reciprocal(b))
        out[..., 0] = a[..., 0] / b[..., 0]
        return out

    def power(self, a, p):
        """Real power ``a ** p`` for jets with positive value part."""
        v = a[..., 0]
        if np.any(v <= 0.0):
            raise DomainError("power", "real power of a jet needs a positive value part")
        ks = np.arange(self.order + 1)
        binoms = np.array([_gbinom(p, k) for k in ks]).reshape((-1,) + (1,) * v.ndim)
        coeffs = binoms * v ** (p - ks.reshape(binoms.shape))
        return self.compose(a, coeffs)

    def ipow(self, a, k):
        if k < 0:
            return self.reciprocal(self.ipow(a, -k))
        return int_power(a, k, self.mul, self.constant(np.ones(a.shape[:-1])))

    def apply(self, name, a):
        return self.compose(a, _taylor_coeffs(name, a[..., 0], self.order))

    # -- derivatives -----------------------------------------------------

    def truncate(self, a, order):
        if order > self.order:
            raise OrderExceeded(f"cannot raise jet order {self.order} to {order}")
        return a[..., : comb(self.n + order, order)]

    def partials(self, a, degree):
        """Full symmetric tensor of all partials of total ``degree`` (values only)."""
        return self.derivative_field(a, degree, 0)[..., 0]

    def derivative_field(self, a, degree, order):
        """Order-``order`` jets of every partial ``d^alpha f`` with ``|alpha| = degree``.

        Returns an array with ``degree`` axes of length n followed by the
        coefficient axis of ``algebra(n, order)``.  Needs
        ``degree + order <= self.order``.
        """
        if degree + order > self.order:
            raise OrderExceeded(
                f"need jet order {degree + order}, have {self.order}"
            )
        key = (degree, order)
        if key not in self._deriv_cache:
            sub = algebra(self.n, order)
            shape = (self.n,) * degree + (sub.size,)
            idx = np.zeros(shape, dtype=np.int64)
            w = np.zeros(shape)
            for axes in product(range(self.n), repeat=degree):
                alpha = [0] * self.n
                for v in axes:
                    alpha[v] += 1
                for j, beta in enumerate(sub.indices):
                    ab = tuple(int(x + y) for x, y in zip(alpha, beta))
                    i = self.index[ab]
                    idx[axes + (j,)] = i
                    # coefficient of beta in the jet of d^alpha f
                    w[axes + (j,)] = self.factorial[i] / sub.factorial[j]
            self._deriv_cache[key] = (idx, w)
        idx, w = self._deriv_cache[key]
        return a[..., idx] * w

    def gradient(self, a):
        return self.partials(a, 1)

    def hessian(self, a):
        return self.partials(a, 2)


def int_power(x, k, mul=lambda a, b: a * b, one=1.0):
    """``x ** k`` (k >= 0) by binary repeated multiplication."""
    result = one
    base = x
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def _gbinom(p, k):
    out = 1.0
    for i in range(k):
        out *= (p - i) / (i + 1)
    return out


def _taylor_coeffs(name, v, order):
    """Taylor coefficients g^(k)(v)/k!, k = 0..order, of an elementary function."""
    v = np.asarray(v, dtype=float)
    ks = range(order + 1)
    if name == "exp":
        e = np.exp(v)
        return np.array([e / factorial(k) for k in ks])
    if name == "log":
        if np.any(v <= 0.0):
            raise DomainError("log", "log of nonpositive value part")
        return np.array([np.log(v)] + [(-1.0) ** (k + 1) / (k * v**k) for k in ks if k])
    if name == "sqrt":
        if np.any(v <= 0.0):
            raise DomainError("sqrt", "sqrt of nonpositive value part")
        return np.array([_gbinom(0.5, k) * v ** (0.5 - k) for k in ks])
    if name in ("sin", "cos"):
        s, c = np.sin(v), np.cos(v)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return np.array([cycle[k % 4] / factorial(k) for k in ks])
    if name in ("sinh", "cosh"):
        s, c = np.sinh(v), np.cosh(v)
        cycle = [s, c] if name == "sinh" else [c, s]
        return np.array([cycle[k % 2] / factorial(k) for k in ks])
    raise ValueError(f"unknown elementary function {name!r}")


@lru_cache(maxsize=None)
def algebra(n, order):
    return JetAlgebra(n, order)


class Jet:
    """A single jet; supports ``+ - * /``, integer ``**`` and elementary functions."""

    __slots__ = ("alg", "coeffs")
    __array_priority__ = 1000

    def __init__(self, alg, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (alg.size,):
            raise ValueError(f"expected {alg.size} coefficients, got shape {coeffs.shape}")
        self.alg = alg
        self.coeffs = coeffs

    @property
    def n(self):
        return self.alg.n

    @property
    def order(self):
        return self.alg.order

    @property
    def value(self):
        return float(self.coeffs[0])

    def __repr__(self):
        return f"Jet(n={self.n}, order={self.order}, value={self.value!r})"

    def _lift(self, other):
        if isinstance(other, Jet):
            if other.alg is not self.alg:
                raise ValueError("jets with different (n, order) cannot be combined")
            return other.coeffs
        return self.alg.constant(float(other))

    def __add__(self, other):
        return Jet(self.alg, self.coeffs + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.alg, self.coeffs - self._lift(other))

    def __rsub__(self, other):
        return Jet(self.alg, self._lift(other) - self.coeffs)

    def __neg__(self):
        return Jet(self.alg, -self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.alg, self.coeffs * float(other))
        return Jet(self.alg, self.alg.mul(self.coeffs, self._lift(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if float(other) == 0.0:
                raise DivisionByZeroValuePart("division of a jet by zero")
            return Jet(self.alg, self.coeffs / float(other))
        return Jet(self.alg, self.alg.div(self.coeffs, self._lift(other)))

    def __rtruediv__(self, other):
        return Jet(self.alg, self.alg.div(self._lift(other), self.coeffs))

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)):
            return Jet(self.alg, self.alg.ipow(self.coeffs, int(k)))
        return Jet(self.alg, self.alg.power(self.coeffs, float(k)))

    def apply(self, name):
        return Jet(self.alg, self.alg.apply(name, self.coeffs))

    def exp(self):
        return self.apply("exp")

    def log(self):
        return self.apply("log")

    def sqrt(self):
        return self.apply("sqrt")

    def sin(self):
        return self.apply("sin")

    def cos(self):
        return self.apply("cos")

    def sinh(self):
        return self.apply("sinh")

    def cosh(self):
        return self.apply("cosh")

    def coefficient(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self.order:
            raise OrderExceeded(f"|alpha| = {sum(alpha)} exceeds jet order {self.order}")
        return float(self.coeffs[self.alg.index[alpha]])

    def partial(self, alpha):
        """The mixed partial ``d^alpha f`` at the base point."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise ValueError(f"multi-index must have length {self.n}")
        c = self.coefficient(alpha)
        return c * float(np.prod([factorial(a) for a in alpha]))

    def gradient(self):
        return self.alg.gradient(self.coeffs)

    def hessian(self):
        return self.alg.hessian(self.coeffs)


def seed(point, order):
    """Coordinate jets x_1..x_n at ``point``."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    alg = algebra(len(point), order)
    return [Jet(alg, alg.variable(i, p)) for i, p in enumerate(point)]


def elementary(name, x):
    """Apply an elementary function to a float or a :class:`Jet`."""
    if isinstance(x, Jet):
        return x.apply(name)
    return float(_taylor_coeffs(name, x, 0)[0])


def lu_det_inv(alg, M):
    """Determinant and inverse of a jet-valued square matrix.

    Gauss-Jordan elimination with partial pivoting on the value parts.
    ``M`` has shape ``(n, n, P)``; returns ``(det, inv)`` with shapes
    ``(P,)`` and ``(n, n, P)``.
    """
    n = M.shape[0]
    aug = np.concatenate([M, alg.constant(np.eye(n))], axis=1)
    det = alg.constant(1.0)
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k, 0])))
        if aug[p, k, 0] == 0.0:
            raise DivisionByZeroValuePart("singular matrix in jet LU")
        if p != k:
            aug[[k, p]] = aug[[p, k]]
            det = -det
        piv = aug[k, k]
        det = alg.mul(det, piv)
        aug[k] = alg.mul(aug[k], alg.reciprocal(piv))
        factors = aug[:, k].copy()
        factors[k] = 0.0
        aug = aug - alg.mul(factors[:, None, :], aug[k][None, :, :])
    return det, aug[:, n:]
