"""Named example potentials and random generators used by tests and scripts."""

import numpy as np

from .expr import Domain, Potential


def _r(x):
    return repr(float(x))


def quadratic_source(Q, b=None, c=0.0):
    """Source text for 1/2 x^T Q x + b.x + c."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = Q.shape[0]
    terms = []
    for i in range(n):
        terms.append(f"{_r(Q[i, i] / 2)}*x{i + 1}^2")
        for j in range(i + 1, n):
            terms.append(f"{_r(Q[i, j])}*x{i + 1}*x{j + 1}")
    if b is not None:
        terms += [f"{_r(bi)}*x{i + 1}" for i, bi in enumerate(b)]
    terms.append(_r(c))
    return " + ".join(f"({t})" for t in terms)


def random_spd(rng, n, cond_max=10.0):
    Qm, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eig = np.exp(rng.uniform(0, np.log(cond_max), size=n))
    return (Qm * eig) @ Qm.T


def random_quadratic(rng, n, lo=-1.0, hi=1.0):
    Q = random_spd(rng, n)
    b = rng.normal(size=n)
    return Potential.from_string(quadratic_source(Q, b, rng.normal()), Domain.cube(n, lo, hi)), Q


def random_convex(rng, n, lo=-1.0, hi=1.0, n_exp=2, n_log=1):
    """SPD quadratic plus small exp and -log terms; convex on the whole box."""
    domain = Domain.cube(n, lo, hi)
    terms = [quadratic_source(random_spd(rng, n))]
    for _ in range(n_exp):
        w = rng.normal(scale=0.7, size=n)
        lin = " + ".join(f"({_r(wi)})*x{i + 1}" for i, wi in enumerate(w))
        terms.append(f"{_r(rng.uniform(0.05, 0.3))}*exp({lin})")
    for _ in range(n_log):
        v = rng.normal(size=n)
        vmin = sum(min(vi * lo, vi * hi) for vi in v)
        s = 0.5 / max(-vmin, 1e-9) if vmin < 0 else 1.0
        s = min(s, 1.0)
        lin = " + ".join(f"({_r(s * vi)})*x{i + 1}" for i, vi in enumerate(v))
        terms.append(f"(-{_r(rng.uniform(0.05, 0.3))})*log(1 + {lin})")
    return Potential.from_string(" + ".join(terms), domain)


def random_affine(rng, n, cond_max=10.0):
    """Random (A, b) with cond(A) <= cond_max."""
    U, _ = np.linalg.qr(rng.normal(size=(n, n)))
    V, _ = np.linalg.qr(rng.normal(size=(n, n)))
    s = np.exp(rng.uniform(0, np.log(cond_max), size=n))
    s[0], s[-1] = 1.0, min(np.max(s), cond_max) if n > 1 else 1.0
    return (U * s) @ V.T, rng.normal(scale=0.3, size=n)


def ricci_flat_source(n):
    """|x'|^2 / (2 x_n) + h(x_n) with h'' = x_n^(n-1) e^(x_n), so det Hessian = e^(x_n).

    Ricci-flat and, for n >= 2, not flat; valid on x_n > 0.
    """
    if n < 2:
        raise ValueError("needs n >= 2")
    m = n - 1
    # y^m e^y = (p'' + 2p' + p) e^y with p = sum c_k y^k; solve p'' + 2p' + p = y^m
    p = np.zeros(m + 1)
    for k in range(m, -1, -1):
        rhs = (1.0 if k == m else 0.0)
        if k + 1 <= m:
            rhs -= 2 * (k + 1) * p[k + 1]
        if k + 2 <= m:
            rhs -= (k + 2) * (k + 1) * p[k + 2]
        p[k] = rhs
    mono = lambda k: "" if k == 0 else f"*x{n}" if k == 1 else f"*x{n}^{k}"
    poly = " + ".join(f"({_r(pk)}){mono(k)}" for k, pk in enumerate(p) if pk != 0.0)
    quad = " + ".join(f"x{i}^2" for i in range(1, n))
    return f"({quad})/(2*x{n}) + ({poly})*exp(x{n})"


EXAMPLES = {
    "quadratic": ("x1^2/2 + x2^2/2", Domain.cube(2, -1, 1)),
    "expsum": ("exp(x1) + exp(x2)", Domain.cube(2, -1, 1)),
    "neglog": ("-log(x1)", Domain((0.5,), (3.0,))),
    "quartic": ("x1^4/12 + x2^2/2", Domain((0.5, -1), (2, 1))),
    "ricci_flat2": (ricci_flat_source(2), Domain((-1, 0.5), (1, 2))),
    "ricci_flat3": (ricci_flat_source(3), Domain((-1, -1, 0.5), (1, 1, 2))),
    "cubic": ("x1^3 + x2^2", Domain.cube(2, -1, 1)),
}


def example(name):
    source, domain = EXAMPLES[name]
    return Potential.from_string(source, domain)
