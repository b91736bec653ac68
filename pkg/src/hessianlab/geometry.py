"""
Pointwise Hessian geometry of a convex potential.

Everything is derived from one Taylor jet of f at the point.  The invariant
fields (rho, Phi, J) are computed by a pipeline that is generic over the jet
order ``m`` of its scalars: at ``m = 0`` the scalars are plain reals, at
``m = 2`` the same code returns second-order jets of the invariants, which
gives exact coordinate gradients and Hessians for the Laplacians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateGradient, NonConvexAt, OrderExceeded, UndefinedForDimensionOne
from .expr import Ast, Potential, evaluate
from .jets import Jet, JetAlgebra, algebra, lu_det_inv, seed

DEFAULT_ORDER = 5
BASE_ORDER = 3  # derivatives of f needed by rho, Phi and J themselves

__all__ = [
    "PointGeometry",
    "PointAnalysis",
    "potential_jet",
    "metric",
    "christoffel",
    "fubini_pick",
    "curvature",
    "kahler_ricci",
    "kahler_scalar",
    "kahler_scalar_direct",
    "einstein_constant",
    "rho_invariants",
    "pick_J",
    "point_geometry",
    "analyze",
    "invariant_derivatives",
    "laplacian_from_jet",
    "laplace_beltrami",
    "adapted_frame",
]


def _ast(potential):
    return potential.ast if isinstance(potential, Potential) else potential


def potential_jet(potential, point, order=DEFAULT_ORDER) -> Jet:
    """Order-``order`` Taylor jet of the potential at ``point``."""
    ast: Ast = _ast(potential)
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.shape != (ast.n,):
        raise ValueError(f"point must have {ast.n} coordinates")
    xs = seed(point, order)
    out = evaluate(ast, xs)
    if not isinstance(out, Jet):
        out = Jet(xs[0].alg, xs[0].alg.constant(float(out)))
    return out


# -- jet-generic formulas --------------------------------------------------
# Arguments are arrays of jets over ``alg`` (coefficient axis last).


def _christoffel(alg, Ginv, f3):
    return 0.5 * alg.contract("kl,ijl->kij", Ginv, f3)


def _raise_all(alg, Ginv, T):
    T = alg.contract("il,ljk->ijk", Ginv, T)
    T = alg.contract("jl,ilk->ijk", Ginv, T)
    return alg.contract("kl,ijl->ijk", Ginv, T)


def _curvature(alg, A, Ginv):
    # R_ijkl = f^{mh} (A_jkm A_hil - A_ikm A_hjl)
    Ahi = alg.contract("mh,hil->mil", Ginv, A)
    T = alg.contract("jkm,mil->ijkl", A, Ahi)
    R = T - T.transpose(1, 0, 2, 3, 4)
    Ric = alg.contract("jl,ijkl->ik", Ginv, R)
    return R, Ric


def _pick_norm2(alg, A, Ginv):
    return alg.contract("ijk,ijk->", A, _raise_all(alg, Ginv, A))


def _phi(alg, Ginv, rho, grad_rho):
    t = alg.contract("ij,j->i", Ginv, grad_rho)
    num = alg.contract("i,i->", grad_rho, t)
    return alg.div(num, alg.mul(rho, rho))


def _invariant_fields(fjet: Jet, m: int):
    """Order-``m`` jets of G, Ginv, A, rho, grad rho, Phi and |A|^2_G.

    Also returns det(Hessian) as an order-(m+1) jet.
    """
    falg = fjet.alg
    n = falg.n
    if falg.order < m + BASE_ORDER:
        raise OrderExceeded(f"nesting order {m} needs a potential jet of order {m + BASE_ORDER}")
    c = fjet.coeffs
    alg1 = algebra(n, m + 1)
    H = falg.derivative_field(c, 2, m + 1)
    det1, inv1 = lu_det_inv(alg1, H)
    rho1 = alg1.power(det1, -1.0 / (n + 2))
    alg = algebra(n, m)
    grad_rho = alg1.derivative_field(rho1, 1, m)
    G = alg1.truncate(H, m)
    Ginv = alg1.truncate(inv1, m)
    rho = alg1.truncate(rho1, m)
    A = -0.5 * falg.derivative_field(c, 3, m)
    Phi = _phi(alg, Ginv, rho, grad_rho)
    pick = _pick_norm2(alg, A, Ginv)
    return {
        "alg": alg,
        "G": G,
        "Ginv": Ginv,
        "A": A,
        "rho": rho,
        "grad_rho": grad_rho,
        "Phi": Phi,
        "pick": pick,
        "det": det1,
        "rho1": rho1,
    }


def _reals(x):
    return np.asarray(x, dtype=float)[..., None]


def _strip(x):
    return x[..., 0]


# -- public pointwise operations (real-valued) ------------------------------


def metric(fjet: Jet, point=None):
    """``(G, Ginv, detG)``; raises :class:`NonConvexAt` if the Hessian is not PD."""
    if fjet.order < 2:
        raise OrderExceeded("metric needs a jet of order >= 2")
    G = fjet.hessian()
    G = 0.5 * (G + G.T)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        where = point if point is not None else [np.nan] * fjet.n
        raise NonConvexAt(where, np.linalg.eigvalsh(G)[0]) from None
    if not np.all(np.isfinite(L)):
        raise NonConvexAt(point if point is not None else [np.nan] * fjet.n, np.nan)
    detG = float(np.prod(np.diag(L)) ** 2)
    Linv = np.linalg.inv(L)
    Ginv = Linv.T @ Linv
    return G, Ginv, detG


def christoffel(fjet: Jet, Ginv):
    """Gamma[k, i, j] = 1/2 sum_l f^{kl} f_ijl."""
    f3 = fjet.alg.partials(fjet.coeffs, 3)
    alg = algebra(fjet.n, 0)
    return _strip(_christoffel(alg, _reals(Ginv), _reals(f3)))


def fubini_pick(fjet: Jet):
    """A_ijk = -1/2 f_ijk."""
    return -0.5 * fjet.alg.partials(fjet.coeffs, 3)


def curvature(A, Ginv):
    """Curvature tensor R_ijkl and Ricci tensor R_ik from the cubic form."""
    n = np.shape(Ginv)[0]
    R, Ric = _curvature(algebra(n, 0), _reals(A), _reals(Ginv))
    return _strip(R), _strip(Ric)


def _log_det_jet(fjet: Jet, order):
    n = fjet.n
    if fjet.order < order + 2:
        raise OrderExceeded(f"log det to order {order} needs a potential jet of order {order + 2}")
    alg = algebra(n, order)
    H = fjet.alg.derivative_field(fjet.coeffs, 2, order)
    det, _ = lu_det_inv(alg, H)
    return alg, alg.apply("log", det)


def kahler_ricci(fjet: Jet):
    """K_ij = -d_i d_j log det(f_kl)."""
    alg, logdet = _log_det_jet(fjet, 2)
    return -alg.hessian(logdet)


def kahler_scalar(K, Ginv):
    """S = 1/2 tr(Ginv K)."""
    return 0.5 * float(np.einsum("ij,ij->", Ginv, K))


def kahler_scalar_direct(fjet: Jet, Ginv):
    """S = -1/2 sum f^{ij} d_i d_j log det(f_kl), straight from the log det jet."""
    alg, logdet = _log_det_jet(fjet, 2)
    n = fjet.n
    total = 0.0
    for i in range(n):
        for j in range(n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            d2 = logdet[alg.index[tuple(alpha)]] * alg.factorial[alg.index[tuple(alpha)]]
            total += Ginv[i, j] * d2
    return -0.5 * total


def einstein_constant(K, G):
    """Least-squares ``a`` in K = a G, and the normalised max-entry residual."""
    K = np.asarray(K, dtype=float)
    G = np.asarray(G, dtype=float)
    a = float(np.sum(K * G) / np.sum(G * G))
    residual = float(np.max(np.abs(K - a * G)) / (1.0 + abs(a) * np.max(np.abs(G))))
    return a, residual


def rho_invariants(fjet: Jet, G=None, Ginv=None, detG=None):
    """``(rho, grad_rho, Phi)`` at the base point of ``fjet``."""
    f = _invariant_fields(fjet, 0)
    return float(f["rho"][0]), f["grad_rho"][:, 0].copy(), float(f["Phi"][0])


def pick_J(A, Ginv, n=None):
    """``(J, pick_norm2)`` where pick_norm2 = |A|^2_G = n(n-1) J."""
    n = np.shape(Ginv)[0] if n is None else n
    pick = float(_strip(_pick_norm2(algebra(n, 0), _reals(A), _reals(Ginv))))
    if n < 2:
        raise UndefinedForDimensionOne("J is undefined for n = 1; use pick_norm2 = %r" % pick)
    # 4n(n-1) J = sum f f f f_ijk f_lmn = 4 |A|^2_G
    return pick / (n * (n - 1)), pick


# -- aggregated results ----------------------------------------------------


@dataclass(frozen=True)
class PointGeometry:
    point: np.ndarray
    G: np.ndarray
    Ginv: np.ndarray
    detG: float
    Gamma: np.ndarray
    A: np.ndarray
    R: np.ndarray
    Ric: np.ndarray
    K: np.ndarray
    S: float
    rho: float
    grad_rho: np.ndarray
    Phi: float
    J: Optional[float]
    pick_norm2: float

    @property
    def n(self):
        return len(self.point)

    @property
    def grad_rho_norm(self):
        return float(np.sqrt(max(self.grad_rho @ self.Ginv @ self.grad_rho, 0.0)))


@dataclass(frozen=True)
class PointAnalysis:
    """Geometry at a point plus second-order jets of rho, Phi and J.

    The jets are coefficient vectors over ``algebra(n, 2)``; ``None`` when the
    potential jet was too short to nest to order 2.
    """

    geometry: PointGeometry
    fjet: Jet
    rho_jet: Optional[np.ndarray]
    phi_jet: Optional[np.ndarray]
    J_jet: Optional[np.ndarray]
    rho_hess: np.ndarray  # coordinate Hessian of rho (from det jet, order >= 2)

    @property
    def has_laplacians(self):
        return self.phi_jet is not None

    def _lap(self, u):
        if u is None:
            raise OrderExceeded("Laplacians need a potential jet of order >= 5")
        g = self.geometry
        return laplacian_from_jet(Jet(algebra(g.n, 2), u), g.Ginv, g.Gamma)

    @property
    def lap_rho(self):
        return self._lap(self.rho_jet)

    @property
    def lap_phi(self):
        return self._lap(self.phi_jet)

    @property
    def lap_J(self):
        return self._lap(self.J_jet)

    @property
    def grad_phi(self):
        if self.phi_jet is None:
            raise OrderExceeded("gradient of Phi needs a potential jet of order >= 4")
        return algebra(self.geometry.n, 2).gradient(self.phi_jet)


def analyze(potential, point, order=DEFAULT_ORDER) -> PointAnalysis:
    """Full pointwise analysis from a single order-``order`` jet of f."""
    if order < 4:
        raise OrderExceeded("point analysis needs a potential jet of order >= 4")
    point = np.atleast_1d(np.asarray(point, dtype=float))
    fjet = potential_jet(potential, point, order)
    n = fjet.n
    G, Ginv, detG = metric(fjet, point)
    m = min(order - BASE_ORDER, 2)
    fields = _invariant_fields(fjet, m)
    alg0 = algebra(n, 0)
    f3 = fjet.alg.partials(fjet.coeffs, 3)
    A = -0.5 * f3
    Gamma = _strip(_christoffel(alg0, _reals(Ginv), _reals(f3)))
    R, Ric = curvature(A, Ginv)

    alg1 = algebra(n, m + 1)
    alg2 = algebra(n, 2)
    det2 = alg1.truncate(fields["det"], 2)
    K = -alg2.hessian(alg2.apply("log", det2))
    K = 0.5 * (K + K.T)
    S = kahler_scalar(K, Ginv)
    rho2 = alg1.truncate(fields["rho1"], 2)
    rho = float(rho2[0])
    grad_rho = alg2.gradient(rho2)
    Phi = float(fields["Phi"][0])
    pick = float(fields["pick"][0])
    J = pick / (n * (n - 1)) if n >= 2 else None

    geom = PointGeometry(
        point=point, G=G, Ginv=Ginv, detG=detG, Gamma=Gamma, A=A, R=R, Ric=Ric,
        K=K, S=S, rho=rho, grad_rho=grad_rho, Phi=Phi, J=J, pick_norm2=pick,
    )
    if m >= 2:
        rho_jet = rho2
        phi_jet = fields["Phi"]
        J_jet = fields["pick"] / (n * (n - 1)) if n >= 2 else None
    else:
        rho_jet = phi_jet = J_jet = None
    return PointAnalysis(geom, fjet, rho_jet, phi_jet, J_jet, alg2.hessian(rho2))


def point_geometry(potential, point, order=DEFAULT_ORDER) -> PointGeometry:
    return analyze(potential, point, max(order, 4)).geometry


def invariant_derivatives(potential, point, which="Phi", order=1) -> Jet:
    """Order-``order`` jet (value, gradient, Hessian, ...) of rho, Phi or J at ``point``."""
    if which not in ("Phi", "J", "rho"):
        raise ValueError(f"unknown invariant {which!r}")
    fjet = potential_jet(potential, point, BASE_ORDER + order)
    metric(fjet, point)
    fields = _invariant_fields(fjet, order)
    alg = fields["alg"]
    n = alg.n
    if which == "Phi":
        c = fields["Phi"]
    elif which == "rho":
        c = fields["rho"]
    else:
        if n < 2:
            raise UndefinedForDimensionOne("J is undefined for n = 1")
        c = fields["pick"] / (n * (n - 1))
    return Jet(alg, c)


def laplacian_from_jet(u: Jet, Ginv, Gamma) -> float:
    """Laplace-Beltrami of a scalar from its order >= 2 jet: G^ij (u_ij - Gamma^k_ij u_k)."""
    grad = u.gradient()
    hess = u.hessian()
    cov = hess - np.einsum("kij,k->ij", Gamma, grad)
    return float(np.einsum("ij,ij->", Ginv, cov))


def laplace_beltrami(potential, point, which="Phi") -> float:
    u = invariant_derivatives(potential, point, which, 2)
    fjet = potential_jet(potential, point, 3)
    _, Ginv, _ = metric(fjet, point)
    Gamma = christoffel(fjet, Ginv)
    return laplacian_from_jet(u, Ginv, Gamma)


def adapted_frame(G, Ginv, grad_rho, rho=0.0):
    """G-orthonormal frame (columns) whose first vector is grad rho / |grad rho|_G."""
    G = np.asarray(G, dtype=float)
    Ginv = np.asarray(Ginv, dtype=float)
    grad_rho = np.asarray(grad_rho, dtype=float)
    n = G.shape[0]
    up = Ginv @ grad_rho
    norm = float(np.sqrt(max(grad_rho @ up, 0.0)))
    if norm <= 1e-10 * (1.0 + abs(rho)):
        raise DegenerateGradient(f"|grad rho|_G = {norm:.3e} below frame threshold")
    vecs = [up / norm]
    for k in range(n):
        if len(vecs) == n:
            break
        v = np.zeros(n)
        v[k] = 1.0
        for _ in range(2):  # re-orthogonalise once for stability
            for e in vecs:
                v = v - (e @ G @ v) * e
        nv = float(np.sqrt(max(v @ G @ v, 0.0)))
        if nv > 1e-8 * np.sqrt(G[k, k]):
            vecs.append(v / nv)
    return np.column_stack(vecs)
