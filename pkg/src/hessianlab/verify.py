"""
Pointwise checkers for the identities and differential inequalities of
Hessian geometry, the finite-difference oracle, classification and sweeps.

Sign conventions: for an inequality ``lhs >= rhs`` the residual is
``lhs - rhs`` and passes when ``residual >= -tol``; for an identity the
residual is a nonnegative normalised difference and passes when
``residual <= tol``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import DegenerateGradient, HessianLabError, StencilOutsideDomain
from .expr import Potential, evaluate
from .geometry import (
    DEFAULT_ORDER,
    PointAnalysis,
    adapted_frame,
    analyze,
    einstein_constant,
    invariant_derivatives,
    kahler_scalar_direct,
    potential_jet,
)

CHECK_IDS = ("eq4", "prop1", "prop2", "eq3", "eq12", "ricci_bound", "identities")
CHECK_KIND = {
    "eq4": "identity",
    "prop1": "inequality",
    "prop2": "inequality",
    "eq3": "inequality",
    "eq12": "identity",
    "ricci_bound": "inequality",
    "identities": "identity",
}
CHECK_DESCRIPTION = {
    "eq4": "Laplacian of rho equals (n+4)/2 |grad rho|^2 / rho (Ricci-flat)",
    "prop1": "lower bound on Laplacian of Phi (Ricci-flat)",
    "prop2": "lower bound on Laplacian of Phi (zero scalar curvature)",
    "eq3": "Laplacian of J >= 2(n+1) J^2",
    "eq12": "Phi_,i = 2 A_i11 (rho_,1)^2 / rho^2 in the adapted frame (Ricci-flat)",
    "ricci_bound": "smallest Ricci eigenvalue >= -(n+2)^2/16 Phi (Ricci-flat)",
    "identities": "tensor symmetries, trace and rho identities",
}


@dataclass(frozen=True)
class Tolerances:
    identity_tol: float = 1e-9
    inequality_tol: float = 1e-8
    classify_tol: float = 1e-8
    phi_floor: float = 1e-10
    fd_rel_tol: float = 1e-5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive, got {value}")


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    point: tuple
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    residual: Optional[float] = None
    passed: Optional[bool] = None
    skipped: bool = False
    reason: str = ""
    counted: bool = True  # False for advisory runs outside a check's scope

    @property
    def kind(self):
        return CHECK_KIND[self.check_id]

    @property
    def failed(self):
        return self.counted and not self.skipped and self.passed is False


def _skip(check_id, an, reason):
    return CheckResult(check_id, tuple(an.geometry.point), skipped=True, reason=reason)


def _inequality(check_id, an, lhs, rhs, tol, counted=True):
    res = float(lhs - rhs)
    return CheckResult(check_id, tuple(an.geometry.point), float(lhs), float(rhs), res,
                       bool(res >= -tol.inequality_tol), counted=counted)


def _identity(check_id, an, lhs, rhs, residual, tol):
    return CheckResult(check_id, tuple(an.geometry.point), float(lhs), float(rhs), float(residual),
                       bool(residual <= tol.identity_tol))


def _ricci_flat(an, tol):
    return float(np.max(np.abs(an.geometry.K))) <= tol.classify_tol


# -- checkers working on a PointAnalysis ----------------------------------


def _eq4(an: PointAnalysis, tol: Tolerances, **_):
    g = an.geometry
    if not _ricci_flat(an, tol):
        return _skip("eq4", an, "NotRicciFlat")
    lhs = an.lap_rho
    rhs = (g.n + 4) / 2 * g.grad_rho_norm**2 / g.rho
    return _identity("eq4", an, lhs, rhs, abs(lhs - rhs) / (1 + abs(lhs)), tol)


def _phi_terms(an):
    g = an.geometry
    gphi = an.grad_phi
    grad_phi_sq = float(gphi @ g.Ginv @ gphi)
    inner = float(gphi @ g.Ginv @ g.grad_rho) / g.rho
    return an.lap_phi, grad_phi_sq, inner


def _prop1(an: PointAnalysis, tol: Tolerances, **_):
    g = an.geometry
    n = g.n
    if n < 2:
        return _skip("prop1", an, "DimensionTooSmall")
    if not _ricci_flat(an, tol):
        return _skip("prop1", an, "NotRicciFlat")
    if g.Phi < tol.phi_floor:
        return _skip("prop1", an, "PhiBelowFloor")
    lap, grad_sq, inner = _phi_terms(an)
    rhs = (n / (n - 1) * grad_sq / g.Phi
           + (n * n - 3 * n - 10) / (2 * (n - 1)) * inner
           + (n + 2) ** 2 / (n - 1) * g.Phi**2)
    return _inequality("prop1", an, lap, rhs, tol)


def _prop2(an: PointAnalysis, tol: Tolerances, **_):
    g = an.geometry
    n = g.n
    if n < 2:
        return _skip("prop2", an, "DimensionTooSmall")
    if abs(g.S) > tol.classify_tol:
        return _skip("prop2", an, "NotScalarFlat")
    if g.Phi < tol.phi_floor:
        return _skip("prop2", an, "PhiBelowFloor")
    lap, grad_sq, inner = _phi_terms(an)
    rhs = (n / (2 * (n - 1)) * grad_sq / g.Phi
           + (n * n - 4) / (n - 1) * inner
           + (n + 2) ** 2 / 2 * (1 / (n - 1) - (n - 1) / (4 * n)) * g.Phi**2)
    return _inequality("prop2", an, lap, rhs, tol)


def _eq3(an: PointAnalysis, tol: Tolerances, eq3_unscoped=False, **_):
    g = an.geometry
    n = g.n
    if n < 2:
        return _skip("eq3", an, "DimensionTooSmall")
    in_scope = _ricci_flat(an, tol)
    if not in_scope and not eq3_unscoped:
        return _skip("eq3", an, "NotRicciFlat")
    return _inequality("eq3", an, an.lap_J, 2 * (n + 1) * g.J**2, tol, counted=in_scope)


def _eq12(an: PointAnalysis, tol: Tolerances, **_):
    g = an.geometry
    if not _ricci_flat(an, tol):
        return _skip("eq12", an, "NotRicciFlat")
    try:
        E = adapted_frame(g.G, g.Ginv, g.grad_rho, g.rho)
    except DegenerateGradient:
        return _skip("eq12", an, "DegenerateGradient")
    dphi = E.T @ an.grad_phi
    e1 = E[:, 0]
    A_i11 = np.einsum("abc,ai,b,c->i", g.A, E, e1, e1)
    rho1 = g.grad_rho_norm
    rhs = 2 * A_i11 * rho1**2 / g.rho**2
    residual = float(np.max(np.abs(dphi - rhs)) / (1 + np.max(np.abs(dphi))))
    return _identity("eq12", an, dphi[0], rhs[0], residual, tol)


def ricci_min_eigenvalue(G, Ric):
    """Smallest eigenvalue of Ginv Ric, the minimum orthonormal-frame diagonal entry."""
    L = np.linalg.cholesky(G)
    Linv = np.linalg.inv(L)
    M = Linv @ Ric @ Linv.T
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def _ricci_bound(an: PointAnalysis, tol: Tolerances, **_):
    g = an.geometry
    if not _ricci_flat(an, tol):
        return _skip("ricci_bound", an, "NotRicciFlat")
    lam = ricci_min_eigenvalue(g.G, g.Ric)
    return _inequality("ricci_bound", an, lam, -(g.n + 2) ** 2 / 16 * g.Phi, tol)


def identity_residuals(an: PointAnalysis) -> Dict[str, float]:
    """Normalised residuals of every algebraic identity the geometry must satisfy."""
    g = an.geometry
    n = g.n

    def rel(diff, ref):
        return float(np.max(np.abs(diff)) / (1.0 + np.max(np.abs(ref))))

    A, R = g.A, g.R
    perms = itertools.permutations(range(3))
    out = {
        "gamma_symmetric": rel(g.Gamma - g.Gamma.transpose(0, 2, 1), g.Gamma),
        "gamma_from_pick": rel(g.Gamma + np.einsum("kl,ijl->kij", g.Ginv, A), g.Gamma),
        "pick_symmetric": max(rel(A - A.transpose(p), A) for p in perms),
        "R_antisym_first": rel(R + R.transpose(1, 0, 2, 3), R),
        "R_antisym_last": rel(R + R.transpose(0, 1, 3, 2), R),
        "R_pair_symmetric": rel(R - R.transpose(2, 3, 0, 1), R),
        # R_ijkl + R_jkil + R_kijl
        "R_bianchi": rel(R + R.transpose(2, 0, 1, 3) + R.transpose(1, 2, 0, 3), R),
        "ricci_symmetric": rel(g.Ric - g.Ric.T, g.Ric),
        "K_symmetric": rel(g.K - g.K.T, g.K),
        "metric_inverse": rel(g.Ginv @ g.G - np.eye(n), np.eye(n)),
        "trace_S": abs(g.S - kahler_scalar_direct(an.fjet, g.Ginv)) / (1 + abs(g.S)),
    }
    rho, dr = g.rho, g.grad_rho
    rhs = (n + 2) * (an.rho_hess / rho - np.outer(dr, dr) / rho**2)
    out["rho_identity"] = rel(g.K - rhs, g.K)
    if n >= 2:
        out["pick_norm_J"] = abs(g.pick_norm2 - n * (n - 1) * g.J) / (1 + abs(g.pick_norm2))
    return out


def _identities(an: PointAnalysis, tol: Tolerances, **_):
    res = identity_residuals(an)
    worst = max(res, key=res.get)
    return _identity("identities", an, res[worst], 0.0, res[worst], tol)


_CHECKERS = {
    "eq4": _eq4,
    "prop1": _prop1,
    "prop2": _prop2,
    "eq3": _eq3,
    "eq12": _eq12,
    "ricci_bound": _ricci_bound,
    "identities": _identities,
}


def run_check(check_id, analysis: PointAnalysis, tolerances=None, eq3_unscoped=False) -> CheckResult:
    if check_id not in _CHECKERS:
        raise ValueError(f"unknown check {check_id!r}; known: {', '.join(CHECK_IDS)}")
    return _CHECKERS[check_id](analysis, tolerances or Tolerances(), eq3_unscoped=eq3_unscoped)


def _public(check_id):
    def check(potential, point, tolerances=None, order=DEFAULT_ORDER, **options):
        return run_check(check_id, analyze(potential, point, order), tolerances, **options)

    check.__name__ = f"check_{check_id}"
    check.__doc__ = f"{CHECK_DESCRIPTION[check_id]} ({CHECK_KIND[check_id]})."
    return check


check_eq4 = _public("eq4")
check_prop1 = _public("prop1")
check_prop2 = _public("prop2")
check_eq3 = _public("eq3")
check_eq12 = _public("eq12")
check_ricci_bound = _public("ricci_bound")
check_identities = _public("identities")


# -- grids -----------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Per-axis ``(lo, hi, count)``; a count of 1 samples the midpoint."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(c)) for lo, hi, c in self.axes)
        for lo, hi, c in axes:
            if c < 1:
                raise ValueError("grid counts must be >= 1")
            if not lo <= hi:
                raise ValueError(f"grid axis lo={lo} > hi={hi}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_domain(cls, domain, counts):
        if isinstance(counts, int):
            counts = (counts,) * domain.n
        return cls(tuple(zip(domain.lo, domain.hi, counts)))

    @property
    def n(self):
        return len(self.axes)

    @property
    def size(self):
        return int(np.prod([c for _, _, c in self.axes]))

    def coordinates(self):
        return [np.linspace(lo, hi, c) if c > 1 else np.array([(lo + hi) / 2]) for lo, hi, c in self.axes]

    def points(self):
        """Grid nodes in row-major order (last axis fastest)."""
        return [np.array(p) for p in itertools.product(*self.coordinates())]


def _as_points(grid):
    if isinstance(grid, GridSpec):
        return grid.points()
    return [np.atleast_1d(np.asarray(p, dtype=float)) for p in grid]


# -- classification --------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    flat: bool
    ricci_flat: bool
    scalar_flat: bool
    einstein: bool
    einstein_a: float
    einstein_spread: float
    max_R: float
    max_K: float
    max_S: float
    max_einstein_residual: float
    n_points: int
    n_errors: int = 0
    error_points: tuple = ()

    @property
    def flags(self):
        names = ("flat", "ricci_flat", "scalar_flat", "einstein")
        return {k for k in names if getattr(self, k)}

    def summary(self):
        lines = [
            f"flat         {'yes' if self.flat else 'no '}  max|R|  = {self.max_R:.3e}",
            f"ricci_flat   {'yes' if self.ricci_flat else 'no '}  max|K|  = {self.max_K:.3e}",
            f"scalar_flat  {'yes' if self.scalar_flat else 'no '}  max|S|  = {self.max_S:.3e}",
            f"einstein     {'yes' if self.einstein else 'no '}  max res = {self.max_einstein_residual:.3e}",
        ]
        if self.einstein:
            lines.append(f"einstein a = {self.einstein_a:.6f} (spread <= {max(self.einstein_spread, 1e-300):.0e})")
        else:
            lines.append(f"fitted a mean = {self.einstein_a:.6f}, spread = {self.einstein_spread:.3e}")
        lines.append(f"points = {self.n_points}, errors = {self.n_errors}")
        return "\n".join(lines)


def classify(potential, grid, tolerances=None, order=4) -> Classification:
    tol = tolerances or Tolerances()
    Rs, Ks, Ss, As, Es = [], [], [], [], []
    errors = []
    for p in _as_points(grid):
        try:
            g = analyze(potential, p, order).geometry
        except HessianLabError:
            errors.append(tuple(float(v) for v in p))
            continue
        a, res = einstein_constant(g.K, g.G)
        Rs.append(float(np.max(np.abs(g.R))))
        Ks.append(float(np.max(np.abs(g.K))))
        Ss.append(abs(g.S))
        As.append(a)
        Es.append(res)
    if not As:
        raise HessianLabError("classification failed at every grid point")
    mean_a = float(np.mean(As))
    spread = float(np.max(As) - np.min(As))
    c = tol.classify_tol
    return Classification(
        flat=max(Rs) <= c,
        ricci_flat=max(Ks) <= c,
        scalar_flat=max(Ss) <= c,
        einstein=max(Es) <= c and spread <= c * (1 + abs(mean_a)),
        einstein_a=mean_a,
        einstein_spread=spread,
        max_R=max(Rs),
        max_K=max(Ks),
        max_S=max(Ss),
        max_einstein_residual=max(Es),
        n_points=len(As) + len(errors),
        n_errors=len(errors),
        error_points=tuple(errors),
    )


# -- finite-difference oracle ----------------------------------------------

# second-order central stencils: derivative order -> (offsets, weights)
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


@dataclass
class OracleReport:
    point: tuple
    max_order: int
    step: float
    errors: Dict[tuple, float] = field(default_factory=dict)
    jet_values: Dict[tuple, float] = field(default_factory=dict)
    fd_values: Dict[tuple, float] = field(default_factory=dict)

    @property
    def max_rel_error(self):
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def worst(self):
        return max(self.errors, key=self.errors.get) if self.errors else None

    def passed(self, tol):
        return self.max_rel_error <= tol


def _fd_partial(f, point, alpha, h, cache):
    axes = [_STENCILS[a] for a in alpha]
    total = 0.0
    for combo in itertools.product(*[list(zip(*ax)) for ax in axes]):
        offs = tuple(o for o, _ in combo)
        w = math.prod(wt for _, wt in combo)
        key = (h, offs)
        if key not in cache:
            cache[key] = f(point + h * np.array(offs, dtype=float))
        total += w * cache[key]
    return total / h ** sum(alpha)


def fd_oracle(potential, point, max_order=4, domain=None, scale=None) -> OracleReport:
    """Compare every jet partial up to ``max_order`` with Richardson-extrapolated
    central differences (steps h and h/2).

    The relative error of a partial is ``|jet - fd| / max(|jet|, |f(x)|, 1)``:
    the value scale bounds the rounding error of the stencil, so exactly-zero
    partials are measured against it rather than against zero.
    """
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be in 0..4")
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if domain is None and isinstance(potential, Potential):
        domain = potential.domain
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(point))))
    h = max(1e-2 * scale, np.cbrt(np.finfo(float).eps) * scale)
    reach = 2 * h if max_order >= 3 else h
    if domain is not None:
        if np.any(point - reach < np.array(domain.lo)) or np.any(point + reach > np.array(domain.hi)):
            raise StencilOutsideDomain(f"stencil of half-width {reach:g} leaves the domain at {tuple(point)}")
    ast = potential.ast if isinstance(potential, Potential) else potential
    jet = potential_jet(ast, point, max_order)
    fval = abs(jet.value)

    def f(x):
        return float(evaluate(ast, [float(v) for v in x]))

    cache = {}
    rep = OracleReport(tuple(float(v) for v in point), max_order, h)
    for alpha in (tuple(int(a) for a in row) for row in jet.alg.indices):
        exact = jet.partial(alpha)
        d1 = _fd_partial(f, point, alpha, h, cache)
        d2 = _fd_partial(f, point, alpha, h / 2, cache)
        fd = (4 * d2 - d1) / 3
        rep.jet_values[alpha] = exact
        rep.fd_values[alpha] = fd
        rep.errors[alpha] = abs(exact - fd) / max(abs(exact), fval, 1.0)
    return rep


def fd_invariant_gradient(potential, point, which="Phi", h=1e-4, order=4):
    """Central-difference gradient of a pipeline invariant (independent of nesting)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))

    def value(x):
        g = analyze(potential, x, order).geometry
        return {"Phi": g.Phi, "J": g.J, "rho": g.rho}[which]

    grad = np.zeros(len(point))
    for i in range(len(point)):
        e = np.zeros(len(point))
        e[i] = h
        grad[i] = (value(point + e) - value(point - e)) / (2 * h)
    return grad


def fd_invariant_hessian(potential, point, which="Phi", h=1e-3, order=4):
    """Central-difference Hessian of a pipeline invariant."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    n = len(point)

    def value(x):
        g = analyze(potential, x, order).geometry
        return {"Phi": g.Phi, "J": g.J, "rho": g.rho}[which]

    H = np.zeros((n, n))
    f0 = value(point)
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            if i == j:
                H[i, i] = (value(point + ei) - 2 * f0 + value(point - ei)) / h**2
            else:
                H[i, j] = H[j, i] = (
                    value(point + ei + ej) - value(point + ei - ej)
                    - value(point - ei + ej) + value(point - ei - ej)
                ) / (4 * h * h)
    return H


def nested_vs_fd(potential, point, which="Phi", order=1):
    """Max relative disagreement between nested-jet and FD derivatives of an invariant."""
    jet = invariant_derivatives(potential, point, which, order)
    if order == 1:
        exact, fd = jet.gradient(), fd_invariant_gradient(potential, point, which)
    elif order == 2:
        exact, fd = jet.hessian(), fd_invariant_hessian(potential, point, which)
    else:
        raise ValueError("order must be 1 or 2")
    return float(np.max(np.abs(exact - fd)) / max(float(np.max(np.abs(exact))), 1e-12))


# -- sweeps ----------------------------------------------------------------


@dataclass
class SweepRow:
    point: tuple
    rho: Optional[float] = None
    Phi: Optional[float] = None
    J: Optional[float] = None
    S: Optional[float] = None
    K_maxabs: Optional[float] = None
    R_maxabs: Optional[float] = None
    ein_a: Optional[float] = None
    ein_res: Optional[float] = None
    results: Dict[str, CheckResult] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def status(self):
        if self.error:
            return f"error:{self.error}"
        flags = []
        for cid in CHECK_IDS:
            r = self.results.get(cid)
            if r is None:
                continue
            if r.skipped:
                flags.append(f"{cid}:skipped({r.reason})")
            elif not r.passed:
                flags.append(f"{cid}:fail" if r.counted else f"{cid}:advisory-fail")
        return ";".join(flags) if flags else "ok"


@dataclass
class SweepReport:
    potential: str
    n: int
    checks: tuple
    tolerances: Tolerances
    rows: List[SweepRow]
    grid: Optional[GridSpec] = None

    @property
    def errors(self):
        return [r for r in self.rows if r.error]

    def results(self, check_id):
        return [r.results[check_id] for r in self.rows if check_id in r.results]

    def aggregate(self, check_id):
        res = self.results(check_id)
        vals = [r.residual for r in res if not r.skipped]
        return {
            "evaluated": len(vals),
            "passed": sum(1 for r in res if not r.skipped and r.passed),
            "failed": sum(1 for r in res if r.failed),
            "advisory_failed": sum(1 for r in res if not r.skipped and not r.passed and not r.counted),
            "skipped": sum(1 for r in res if r.skipped),
            "min": min(vals) if vals else None,
            "max": max(vals) if vals else None,
            "mean": float(np.mean(vals)) if vals else None,
        }

    def summary(self):
        return {cid: self.aggregate(cid) for cid in self.checks}

    @property
    def all_passed(self):
        return not any(r.failed for row in self.rows for r in row.results.values())


def analyze_row(potential, point, checks, tolerances, order=DEFAULT_ORDER, eq3_unscoped=False) -> SweepRow:
    row = SweepRow(tuple(float(v) for v in point))
    try:
        an = analyze(potential, point, order)
        g = an.geometry
        a, res = einstein_constant(g.K, g.G)
        row.rho, row.Phi, row.J, row.S = g.rho, g.Phi, g.J, g.S
        row.K_maxabs = float(np.max(np.abs(g.K)))
        row.R_maxabs = float(np.max(np.abs(g.R)))
        row.ein_a, row.ein_res = a, res
        for cid in checks:
            row.results[cid] = run_check(cid, an, tolerances, eq3_unscoped)
    except HessianLabError as exc:
        row.results = {}
        row.error = type(exc).__name__
    return row


def _row_task(args):
    return analyze_row(*args)


def sweep(potential, grid, checks=CHECK_IDS, tolerances=None, order=DEFAULT_ORDER,
          workers=1, eq3_unscoped=False) -> SweepReport:
    """Evaluate the pipeline and ``checks`` at every grid node, in row-major order."""
    tol = tolerances or Tolerances()
    unknown = set(checks) - set(CHECK_IDS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    checks = tuple(c for c in CHECK_IDS if c in set(checks))
    pts = _as_points(grid)
    if isinstance(potential, Potential):
        for p in pts:
            if not potential.domain.contains(p):
                raise ValueError(f"grid point {tuple(p)} lies outside the domain")
    tasks = [(potential, p, checks, tol, order, eq3_unscoped) for p in pts]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_row_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        rows = [_row_task(t) for t in tasks]
    n = pts[0].shape[0] if pts else 0
    source = potential.source if isinstance(potential, Potential) else str(potential)
    return SweepReport(source, n, checks, tol, rows, grid if isinstance(grid, GridSpec) else None)
