"""
Command-line front end::

    hessianlab <eval|sweep|verify|classify|oracle> --config PATH [options]

Exit codes: 0 success, 1 usage error, 2 pipeline error, 3 check failure.

The config file is flat ``key = value`` text; per-axis arrays repeat the key::

    potential = exp(x1) + exp(x2)
    n = 2
    lo = -1
    lo = -1
    hi = 1
    hi = 1
    grid = 21
    grid = 21
    check = eq4
    check = prop1

``check = none`` selects no checks (invariants only).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .errors import HessianLabError, StencilOutsideDomain
from .expr import Domain, Potential, parse
from .geometry import DEFAULT_ORDER, analyze
from .report import fmt_real, render, write_atomic
from .verify import CHECK_IDS, GridSpec, Tolerances, classify, fd_oracle, sweep

EXIT_OK, EXIT_USAGE, EXIT_PIPELINE, EXIT_CHECKS = 0, 1, 2, 3

LAPLACIAN_CHECKS = {"eq3", "eq4", "eq12", "prop1", "prop2"}
_TOL_KEYS = ("identity_tol", "inequality_tol", "classify_tol", "phi_floor", "fd_rel_tol")
_REPEATED = {"lo", "hi", "grid", "check"}
_SCALAR = {"potential", "n", "output", "format", "jet_order", "seed", "workers",
           "eq3_unscoped", "oracle_order", *_TOL_KEYS}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    potential: str
    n: int
    lo: List[float]
    hi: List[float]
    grid: List[int] = field(default_factory=list)
    checks: List[str] = field(default_factory=lambda: list(CHECK_IDS))
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: Optional[str] = None
    format: str = "csv"
    jet_order: int = DEFAULT_ORDER
    seed: Optional[int] = None
    workers: int = 1
    eq3_unscoped: bool = False
    oracle_order: int = 4

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("n must be positive")
        for name in ("lo", "hi"):
            vals = getattr(self, name)
            if len(vals) == 1 and self.n > 1:
                setattr(self, name, vals * self.n)
            elif len(getattr(self, name)) != self.n:
                raise UsageError(f"need {self.n} values for {name!r}, got {len(vals)}")
        if not self.grid:
            self.grid = [1] * self.n
        elif len(self.grid) == 1 and self.n > 1:
            self.grid = self.grid * self.n
        if len(self.grid) != self.n or min(self.grid) < 1:
            raise UsageError("grid needs one count >= 1 per axis")
        bad = set(self.checks) - set(CHECK_IDS)
        if bad:
            raise UsageError(f"unknown checks {sorted(bad)}; choose from {', '.join(CHECK_IDS)}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.jet_order < 4:
            raise UsageError("jet_order must be >= 4")
        if self.jet_order < 5 and LAPLACIAN_CHECKS & set(self.checks):
            raise UsageError("jet_order must be >= 5 when Laplacian-based checks are requested")
        try:
            self.domain_obj = Domain(tuple(self.lo), tuple(self.hi))
            self.potential_obj = Potential(parse(self.potential, self.n), self.domain_obj, self.potential)
        except (ValueError, HessianLabError) as exc:
            raise UsageError(str(exc)) from None

    @property
    def grid_spec(self):
        return GridSpec.from_domain(self.domain_obj, tuple(self.grid))

    @classmethod
    def from_text(cls, text):
        scalars, arrays = {}, {k: [] for k in _REPEATED}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in _REPEATED:
                arrays[key].append(value)
            elif key in _SCALAR:
                if key in scalars:
                    raise UsageError(f"config line {lineno}: duplicate key {key!r}")
                scalars[key] = value
            else:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
        for req in ("potential", "n"):
            if req not in scalars:
                raise UsageError(f"config is missing {req!r}")
        if not arrays["lo"] or not arrays["hi"]:
            raise UsageError("config needs lo and hi bounds")
        try:
            tol = Tolerances(**{k: float(scalars.pop(k)) for k in _TOL_KEYS if k in scalars})
            kw = dict(
                potential=scalars.pop("potential"),
                n=int(scalars.pop("n")),
                lo=[float(v) for v in arrays["lo"]],
                hi=[float(v) for v in arrays["hi"]],
                grid=[int(v) for v in arrays["grid"]],
                tolerances=tol,
            )
            if arrays["check"]:
                kw["checks"] = [c for c in arrays["check"] if c != "none"]
            conv = {"jet_order": int, "seed": int, "workers": int, "oracle_order": int,
                    "eq3_unscoped": lambda s: s.lower() in ("1", "true", "yes", "on")}
            for k, v in scalars.items():
                kw[k] = conv.get(k, str)(v)
        except ValueError as exc:
            raise UsageError(f"bad config value: {exc}") from None
        return cls(**kw)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="hessianlab", description="Hessian-metric geometry of convex potentials.")
    p.add_argument("command", choices=("eval", "sweep", "verify", "classify", "oracle"))
    p.add_argument("--config", required=True)
    p.add_argument("--point", help="comma-separated coordinates")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--check", action="append", choices=CHECK_IDS)
    p.add_argument("--jet-order", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    return p


def _apply_overrides(cfg: RunConfig, args):
    changes = {}
    if args.out:
        changes["output"] = args.out
    if args.format:
        changes["format"] = args.format
    if args.check:
        changes["checks"] = args.check
    if args.jet_order is not None:
        changes["jet_order"] = args.jet_order
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    return replace(cfg, **changes) if changes else cfg


def _parse_point(text, cfg):
    try:
        pt = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"bad point {text!r}") from None
    if pt.shape != (cfg.n,):
        raise UsageError(f"point needs {cfg.n} coordinates")
    if not cfg.domain_obj.contains(pt):
        raise UsageError(f"point {tuple(float(v) for v in pt)} lies outside the domain")
    return pt


def _fmt_array(a):
    return np.array2string(np.asarray(a, dtype=float) + 0.0, precision=10, max_line_width=100, separator=", ")


def cmd_eval(cfg, args, out):
    if not args.point:
        raise UsageError("eval needs --point")
    pt = _parse_point(args.point, cfg)
    g = analyze(cfg.potential_obj, pt, max(cfg.jet_order, 4)).geometry
    p = lambda *s: print(*s, file=out)
    p(f"point = {_fmt_array(g.point)}")
    p(f"G = {_fmt_array(g.G)}")
    p(f"G^-1 = {_fmt_array(g.Ginv)}")
    p(f"det G = {fmt_real(g.detG)}")
    p(f"Γ (Gamma[k,i,j]) = {_fmt_array(g.Gamma)}")
    p(f"A (Fubini-Pick) = {_fmt_array(g.A)}")
    p(f"R (curvature) = {_fmt_array(g.R)}")
    p(f"Ric = {_fmt_array(g.Ric)}")
    p(f"K (Kähler Ricci) = {_fmt_array(g.K)}")
    p(f"S = {fmt_real(g.S)}")
    p(f"ρ (rho) = {fmt_real(g.rho)}")
    p(f"∇ρ = {_fmt_array(g.grad_rho)}")
    p(f"Φ (Phi) = {fmt_real(g.Phi)}")
    p(f"J = {fmt_real(g.J) if g.J is not None else 'undefined (n = 1)'}")
    p(f"|A|^2_G = {fmt_real(g.pick_norm2)}")
    return EXIT_OK


def _print_summary(report, out):
    for cid, agg in report.summary().items():
        mn = fmt_real(agg["min"]) or "-"
        mx = fmt_real(agg["max"]) or "-"
        print(f"{cid:12s} evaluated={agg['evaluated']} passed={agg['passed']} failed={agg['failed']} "
              f"skipped={agg['skipped']} min={mn} max={mx}", file=out)
    errs = report.errors
    print(f"points={len(report.rows)} errors={len(errs)}", file=out)
    for row in errs[:20]:
        print(f"  error at {row.point}: {row.error}", file=out)


def _run_sweep(cfg, checks):
    report = sweep(cfg.potential_obj, cfg.grid_spec, checks, cfg.tolerances,
                   cfg.jet_order, workers=cfg.workers, eq3_unscoped=cfg.eq3_unscoped)
    if cfg.output:
        write_atomic(cfg.output, render(report, cfg.format))
    return report


def cmd_sweep(cfg, args, out):
    report = _run_sweep(cfg, cfg.checks)
    _print_summary(report, out)
    return EXIT_PIPELINE if report.errors else EXIT_OK


def cmd_verify(cfg, args, out):
    report = _run_sweep(cfg, cfg.checks)
    _print_summary(report, out)
    if report.errors:
        return EXIT_PIPELINE
    return EXIT_OK if report.all_passed else EXIT_CHECKS


def cmd_classify(cfg, args, out):
    c = classify(cfg.potential_obj, cfg.grid_spec, cfg.tolerances, max(cfg.jet_order, 4))
    print(c.summary(), file=out)
    for p in c.error_points[:20]:
        print(f"  error at {p}", file=out)
    return EXIT_PIPELINE if c.n_errors else EXIT_OK


def cmd_oracle(cfg, args, out):
    dom = cfg.domain_obj
    if args.point:
        points = [_parse_point(args.point, cfg)]
    elif cfg.seed is not None:
        rng = np.random.default_rng(cfg.seed)
        lo, hi = np.array(dom.lo), np.array(dom.hi)
        margin = 0.1 * (hi - lo)
        points = [rng.uniform(lo + margin, hi - margin) for _ in range(10)]
    else:
        points = cfg.grid_spec.points()
    worst = 0.0
    checked = 0
    for pt in points:
        try:
            rep = fd_oracle(cfg.potential_obj, pt, cfg.oracle_order, dom)
        except StencilOutsideDomain as exc:
            if args.point:
                raise UsageError(str(exc)) from None
            continue
        checked += 1
        worst = max(worst, rep.max_rel_error)
        print(f"{tuple(float(v) for v in pt)}  max_rel_error={fmt_real(rep.max_rel_error)}  worst={rep.worst}", file=out)
    print(f"points={checked} max_rel_error={fmt_real(worst)} tol={cfg.tolerances.fd_rel_tol}", file=out)
    if checked == 0:
        raise UsageError("no grid point leaves room for the finite-difference stencil")
    return EXIT_OK if worst <= cfg.tolerances.fd_rel_tol else EXIT_CHECKS


COMMANDS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "classify": cmd_classify,
    "oracle": cmd_oracle,
}


def _join_negative_points(argv):
    # argparse would read "--point -0.5,1" as two options
    argv = list(argv)
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--point" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"--point={argv[i + 1]}")
            i += 2
            continue
        out.append(argv[i])
        i += 1
    return out


def main(argv=None, out=None):
    out = out or sys.stdout
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_negative_points(argv))
    try:
        cfg = _apply_overrides(RunConfig.from_file(args.config), args)
        return COMMANDS[args.command](cfg, args, out)
    except UsageError as exc:
        print(f"hessianlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HessianLabError as exc:
        print(f"hessianlab: pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
