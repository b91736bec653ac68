"""Hessian (affine Kähler) geometry of closed-form convex potentials."""

from .expr import Ast, Domain, Potential, affine_pullback, evaluate, parse, to_string
from .geometry import PointGeometry, analyze, invariant_derivatives, laplace_beltrami, point_geometry
from .jets import Jet, algebra, seed
from .verify import GridSpec, Tolerances, classify, fd_oracle, sweep

__version__ = "0.1.0"
