"""Brute-force solvers used to check the asymptotic modules."""
from .compare import ErrorReport, compare, convergence_order
from .fd import GridField, fd_solve_rect
from .radial import RadialSolution, radial_exact_disk, radial_exact_sphere

__all__ = ["ErrorReport", "compare", "convergence_order", "GridField", "fd_solve_rect",
           "RadialSolution", "radial_exact_disk", "radial_exact_sphere"]
