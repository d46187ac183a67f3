from .grid import DiscreteField, IrregularGrid, build_grid
from .nonlinearities import BaseNonlinearity, NonlinearProblem, Nonlinearities
from .solvers import (
    convergence_study,
    lambda_threshold_search,
    semistability,
    solve_semilinear,
    solve_torsion,
    torsion_convergence,
)
