import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import (
    ArpackNoConvergence,
    LinearOperator,
    bicgstab,
    eigs,
    splu,
)

from torsion_landscape.pde.grid import DiscreteField, IrregularGrid, build_grid
from torsion_landscape.pde.nonlinearities import NonlinearProblem
from torsion_landscape.utils import (
    EigenvalueError,
    NoSolutionError,
    SolverError,
    TorsionLandscapeError,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-9
REFINEMENT_PASSES = 4
MIN_STEP = 1.0 / 1024


def _symmetric_preconditioner(matrix: sparse.spmatrix) -> LinearOperator:
    """LU factors of the symmetric part of ``matrix``, applied as preconditioner"""
    symmetric = (0.5 * (matrix + matrix.T)).tocsc()
    factors = splu(symmetric)
    return LinearOperator(matrix.shape, matvec=factors.solve, dtype=float)


def solve_linear(
    matrix: sparse.spmatrix,
    rhs: np.ndarray,
    rtol: float = 1e-10,
    maxiter: int = 2000,
    preconditioner: LinearOperator = None,
) -> Tuple[np.ndarray, float]:
    """
    Solve the (nonsymmetric) system with BiCGSTAB, preconditioned by the
    factorised symmetric part, followed by residual correction passes until
    the max-norm residual is below 1e-9 relative to the right hand side.

    Returns:
        the solution and its relative max-norm residual

    Raises:
        :class:`SolverError`: BiCGSTAB broke down or the residual is not certified
    """
    if preconditioner is None:
        preconditioner = _symmetric_preconditioner(matrix)
    scale = max(float(np.max(np.abs(rhs))), np.finfo(float).tiny)

    solution = np.zeros_like(rhs)
    residual = rhs.copy()
    relative = 1.0
    for _ in range(REFINEMENT_PASSES):
        correction, info = bicgstab(
            matrix, residual, rtol=rtol, maxiter=maxiter, M=preconditioner
        )
        if info != 0:
            raise SolverError(
                f"BiCGSTAB did not converge on {matrix.shape[0]} unknowns (info = {info})"
            )
        solution += correction
        residual = rhs - matrix @ solution
        relative = float(np.max(np.abs(residual))) / scale
        if relative <= RESIDUAL_TOLERANCE:
            break
    else:
        raise SolverError(f"Relative residual {relative:.3e} above {RESIDUAL_TOLERANCE}")

    logger.debug(f"Solved {matrix.shape[0]} unknowns, relative residual {relative:.3e}")
    return solution, relative


def solve_torsion(grid: IrregularGrid, rtol: float = 1e-10, maxiter: int = 2000) -> DiscreteField:
    """Discrete solution of -Delta u = 1 with zero boundary data"""
    matrix, contribution = grid.laplacian
    values, residual = solve_linear(
        matrix, np.ones(len(grid)) + contribution, rtol=rtol, maxiter=maxiter
    )
    return DiscreteField(grid=grid, values=values, residual=residual)


def _semilinear_residual(matrix, contribution, problem, values):
    return matrix @ values - problem.lam * problem.f(values) - contribution


def solve_semilinear(
    grid: IrregularGrid,
    problem: NonlinearProblem,
    initial: DiscreteField = None,
    tol: float = 1e-10,
    max_iter: int = 50,
    rtol: float = 1e-10,
    maxiter: int = 2000,
) -> DiscreteField:
    """
    Newton's method with residual backtracking for -Delta u = lam f(u).
    Without ``initial`` the iteration starts from lam f(0) times the torsion solution.

    Raises:
        :class:`NoSolutionError`: the iteration diverged or did not converge in ``max_iter`` steps
    """
    matrix, contribution = grid.laplacian
    if initial is None:
        values = problem.lam * problem.f0 * solve_torsion(grid, rtol=rtol, maxiter=maxiter).values
    else:
        values = initial.values.copy()

    residual = _semilinear_residual(matrix, contribution, problem, values)
    norm = float(np.max(np.abs(residual)))
    for iteration in range(max_iter + 1):
        scale = 1.0 + problem.lam * float(np.max(np.abs(problem.f(values))))
        if not np.isfinite(norm):
            break
        if norm <= tol * scale:
            logger.debug(
                f"Newton converged after {iteration} steps for lambda = {problem.lam}, "
                f"residual {norm:.3e}"
            )
            if np.any(values < 0):
                warnings.warn(
                    f"The solution for lambda = {problem.lam} takes negative values "
                    f"(min {values.min():.3e})"
                )
            return DiscreteField(grid=grid, values=values, residual=norm / scale)
        if iteration == max_iter:
            break

        jacobian = (matrix - sparse.diags(problem.lam * problem.f_prime(values))).tocsr()
        try:
            step, _ = solve_linear(jacobian, -residual, rtol=rtol, maxiter=maxiter)
        except (SolverError, RuntimeError) as err:
            raise NoSolutionError(
                f"Newton step failed for lambda = {problem.lam}: {err}"
            ) from err

        factor = 1.0
        while True:
            trial = values + factor * step
            trial_residual = _semilinear_residual(matrix, contribution, problem, trial)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if np.isfinite(trial_norm) and trial_norm < (1 - 1e-4 * factor) * norm:
                break
            factor *= 0.5
            if factor < MIN_STEP:
                raise NoSolutionError(
                    f"Newton backtracking stalled for lambda = {problem.lam} "
                    f"at residual {norm:.3e}"
                )
        values, residual, norm = trial, trial_residual, trial_norm

    raise NoSolutionError(
        f"Newton did not converge for lambda = {problem.lam}, residual {norm:.3e}"
    )


@dataclass
class SemiStability:
    lambda_min: float
    tolerance: float
    passed: bool


def semistability(
    grid: IrregularGrid,
    problem: NonlinearProblem,
    solution: DiscreteField,
    rtol: float = 1e-8,
    max_iter: int = 500,
    tolerance: float = 1e-8,
) -> SemiStability:
    """
    Smallest eigenvalue of the linearised operator -Delta - lam f'(u) by
    shifted inverse iteration (ARPACK in shift-invert mode).
    The shift lies below the whole spectrum, so the eigenvalue closest to it
    is the smallest one. Semi-stable iff it is >= -tolerance.

    Raises:
        :class:`EigenvalueError`: the iteration did not converge
    """
    matrix, _ = grid.laplacian
    derivative = problem.lam * problem.f_prime(solution.values)
    jacobian = (matrix - sparse.diags(derivative)).tocsc()
    shift = -float(np.max(derivative, initial=0.0)) - 1.0

    try:
        eigenvalues = eigs(
            jacobian,
            k=1,
            sigma=shift,
            which="LM",
            tol=rtol,
            maxiter=max_iter,
            return_eigenvectors=False,
        )
    except ArpackNoConvergence as err:
        raise EigenvalueError(
            f"Inverse iteration did not converge in {max_iter} steps: {err}"
        ) from err

    lambda_min = float(np.real(eigenvalues[0]))
    logger.debug(f"Smallest linearised eigenvalue {lambda_min:.8g} at lambda = {problem.lam}")
    return SemiStability(
        lambda_min=lambda_min, tolerance=tolerance, passed=lambda_min >= -tolerance
    )


@dataclass
class ConvergenceEntry:
    lam: float
    sup_error: float
    first_difference_error: float
    lambda_min: Optional[float] = None
    semi_stable: Optional[bool] = None


@dataclass
class ConvergenceStudy:
    entries: List[ConvergenceEntry]
    torsion_sup: float
    decreasing: bool


def convergence_study(
    grid: IrregularGrid,
    problem: NonlinearProblem,
    lambdas: Sequence[float],
    with_stability: bool = True,
    **solver_options,
) -> ConvergenceStudy:
    """
    Compare u_lam / (lam f(0)) with the torsion solution u_0 for decreasing lam.
    Every entry carries the sup-norm error, the sup-norm error of the
    forward differences and, with ``with_stability``, the smallest linearised eigenvalue.
    """
    torsion = solve_torsion(grid)
    torsion_differences = torsion.forward_differences()

    entries = []
    previous = None
    for lam in lambdas:
        current = problem.with_lambda(lam)
        initial = None
        if previous is not None:
            initial = DiscreteField(grid, previous.values * lam / entries[-1].lam)
        solution = solve_semilinear(grid, current, initial=initial, **solver_options)
        scaled = solution.values / (lam * current.f0)
        scaled_field = DiscreteField(grid, scaled)

        entry = ConvergenceEntry(
            lam=float(lam),
            sup_error=float(np.max(np.abs(scaled - torsion.values))),
            first_difference_error=float(
                np.max(np.abs(scaled_field.forward_differences() - torsion_differences))
            ),
        )
        if with_stability:
            stability = semistability(grid, current, solution)
            entry.lambda_min = stability.lambda_min
            entry.semi_stable = stability.passed
        entries.append(entry)
        previous = solution
        logger.debug(f"lambda = {lam}: sup error {entry.sup_error:.3e}")

    errors = [entry.sup_error for entry in entries]
    decreasing = all(b <= a for a, b in zip(errors, errors[1:]))
    return ConvergenceStudy(
        entries=entries, torsion_sup=torsion.max_abs(), decreasing=decreasing
    )


@dataclass
class ThresholdSearch:
    lam: Optional[float]
    history: List[Tuple[float, bool]] = field(default_factory=list)


def lambda_threshold_search(
    grid: IrregularGrid, problem: NonlinearProblem, low: float, high: float, steps: int = 20
) -> ThresholdSearch:
    """
    Bisection for the largest lam in [low, high] at which the semilinear problem
    is solved and the solution is semi-stable.
    ``lam`` is None if already ``low`` fails.
    """
    history = []

    def accepted(lam: float) -> bool:
        current = problem.with_lambda(lam)
        try:
            solution = solve_semilinear(grid, current)
            result = semistability(grid, current, solution).passed
        except TorsionLandscapeError as err:
            logger.debug(f"lambda = {lam} rejected: {err}")
            result = False
        history.append((float(lam), result))
        return result

    if not accepted(low):
        return ThresholdSearch(lam=None, history=history)
    if accepted(high):
        return ThresholdSearch(lam=float(high), history=history)

    for _ in range(steps):
        middle = 0.5 * (low + high)
        if accepted(middle):
            low = middle
        else:
            high = middle
    return ThresholdSearch(lam=float(low), history=history)


@dataclass
class SpacingEntry:
    spacing: float
    nodes: int
    sup_error: float


@dataclass
class TorsionStudy:
    entries: List[SpacingEntry]
    orders: List[float]

    @property
    def observed_order(self) -> Optional[float]:
        if not self.orders:
            return None
        return float(np.mean(self.orders))


def torsion_convergence(domain, field, spacings: Sequence[float], **solver_options) -> TorsionStudy:
    """
    Solve -Delta u = 1 on the domain for each spacing and compare
    with the exact field; the observed orders come from consecutive pairs.
    """
    entries = []
    for spacing in spacings:
        grid = build_grid(domain, field, spacing)
        solution = solve_torsion(grid, **solver_options)
        entries.append(
            SpacingEntry(
                spacing=float(spacing), nodes=len(grid), sup_error=solution.error_against(field)
            )
        )
        logger.debug(f"spacing {spacing}: {len(grid)} nodes, error {entries[-1].sup_error:.3e}")

    orders = [
        float(np.log(a.sup_error / b.sup_error) / np.log(a.spacing / b.spacing))
        for a, b in zip(entries, entries[1:])
        if a.sup_error > 0 and b.sup_error > 0
    ]
    return TorsionStudy(entries=entries, orders=orders)
