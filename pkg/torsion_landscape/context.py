import asyncio
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import dask
from dask.distributed import Client

from torsion_landscape.analytic.field import ImplicitField, RootConfig
from torsion_landscape.analytic.predictions import (
    AsymptoticPrediction,
    predictions,
    restriction_extrema,
)
from torsion_landscape.critical.points import find_critical_points, maxima_count_vs_k
from torsion_landscape.datacontainer import ConfigContainer
from torsion_landscape.geometry.certificates import (
    CertificateReport,
    ComponentCertificate,
    TrendResult,
    check_rect_negativity,
    curvature_certificate,
    hausdorff_to_strip,
    is_strictly_decreasing,
    min_curvature_trend,
    separation_check,
    starshape_certificate,
)
from torsion_landscape.geometry.components import superlevel_component_count
from torsion_landscape.geometry.contour import Contour, trace_level_set
from torsion_landscape.geometry.domain import DomainExtract, extract_domain, segment_inside
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.pde.grid import DiscreteField, build_grid
from torsion_landscape.pde.nonlinearities import (
    BaseNonlinearity,
    NonlinearProblem,
    Nonlinearities,
)
from torsion_landscape.pde.solvers import (
    ConvergenceStudy,
    ThresholdSearch,
    TorsionStudy,
    convergence_study,
    lambda_threshold_search,
    solve_torsion,
    torsion_convergence,
)
from torsion_landscape.utils import ConstructionError, TorsionLandscapeError

logger = logging.getLogger(__name__)

LEVEL = 0.5


@dataclass
class Construction:
    """
    One member of the construction: the field, its predictions,
    the extracted domain and the closed level-1/2 curves inside it.
    """

    config: RootConfig
    field: ImplicitField
    prediction: AsymptoticPrediction
    domain: DomainExtract
    level_curves: List[Contour]

    @property
    def below_eps_bound(self) -> bool:
        return self.config.epsilon < self.prediction.eps_bound


@dataclass
class SweepEntry:
    epsilon: float
    min_curvature: Optional[float] = None
    hausdorff: Optional[float] = None
    zero_count: Optional[int] = None
    zero_abscissa_errors: Optional[Tuple[float, float]] = None
    tip_abscissae: Optional[Tuple[float, float]] = None
    tip_errors: Optional[Tuple[float, float]] = None
    max_radial_derivative: Optional[float] = None
    rect_max_u: Optional[float] = None
    error: Optional[Dict[str, str]] = None


@dataclass
class SweepReport:
    parameters: Dict[str, Any]
    entries: List[SweepEntry]
    min_curvature_decreasing: bool
    hausdorff_decreasing: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "parameters": self.parameters,
            "entries": [asdict(entry) for entry in self.entries],
            "trends": {
                "min_curvature_decreasing": self.min_curvature_decreasing,
                "hausdorff_decreasing": self.hausdorff_decreasing,
            },
        }


@dataclass
class PdeStudy:
    parameters: Dict[str, Any]
    torsion: Optional[TorsionStudy]
    solution: Optional[DiscreteField] = field(default=None, repr=False)
    nonlinearity: Optional[str] = None
    convergence: Optional[ConvergenceStudy] = None
    threshold: Optional[ThresholdSearch] = None

    def to_dict(self) -> Dict[str, Any]:
        result = {"parameters": self.parameters, "nonlinearity": self.nonlinearity}
        if self.torsion is not None:
            result["torsion"] = {
                "entries": [asdict(entry) for entry in self.torsion.entries],
                "orders": self.torsion.orders,
                "observed_order": self.torsion.observed_order,
            }
        if self.convergence is not None:
            result["convergence"] = asdict(self.convergence)
        if self.threshold is not None:
            result["threshold"] = {
                "lam": self.threshold.lam,
                "history": [list(step) for step in self.threshold.history],
            }
        return result


class Context:
    """
    Main object to work with ``torsion_landscape``.
    It holds the numerical settings (resolutions, tolerances, margins)
    and runs the construction, the certificates, the parameter sweeps
    and the finite difference studies with them.

    Example:
        .. code-block:: python

            from torsion_landscape import Context, RootConfig

            c = Context()
            c.set_config({"geometry.extract.nx": 4096})

            report = c.verify(RootConfig.canonical(k=2, epsilon=1e-3))
            report.passed

    Usually, you will only ever have a single context in your program.

    See also:
        :func:`construct`
        :func:`verify`
    """

    def __init__(self, config_options: Dict[str, Any] = None):
        """
        Create a new context.
        """
        self.config = ConfigContainer(config_options)
        # A started HTTP server
        self.server = None

        logger.debug("Context created")

    def set_config(self, config_options: Union[Tuple[str, Any], Dict[str, Any]]):
        """
        Change numerical settings of all following operations.

        Args:
            config_options (:obj:`Tuple[str,val]` or :obj:`Dict[str,val]`): option and value to set

        Example:
            .. code-block:: python

                c = Context()
                c.set_config(("geometry.starshape.margin", 0.2))
                c.set_config({"pde.krylov.rtol": 1e-12, "pde.krylov.maxiter": 5000})
        """
        self.config.set_config(config_options)

    def drop_config(self, config_strs: Union[str, List[str]]):
        """
        Reset options to their defaults

        Args:
            config_strs (:obj:`str` or :obj:`List[str]`): option key or keys to drop
        """
        self.config.drop_config(config_strs)

    def register_nonlinearity(self, plugin_class, replace: bool = True):
        """
        Make a new right hand side f of -Delta u = lambda f(u) available under its ``name``.

        Args:
            plugin_class: subclass of :class:`BaseNonlinearity`
            replace (:obj:`bool`): replace an already registered nonlinearity of the same name
        """
        if not (isinstance(plugin_class, type) and issubclass(plugin_class, BaseNonlinearity)):
            raise TypeError(f"{plugin_class} is no subclass of BaseNonlinearity")
        Nonlinearities.add_plugin_class(plugin_class, replace=replace)

    def predict(self, config: RootConfig) -> AsymptoticPrediction:
        return predictions(config)

    def window_for(
        self, prediction: AsymptoticPrediction, roots: Sequence[float] = None
    ) -> GridWindow:
        """
        The extraction window of the configured resolution around the prediction rectangle.
        With ``roots``, the window also covers all roots plus ``geometry.extract.root_margin``.
        """
        return GridWindow.for_prediction(
            prediction,
            nx=self.config.get("geometry.extract.nx"),
            ny=self.config.get("geometry.extract.ny"),
            inflate=self.config.get("geometry.extract.inflate"),
            span=None if roots is None else (min(roots), max(roots)),
            margin=self.config.get("geometry.extract.root_margin"),
        )

    def construct(self, config: RootConfig) -> Construction:
        """
        Build the field of ``config``, extract the domain and trace
        the level-1/2 curves inside it.

        Raises:
            :class:`ConstructionError`: the domain could not be extracted
        """
        field = ImplicitField(config)
        prediction = predictions(config)
        if not config.epsilon < prediction.eps_bound:
            logger.warning(
                f"epsilon = {config.epsilon} is not below the bound {prediction.eps_bound:.6g}"
            )

        window = self.window_for(prediction, config.roots)
        refine_tol = self.config.get("geometry.extract.refine_tol")
        values = window.sample(field)
        domain = extract_domain(field, window, refine_tol=refine_tol, values=values)

        level_curves = [
            contour
            for contour in trace_level_set(field, LEVEL, window, values, refine_tol=refine_tol)
            if contour.closed and domain.contains(contour.vertices[:1])[0]
        ]
        logger.debug(f"{len(level_curves)} closed level curves at {LEVEL}")
        return Construction(
            config=config,
            field=field,
            prediction=prediction,
            domain=domain,
            level_curves=level_curves,
        )

    def verify(self, config: RootConfig, construction: Construction = None) -> CertificateReport:
        """
        Run all certificates for one configuration:
        the negativity on the enclosing rectangle, starshapedness,
        the components of {u > 1/2} and their maxima and the
        sign changes of the boundary curvature.

        Args:
            config (:class:`RootConfig`): the configuration
            construction (:class:`Construction`): an already extracted construction of ``config``

        Returns:
            :class:`CertificateReport`, its ``passed`` property tells
            whether all certificates hold

        Raises:
            :class:`ConstructionError`: the domain could not be extracted
        """
        if construction is None:
            construction = self.construct(config)
        field, prediction, domain = (
            construction.field,
            construction.prediction,
            construction.domain,
        )
        options = self.config

        rect = check_rect_negativity(
            field,
            prediction,
            samples=options.get("geometry.rect.samples"),
            vertical_slack=options.get("geometry.rect.vertical_slack"),
        )
        if not rect.passed:
            logger.warning(f"u is not negative on the enclosing rectangle: max {rect.max_u}")

        starshape = starshape_certificate(
            domain,
            field,
            margin=options.get("geometry.starshape.margin"),
            rays=options.get("geometry.starshape.rays"),
        )

        components = superlevel_component_count(
            field,
            LEVEL,
            domain.window,
            resolution=(
                options.get("geometry.components.nx"),
                options.get("geometry.components.ny"),
            ),
            max_resolution=(
                options.get("geometry.components.max_nx"),
                options.get("geometry.components.max_ny"),
            ),
        )
        minima, _ = restriction_extrema(config)
        separators = separation_check(field, minima, config.h, level=LEVEL)

        critical_points = find_critical_points(
            field,
            domain,
            seeds=(options.get("critical.seeds_nx"), options.get("critical.seeds_ny")),
            newton_tol=options.get("critical.newton_tol"),
            degeneracy_tol=options.get("critical.degeneracy_tol"),
            max_iter=options.get("critical.max_iter"),
        )
        maxima = maxima_count_vs_k(field, domain, components, critical_points, k=config.k)
        p1 = ComponentCertificate(
            level=LEVEL,
            count=components.count,
            k=config.k,
            component_seeds=components.component_seeds,
            separators=separators,
            count_maxima=maxima.count_maxima,
            passed=components.count >= config.k and maxima.passed,
        )

        refined = extract_domain(
            field, domain.window.doubled(), refine_tol=options.get("geometry.extract.refine_tol")
        )
        p3 = curvature_certificate(
            domain,
            field,
            prediction=prediction,
            refined_domain=refined,
            zero_tol=options.get("geometry.curvature.zero_tol"),
        )

        roots = config.roots
        domain_info = {
            "window": domain.window.to_dict(),
            "boundary_vertices": len(domain.boundary),
            "boundary_area": domain.boundary.signed_area,
            "mask_area": domain.mask_area,
            "diameter": domain.diameter,
            "segment_inside": segment_inside(domain, roots[0], roots[-1]),
            "eps_below_bound": construction.below_eps_bound,
            "level_curves": len(construction.level_curves),
        }

        report = CertificateReport(
            parameters=config.to_dict(),
            prediction=prediction.to_dict(),
            boundary_negativity=rect,
            domain=domain_info,
            p0_starshape=starshape,
            p1_components=p1,
            p3_curvature=p3,
            critical_points=critical_points,
        )
        logger.info(
            f"k = {config.k}, epsilon = {config.epsilon}: P0 {starshape.passed}, "
            f"P1 {p1.passed}, P3 {p3.passed}"
        )
        return report

    def auto_epsilon(
        self, config: RootConfig
    ) -> Tuple[RootConfig, CertificateReport]:
        """
        Geometric search downward from the epsilon bound of ``config``
        until the domain is enclosed, starshaped and ``{u > 1/2}`` has
        at least ``k`` components with a maximum each.
        The epsilon of ``config`` itself is ignored.
        The curvature certificate does not take part in the selection,
        its outcome stays in the returned report.

        Raises:
            :class:`ConstructionError`: no epsilon passed within the configured number of steps
        """
        factor = self.config.get("cli.auto_epsilon.factor")
        max_steps = self.config.get("cli.auto_epsilon.max_steps")
        epsilon = predictions(config).eps_bound

        for step in range(max_steps):
            candidate = config.with_epsilon(epsilon)
            try:
                report = self.verify(candidate)
                if report.peaks_passed:
                    logger.info(f"Selected epsilon = {epsilon:.6g} after {step + 1} steps")
                    if not report.p3_curvature.passed:
                        logger.warning(
                            f"epsilon = {epsilon:.6g}: {report.p3_curvature.zero_count} "
                            f"curvature zeros instead of 2"
                        )
                    return candidate, report
                logger.debug(f"epsilon = {epsilon:.6g}: certificates failed")
            except TorsionLandscapeError as err:
                logger.debug(f"epsilon = {epsilon:.6g} rejected: {err}")
            epsilon /= factor

        raise ConstructionError(
            f"No epsilon in {max_steps} steps below {predictions(config).eps_bound:.6g} "
            f"passed the starshape and component certificates"
        )

    def _min_curvature(self, config: RootConfig) -> float:
        construction = self.construct(config)
        return curvature_certificate(construction.domain, construction.field).min_curvature

    def min_curvature_trend(self, configs: Sequence[RootConfig], jobs: int = None) -> TrendResult:
        """
        Minimal boundary curvature over a sequence of configurations of decreasing epsilon.
        Configurations without an enclosed domain are recorded in ``failures``.
        """
        return min_curvature_trend(configs, self._min_curvature, jobs=jobs)

    def _sweep_entry(self, config: RootConfig) -> SweepEntry:
        entry = SweepEntry(epsilon=float(config.epsilon))
        try:
            construction = self.construct(config)
            field, domain = construction.field, construction.domain
            p3 = curvature_certificate(
                domain,
                field,
                prediction=construction.prediction,
                zero_tol=self.config.get("geometry.curvature.zero_tol"),
            )
            starshape = starshape_certificate(
                domain, field, margin=self.config.get("geometry.starshape.margin"), rays=0
            )
            entry.min_curvature = p3.min_curvature
            entry.zero_count = p3.zero_count
            entry.zero_abscissa_errors = p3.zero_abscissa_errors
            entry.tip_abscissae = p3.tip_abscissae
            entry.tip_errors = p3.tip_errors
            entry.max_radial_derivative = starshape.max_radial_derivative
            entry.rect_max_u = check_rect_negativity(field, construction.prediction).max_u
            entry.hausdorff = hausdorff_to_strip(
                domain, half_width=self.config.get("geometry.hausdorff.half_width")
            )
        except TorsionLandscapeError as err:
            logger.warning(f"Sweep entry epsilon = {config.epsilon} failed: {err}")
            entry.error = {"type": type(err).__name__, "message": str(err)}
        return entry

    def sweep(self, configs: Sequence[RootConfig], jobs: int = None) -> SweepReport:
        """
        Measure curvature minimum, distance to the strip, zero and tip abscissae
        and the certificate margins for every configuration.
        Entries are computed in parallel with ``jobs`` workers and sorted by
        decreasing epsilon; failing entries carry their error instead of values.
        The trends are evaluated over the successful entries.
        """
        tasks = [dask.delayed(self._sweep_entry)(config) for config in configs]
        entries = dask.compute(*tasks, scheduler="threads", num_workers=jobs)
        entries = sorted(entries, key=lambda entry: -entry.epsilon)

        succeeded = [entry for entry in entries if entry.error is None]
        parameters = configs[0].to_dict() if configs else {}
        parameters.pop("epsilon", None)
        parameters["epsilons"] = [entry.epsilon for entry in entries]
        return SweepReport(
            parameters=parameters,
            entries=entries,
            min_curvature_decreasing=is_strictly_decreasing(
                [abs(entry.min_curvature) for entry in succeeded]
            ),
            hausdorff_decreasing=is_strictly_decreasing(
                [entry.hausdorff for entry in succeeded]
            ),
        )

    def pde_study(
        self,
        config: RootConfig,
        spacings: Sequence[float],
        nonlinearity: str = None,
        lambdas: Sequence[float] = None,
        lambda_search: Tuple[float, float] = None,
        with_stability: bool = True,
    ) -> PdeStudy:
        """
        Cross-validate the construction with the finite difference solver.

        The torsion problem is solved for every spacing and compared with the exact field.
        With a ``nonlinearity`` the semilinear problem is solved on the grid of the
        coarsest spacing for all ``lambdas`` and compared with the torsion solution there;
        ``lambda_search = (low, high)`` additionally bisects for the largest
        lambda with a semi-stable solution.

        Raises:
            :class:`InvalidConfigError`: unknown nonlinearity
            :class:`ResolutionError`: a spacing is too coarse for the domain
        """
        problem = None
        if nonlinearity is not None:
            problem = NonlinearProblem(
                Nonlinearities.create(nonlinearity), lam=float((lambdas or [1.0])[0])
            )

        construction = self.construct(config)
        domain, field = construction.domain, construction.field
        solver_options = {
            "rtol": self.config.get("pde.krylov.rtol"),
            "maxiter": self.config.get("pde.krylov.maxiter"),
        }

        spacings = sorted(spacings, reverse=True)
        torsion = torsion_convergence(domain, field, spacings, **solver_options)
        grid = build_grid(domain, field, spacings[0])
        solution = solve_torsion(grid, **solver_options)

        study = PdeStudy(
            parameters={
                **config.to_dict(),
                "spacings": [float(s) for s in spacings],
                "lambdas": [float(lam) for lam in lambdas or []],
            },
            torsion=torsion,
            solution=solution,
            nonlinearity=nonlinearity,
        )
        if problem is not None and lambdas:
            study.convergence = convergence_study(
                grid,
                problem,
                sorted(lambdas, reverse=True),
                with_stability=with_stability,
                tol=self.config.get("pde.newton.tol"),
                max_iter=self.config.get("pde.newton.max_iter"),
                **solver_options,
            )
        if problem is not None and lambda_search is not None:
            low, high = lambda_search
            study.threshold = lambda_threshold_search(grid, problem, low, high)
        return study

    def run_server(
        self,
        client: Client = None,
        host: str = "0.0.0.0",
        port: int = 8080,
        log_level=None,
        blocking: bool = True,
    ):  # pragma: no cover
        """
        Run a HTTP server answering verification requests with this context.

        Args:
            client (:obj:`dask.distributed.Client`): If set, use this dask client instead of a new one.
            host (:obj:`str`): The host interface to listen on (defaults to all interfaces)
            port (:obj:`int`): The port to listen on (defaults to 8080)
            log_level: (:obj:`str`): The log level of the server
        """
        from torsion_landscape.server.app import run_server

        self.stop_server()
        self.server = run_server(
            context=self,
            client=client,
            host=host,
            port=port,
            log_level=log_level,
            blocking=blocking,
        )

    def stop_server(self):  # pragma: no cover
        """
        Stop a server started by ``run_server``.
        """
        if self.server is not None:
            loop = asyncio.get_event_loop()
            assert loop
            loop.create_task(self.server.shutdown())

        self.server = None
