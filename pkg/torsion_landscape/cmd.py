import json
import logging
import sys
import time
from argparse import ArgumentParser
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from torsion_landscape.analytic.field import DEFAULT_ALPHA, DEFAULT_H, RootConfig
from torsion_landscape.context import Context
from torsion_landscape.pde.nonlinearities import Nonlinearities
from torsion_landscape.report import (
    RunManifest,
    error_body,
    output_directory,
    plot_domain_svg,
    render_json,
    write_frame_csv,
    write_pgm,
    write_text,
)
from torsion_landscape.utils import (
    ConstructionError,
    InvalidConfigError,
    TorsionLandscapeError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONSTRUCTION = 2
EXIT_USAGE = 64

# options whose values may start with a minus sign
NEGATIVE_VALUE_OPTIONS = ("--roots", "--epsilons", "--lambda", "--lambda-search")


def _display_markdown(content, **kwargs):
    df = pd.DataFrame(content, **kwargs)
    print(df.to_markdown(tablefmt="fancy_grid"), file=sys.stderr)


def parse_floats(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def parse_config_option(text: str):
    """``key=value`` with the value parsed as JSON if possible"""
    key, separator, value = text.partition("=")
    if not separator:
        raise InvalidConfigError(f"Expected key=value, got {text!r}")
    try:
        value = json.loads(value)
    except json.JSONDecodeError:
        pass
    return key.strip(), value


def _join_negative_values(argv: Sequence[str]) -> List[str]:
    """Rewrite ``--roots -2,-1,1,2`` to ``--roots=-2,-1,1,2`` so argparse accepts it"""
    result = []
    argv = list(argv)
    index = 0
    while index < len(argv):
        token = argv[index]
        if token in NEGATIVE_VALUE_OPTIONS and index + 1 < len(argv):
            result.append(f"{token}={argv[index + 1]}")
            index += 2
            continue
        result.append(token)
        index += 1
    return result


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--k", type=int, default=2, help="Number of peaks (default 2)")
    common.add_argument(
        "--roots",
        default=None,
        help="Comma separated increasing roots x_1,...,x_2k. Defaults to +-(2j - 1).",
    )
    common.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    common.add_argument("--h", type=float, default=DEFAULT_H)
    common.add_argument(
        "--output-dir",
        default=None,
        help="Where to write the artifacts. Defaults to $TORSION_LANDSCAPE_OUTPUT_DIR or the current directory.",
    )
    common.add_argument(
        "--json",
        default=None,
        help="Path of the JSON report, '-' for standard output. Defaults to <command>.json in the output directory.",
    )
    common.add_argument("--jobs", type=int, default=None, help="Number of parallel workers")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a numerical setting, e.g. --set geometry.extract.nx=4096",
    )
    common.add_argument(
        "--log-level",
        default=None,
        help="Set the log level. Defaults to warning.",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )

    parser = ArgumentParser(
        prog="torsion-landscape",
        description="Construct, certify and cross-validate the multi-peak torsion domains",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    construct = commands.add_parser(
        "construct", parents=[common], help="Extract the domain and draw it"
    )
    construct.add_argument("--epsilon", default="auto", help="epsilon or 'auto'")

    verify = commands.add_parser(
        "verify", parents=[common], help="Run all certificates, exit 1 if one fails"
    )
    verify.add_argument("--epsilon", default="auto", help="epsilon or 'auto'")

    sweep = commands.add_parser("sweep", parents=[common], help="Trends over epsilon")
    sweep.add_argument(
        "--epsilons", required=True, help="Comma separated list of epsilon values"
    )

    pde = commands.add_parser(
        "pde", parents=[common], help="Finite difference cross-validation"
    )
    pde.add_argument("--epsilon", type=float, default=1e-3)
    pde.add_argument(
        "--spacings",
        default="0.125,0.0625,0.03125",
        help="Comma separated lattice spacings",
    )
    pde.add_argument(
        "--nonlinearity",
        default=None,
        help=f"Right hand side f, one of {', '.join(Nonlinearities.get_plugin_names())}",
    )
    pde.add_argument(
        "--lambda", dest="lambdas", default=None, help="Comma separated lambda values"
    )
    pde.add_argument(
        "--lambda-search",
        default=None,
        metavar="LOW,HIGH",
        help="Bisect for the largest lambda in [LOW, HIGH] with a semi-stable solution",
    )
    pde.add_argument(
        "--no-stability",
        default=False,
        action="store_true",
        help="Skip the smallest eigenvalue of the linearised operator",
    )
    return parser


def root_config(args, epsilon: float) -> RootConfig:
    if args.roots is None:
        roots = RootConfig.canonical_roots(args.k)
    else:
        roots = parse_floats(args.roots)
    return RootConfig(k=args.k, roots=roots, epsilon=epsilon, alpha=args.alpha, h=args.h)


def emit_json(text: str, target: Optional[str], directory: Path, default_name: str):
    """Write the report to the target path, standard output for '-'"""
    if target == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    return write_text(text, Path(target) if target else directory / default_name)


@contextmanager
def timed(manifest: RunManifest, stage: str):
    start = time.perf_counter()
    try:
        yield
    finally:
        manifest.wall_times[stage] = time.perf_counter() - start


def _manifest(command: str, context: Context, parameters: Dict) -> RunManifest:
    return RunManifest(
        command=command,
        parameters=parameters,
        resolutions=context.config.get_config_by_prefix("geometry"),
        tolerances={
            **context.config.get_config_by_prefix("critical"),
            **context.config.get_config_by_prefix("pde"),
        },
    )


def _resolve_epsilon(context: Context, args, manifest: RunManifest):
    """The configuration for the --epsilon flag; 'auto' runs the epsilon search"""
    if args.epsilon == "auto":
        with timed(manifest, "auto_epsilon"):
            config, report = context.auto_epsilon(root_config(args, 1.0))
        manifest.notes.append(f"epsilon selected automatically: {config.epsilon!r}")
        return config, report
    return root_config(args, float(args.epsilon)), None


def _note_defaults(args, manifest: RunManifest):
    if args.roots is None:
        manifest.notes.append(f"roots defaulted to the pattern +-(2j - 1) for k = {args.k}")


def run_construct(context: Context, args, directory: Path) -> int:
    manifest = _manifest("construct", context, {})
    _note_defaults(args, manifest)
    config, _ = _resolve_epsilon(context, args, manifest)
    manifest.parameters = config.to_dict()

    with timed(manifest, "construct"):
        construction = context.construct(config)
    if not construction.below_eps_bound:
        manifest.notes.append(
            f"epsilon = {config.epsilon!r} exceeds the bound {construction.prediction.eps_bound!r}"
        )
    manifest.window = construction.domain.window.to_dict()

    level_frames = [
        contour.to_frame().assign(curve=index)
        for index, contour in enumerate(construction.level_curves)
    ]
    artifacts = {
        "boundary_csv": write_frame_csv(
            construction.domain.boundary.to_frame(), directory / "boundary.csv"
        ),
        "figure_svg": plot_domain_svg(construction, directory / "domain.svg"),
        "mask_pgm": write_pgm(construction.domain.inside_mask, directory / "mask.pgm"),
    }
    if level_frames:
        artifacts["level_curves_csv"] = write_frame_csv(
            pd.concat(level_frames, ignore_index=True)[["curve", "x", "y"]],
            directory / "level_curves.csv",
        )

    summary = {
        "parameters": config.to_dict(),
        "prediction": construction.prediction.to_dict(),
        "domain": {
            "window": construction.domain.window.to_dict(),
            "boundary_vertices": len(construction.domain.boundary),
            "boundary_area": construction.domain.boundary.signed_area,
            "mask_area": construction.domain.mask_area,
            "level_curves": len(construction.level_curves),
            "eps_below_bound": construction.below_eps_bound,
        },
    }
    report_path = emit_json(
        render_json(summary, "construction"), args.json, directory, "construction.json"
    )
    if report_path is not None:
        artifacts["report_json"] = report_path
    for name, path in artifacts.items():
        manifest.add_artifact(name, path)
    manifest.write(directory / "manifest.json")
    return EXIT_OK


def run_verify(context: Context, args, directory: Path) -> int:
    manifest = _manifest("verify", context, {})
    _note_defaults(args, manifest)
    config, report = _resolve_epsilon(context, args, manifest)
    manifest.parameters = config.to_dict()

    if report is None:
        with timed(manifest, "verify"):
            try:
                report = context.verify(config)
            except ConstructionError:
                raise
            except TorsionLandscapeError as err:
                logger.error(f"Certificate could not be evaluated: {err}")
                emit_json(render_json(error_body(err), "error"), args.json, directory, "certificates.json")
                return EXIT_FAILED

    manifest.window = report.domain["window"]
    report_path = emit_json(
        render_json(report.to_dict(), "certificates"), args.json, directory, "certificates.json"
    )
    if report_path is not None:
        manifest.add_artifact("report_json", report_path)
    manifest.write(directory / "manifest.json")

    _display_markdown(
        {
            "certificate": ["P0 starshape", "P1 components", "P3 curvature"],
            "passed": [
                report.p0_starshape.passed,
                report.p1_components.passed,
                report.p3_curvature.passed,
            ],
            "margin": [
                report.p0_starshape.max_radial_derivative,
                report.p1_components.count,
                report.p3_curvature.zero_count,
            ],
        }
    )
    return EXIT_OK if report.passed else EXIT_FAILED


def run_sweep(context: Context, args, directory: Path) -> int:
    manifest = _manifest("sweep", context, {})
    _note_defaults(args, manifest)
    configs = [root_config(args, epsilon) for epsilon in parse_floats(args.epsilons)]

    with timed(manifest, "sweep"):
        sweep = context.sweep(configs, jobs=args.jobs)
    manifest.parameters = sweep.parameters

    report_path = emit_json(render_json(sweep.to_dict(), "sweep"), args.json, directory, "sweep.json")
    if report_path is not None:
        manifest.add_artifact("report_json", report_path)
    manifest.write(directory / "manifest.json")
    return EXIT_OK


def run_pde(context: Context, args, directory: Path) -> int:
    if args.nonlinearity is not None and args.nonlinearity not in Nonlinearities.get_plugin_names():
        print(
            f"torsion-landscape pde: unknown nonlinearity {args.nonlinearity!r}, "
            f"choose one of {', '.join(Nonlinearities.get_plugin_names())}",
            file=sys.stderr,
        )
        return EXIT_USAGE

    manifest = _manifest("pde", context, {})
    _note_defaults(args, manifest)
    config = root_config(args, args.epsilon)
    lambdas = parse_floats(args.lambdas) if args.lambdas else None
    lambda_search = tuple(parse_floats(args.lambda_search)) if args.lambda_search else None
    if lambda_search is not None and len(lambda_search) != 2:
        raise InvalidConfigError(f"--lambda-search expects LOW,HIGH, got {args.lambda_search}")

    with timed(manifest, "pde"):
        study = context.pde_study(
            config,
            parse_floats(args.spacings),
            nonlinearity=args.nonlinearity,
            lambdas=lambdas,
            lambda_search=lambda_search,
            with_stability=not args.no_stability,
        )
    manifest.parameters = study.parameters

    artifacts = {
        "torsion_csv": write_frame_csv(study.solution.to_frame(), directory / "torsion.csv"),
        "torsion_pgm": write_pgm(study.solution.to_raster(), directory / "torsion.pgm"),
    }
    report_path = emit_json(render_json(study.to_dict(), "pde"), args.json, directory, "pde.json")
    if report_path is not None:
        artifacts["report_json"] = report_path
    for name, path in artifacts.items():
        manifest.add_artifact(name, path)
    manifest.write(directory / "manifest.json")
    return EXIT_OK


COMMANDS = {
    "construct": run_construct,
    "verify": run_verify,
    "sweep": run_sweep,
    "pde": run_pde,
}


def main(argv: Sequence[str] = None) -> int:
    """
    Entry point of the ``torsion-landscape`` command line tool.

    Exit codes: 0 on success, 1 if a certificate or solver fails or on an internal error,
    2 if the domain can not be constructed or the configuration is invalid
    (with a JSON error body on standard output), 64 for an unknown nonlinearity.
    """
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else argv))

    logging.basicConfig(level=args.log_level or logging.WARNING)

    try:
        context = Context(dict(parse_config_option(option) for option in args.set))
        directory = output_directory(args.output_dir)
        return COMMANDS[args.command](context, args, directory)
    except (ConstructionError, InvalidConfigError) as err:
        logger.error(f"{args.command} failed: {err}")
        sys.stdout.write(render_json(error_body(err), "error"))
        return EXIT_CONSTRUCTION
    except TorsionLandscapeError as err:
        logger.error(f"{args.command} failed: {err}")
        sys.stdout.write(render_json(error_body(err), "error"))
        return EXIT_FAILED
    except Exception as err:
        logger.exception(f"{args.command} failed with an internal error")
        sys.stdout.write(render_json(error_body(err), "error"))
        return EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
