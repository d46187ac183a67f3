import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from PIL import Image

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "torsion-landscape/1"
SVG_HASHSALT = "torsion-landscape"
OUTPUT_DIR_ENV = "TORSION_LANDSCAPE_OUTPUT_DIR"

# unit or definition of every numeric field in the reports, by key
META = {
    "k": "number of peaks",
    "roots": "strictly increasing real roots x_1 < ... < x_2k of the polynomial",
    "epsilon": "perturbation size epsilon",
    "epsilons": "perturbation sizes of the sweep, decreasing",
    "alpha": "exponent of the harmonic perturbation, in (1, 2)",
    "h": "vertical margin of the enclosing rectangle",
    "spacings": "lattice spacings of the finite difference grids, length units",
    "lambdas": "values of lambda in -Delta u = lambda f(u)",
    "x_enclosure": "abscissa (3 / epsilon^alpha)^(1/2k) of the enclosing rectangle",
    "rect": "enclosing rectangle [xmin, xmax, ymin, ymax]",
    "zeta_minus": "predicted left curvature-zero abscissa",
    "zeta_plus": "predicted right curvature-zero abscissa",
    "eps_bound": "upper bound (1 / (2 sup(-f)))^(1/alpha) on epsilon",
    "sup_neg_f": "sup of -f over [x_1, x_2k]",
    "tip_abscissa": "predicted extreme boundary abscissa at height 0",
    "max_u": "max of u on the rectangle boundary",
    "max_u_vertical": "max of u on the vertical rectangle sides",
    "vertical_deviation": "max |u + 5/2 + y^2/2| on the vertical rectangle sides",
    "xmin": "window left edge",
    "xmax": "window right edge",
    "ymin": "window bottom edge",
    "ymax": "window top edge",
    "nx": "window cells along x",
    "ny": "window cells along y",
    "boundary_vertices": "number of vertices of the traced boundary",
    "boundary_area": "shoelace area enclosed by the traced boundary",
    "mask_area": "area of the sampled domain mask (node count times cell area)",
    "diameter": "diagonal of the bounding box of the boundary",
    "level_curves": "number of closed level-1/2 curves inside the domain",
    "center": "center (x, y) of the starshapedness test",
    "max_radial_derivative": "max over the boundary of (x - center_x) u_x + y u_y",
    "argmax_point": "boundary point (x, y) of the maximal radial derivative",
    "margin": "required negativity margin of the radial derivative",
    "rays": "number of rays of the single-crossing test",
    "min_ray_crossings": "fewest boundary crossings of a ray",
    "max_ray_crossings": "most boundary crossings of a ray",
    "level": "level c of the superlevel set {u > c}",
    "count": "number of components of {u > level} inside the domain",
    "component_seeds": "node (x, y) of the largest sampled u per component",
    "abscissae": "abscissae s_j of the minima of f between the peaks",
    "max_values": "max of u along the vertical segments x = s_j",
    "count_maxima": "number of located local maxima of u in the domain",
    "zero_count": "number of sign changes of the boundary curvature",
    "zero_locations": "boundary points (x, y) where the curvature vanishes",
    "refined_zero_count": "curvature sign changes at doubled resolution",
    "min_curvature": "minimum of the boundary curvature, inverse length units",
    "argmin_point": "boundary point (x, y) of the minimal curvature",
    "predicted_zeros": "predicted curvature-zero abscissae (left, right)",
    "zero_abscissa_errors": "relative errors of the curvature-zero abscissae (left, right)",
    "bottom_point": "boundary point (0, beta) below the axis",
    "bottom_curvature": "boundary curvature at the bottom point",
    "bottom_curvature_ratio": "bottom curvature divided by -6 epsilon",
    "tip_abscissae": "measured extreme boundary abscissae (left, right)",
    "predicted_tip_abscissa": "predicted extreme boundary abscissa",
    "tip_errors": "relative errors of the extreme abscissae (left, right)",
    "location": "critical point (x, y)",
    "hessian_eigenvalues": "eigenvalues of the Hessian of u, ascending",
    "value": "value of u",
    "residual": "|grad u| at the returned point",
    "min_curvature_trend": "(epsilon, minimal boundary curvature) pairs",
    "hausdorff": "Hausdorff distance of the boundary in |x| <= 2 to the lines y = +-1",
    "rect_max_u": "max of u on the rectangle boundary",
    "spacing": "lattice spacing, length units",
    "nodes": "number of interior grid nodes",
    "sup_error": "max norm of the error over the interior nodes",
    "orders": "observed convergence orders of consecutive spacing pairs",
    "observed_order": "mean observed convergence order",
    "lam": "lambda",
    "first_difference_error": "max norm of the error of the forward differences",
    "lambda_min": "smallest eigenvalue of the linearised operator",
    "torsion_sup": "max norm of the discrete torsion solution",
    "history": "(lambda, accepted) pairs of the bisection",
    "wall_times": "elapsed wall clock time per stage, seconds",
    "sha256": "sha256 hash of the file content",
}


def _is_numeric(value) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, (int, float)):
        return True
    if isinstance(value, (list, tuple)):
        return any(_is_numeric(item) for item in value)
    return False


def to_builtin(value):
    """Plain python version of ``value`` for json: lists instead of tuples and arrays, None for NaN"""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_builtin(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def attach_meta(data):
    """
    Add a ``"_meta"`` mapping to every dictionary holding numbers,
    naming the unit or definition of each numeric field.
    """
    if isinstance(data, list):
        return [attach_meta(item) for item in data]
    if not isinstance(data, dict):
        return data

    result = {key: attach_meta(value) for key, value in data.items()}
    meta = {
        key: META.get(key, key.replace("_", " "))
        for key, value in data.items()
        if _is_numeric(value)
    }
    if meta:
        result["_meta"] = meta
    return result


def report_document(report: Dict[str, Any], kind: str) -> Dict[str, Any]:
    """JSON-ready version of the report with _meta blocks, schema version and kind"""
    document = attach_meta(to_builtin(report))
    document["schema_version"] = SCHEMA_VERSION
    document["kind"] = kind
    return document


def render_json(report: Dict[str, Any], kind: str) -> str:
    """The report as deterministic JSON text (sorted keys, repr floats, _meta blocks)"""
    return json.dumps(report_document(report, kind), indent=2, sort_keys=True) + "\n"


def error_body(err: Exception) -> Dict[str, Any]:
    return {"error": {"type": type(err).__name__, "message": str(err)}}


def output_directory(path: Optional[str] = None) -> Path:
    """The explicit path, the directory of the environment variable or the current directory"""
    directory = Path(path or os.environ.get(OUTPUT_DIR_ENV) or ".")
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def sha256_of(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_text(text: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def write_frame_csv(frame, path: Union[str, Path]) -> Path:
    """CSV export of a pandas frame, floats with round-trip precision"""
    path = Path(path)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_pgm(raster: np.ndarray, path: Union[str, Path], normalize: bool = True) -> Path:
    """
    Binary 8 bit PGM image of a raster indexed [row, column] with rows from bottom to top.
    Boolean masks map to 0 / 255; with ``normalize`` other rasters are scaled
    linearly onto 0..255, NaN becomes 0.
    """
    raster = np.asarray(raster)
    if raster.dtype == bool:
        pixels = raster.astype(np.uint8) * 255
    else:
        values = np.nan_to_num(raster.astype(float), nan=np.nanmin(raster))
        low, high = float(values.min()), float(values.max())
        if normalize and high > low:
            values = (values - low) / (high - low)
        pixels = np.clip(np.rint(255 * values), 0, 255).astype(np.uint8)

    path = Path(path)
    Image.fromarray(np.ascontiguousarray(pixels[::-1])).save(path, format="PPM")
    logger.debug(f"Wrote {pixels.shape} image to {path}")
    return path


def plot_domain_svg(construction, path: Union[str, Path]) -> Path:
    """
    Draw the domain boundary and the level-1/2 curves with equal axis scaling.
    The svg bytes only depend on the input and the matplotlib version.
    """
    figure = Figure(figsize=(10, 3))
    FigureCanvasAgg(figure)
    axes = figure.add_subplot(111)

    boundary = construction.domain.boundary
    closed = np.vstack([boundary.vertices, boundary.vertices[:1]])
    axes.plot(closed[:, 0], closed[:, 1], color="k", linewidth=1.0, label="u = 0")
    for index, contour in enumerate(construction.level_curves):
        vertices = np.vstack([contour.vertices, contour.vertices[:1]])
        axes.plot(
            vertices[:, 0],
            vertices[:, 1],
            color="tab:blue",
            linewidth=0.8,
            label="u = 1/2" if index == 0 else None,
        )
    config = construction.config
    axes.plot(config.roots, np.zeros(len(config.roots)), "o", color="tab:red", markersize=2)

    axes.set_aspect("equal")
    axes.set_xlabel("x")
    axes.set_ylabel("y")
    axes.set_title(f"k = {config.k}, epsilon = {config.epsilon:g}")
    axes.legend(loc="upper right", fontsize="small")

    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "path"}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    logger.debug(f"Wrote figure {path}")
    return path


@dataclass
class RunManifest:
    """
    Record of one command line run: the echoed parameters, the numerical settings
    and every emitted file with its content hash.
    Wall times only appear here, never in the reports.
    """

    command: str
    parameters: Dict[str, Any]
    window: Optional[Dict[str, Any]] = None
    resolutions: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, Dict[str, str]] = field(default_factory=dict)
    wall_times: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def add_artifact(self, name: str, path: Union[str, Path]):
        self.artifacts[name] = {"path": Path(path).name, "sha256": sha256_of(path)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "window": self.window,
            "resolutions": self.resolutions,
            "tolerances": self.tolerances,
            "artifacts": self.artifacts,
            "wall_times": self.wall_times,
            "notes": self.notes,
            "schema_version": self.schema_version,
        }

    def write(self, path: Union[str, Path]) -> Path:
        return write_text(render_json(self.to_dict(), "manifest"), path)
