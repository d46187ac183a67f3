from .field import (
    ImplicitField,
    RadialTorsionField,
    RootConfig,
    StripField,
    curvature,
    eval_u,
    eval_v,
    grad_u,
    hess_u,
    radial_derivative,
)
from .polynomial import PolyCoeffs, poly_from_roots
from .predictions import (
    AsymptoticPrediction,
    boundary_profile,
    predictions,
    restriction_extrema,
)
