from .certificates import (
    CertificateReport,
    check_rect_negativity,
    curvature_certificate,
    hausdorff_to_strip,
    min_curvature_trend,
    separation_check,
    starshape_certificate,
)
from .components import ComponentCount, superlevel_component_count
from .contour import Contour, extract_level_set
from .domain import DomainExtract, extract_domain, segment_inside
from .window import GridWindow
