from .points import (
    CriticalPoint,
    MaximaCount,
    classify,
    find_critical_points,
    maxima_count_vs_k,
)
