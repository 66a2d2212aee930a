"""Fractal packing generators and dimension analysis."""

__version__ = "0.1.0"

from .analysis import (  # noqa: F401
    CurvatureDistribution,
    DimensionFit,
    box_count,
    boyd_table,
    dimension_fit,
    duality_check,
    exponent_estimate,
    flatness_probe,
    partial_sum,
)
from .apollonian import (  # noqa: F401
    DescartesQuadruple,
    descartes_fourth,
    generate_apollonian,
    root_quadruple,
)
from .carpets import (  # noqa: F401
    CarpetCountTable,
    SigmaSpec,
    gasket_count_table,
    generate_carpet,
    generate_gasket,
    generate_sigma_carpet,
    sigma_count_table,
)
from .geometry import (  # noqa: F401
    Circle,
    Packing,
    Polygon,
    ResidualSample,
    Square,
    Triangle,
    diameter,
    dump_packing,
    inscribed_circumscribed,
    load_packing,
    set_distance,
)
from .homogeneity import (  # noqa: F401
    certify,
    cofatness,
    lemma_bounds_check,
    location_scale_probe,
    roundness,
    separation,
)
from .julia import (  # noqa: F401
    RationalMap,
    classify_grid,
    components_to_packing,
    iterate,
    parse_map,
    shipped_map,
)
