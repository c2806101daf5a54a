"""Fixed points of simplex self-maps via simplicial subdivision and
fully-labeled cell search, with an exact-rational converse construction."""

from .construction import (
    CoordinateDisplacement,
    RoundTripReport,
    VertexMap,
    build_vertex_map,
    constructed_map,
    displacement_on_cell,
    eval_constructed,
    fixed_point_of_construction,
    roundtrip_check,
)
from .errors import (
    ArityError,
    DegenerateOutput,
    EmptyPairSet,
    FixsimError,
    InvalidInput,
    MapRangeError,
    MapSyntaxError,
    ModulusRangeError,
    NoFixedPointFound,
    NotOnSimplex,
    ResourceLimit,
    RoundTripMismatch,
    SearchExhausted,
    TauTooLarge,
    UnknownBuiltin,
    UnsupportedDimension,
    WrongArity,
)
from .fixedpoint import (
    ApproxInfo,
    FixedPointResult,
    ModulusOfContinuity,
    TraceStep,
    WitnessPair,
    approx_fixed_point,
    approx_on_grid,
    estimate_modulus,
    refine_fixed_point,
    sampled_pair_infimum,
)
from .labeling import (
    Labeling,
    Violation,
    check_admissible,
    enumerate_labelings,
    is_fully_labeled,
    label_from_function,
    random_labeling,
)
from .mapspec import MapSpec, eval_map, parse_map
from .render import render_svg
from .simplex import (
    BarycentricPoint,
    GridCell,
    GridVertex,
    SubdivisionGrid,
    cell_budget,
    cell_diameter,
    locate_cell,
    make_point,
    subdivide,
)
from .sperner import count_fully_labeled, find_fully_labeled

__version__ = "0.1.0"
