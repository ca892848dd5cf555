"""Discrete Laplace-Beltrami operators on triangle meshes.

The core operator lifts each vertex's neighborhood onto an estimated tangent
plane, solves a small moment system for stencil weights, and applies a
generalized 5-point formula. Classic weighted, disk-integral, curvature-flow,
and Green-formula discretizations are included as baselines, together with
analytic graph surfaces, exact operator values, and a refinement-study
harness.
"""

from .convergence import (
    BASE_N,
    ConvergenceReport,
    LevelResult,
    build_ladder,
    compare_to_csv,
    fit_order,
    graph_mesh,
    measured_interior_mask,
    report_to_csv,
    run_compare,
    run_convergence,
)
from .errors import (
    DegenerateConfiguration,
    DegenerateFace,
    MeshError,
    ZeroDenominator,
)
from .lifting import (
    LiftedPolygon,
    TangentFrame,
    frame_from_normal,
    lift_function,
    lift_one_ring,
    tangent_frame,
    tangent_frames,
    vertex_normal,
    vertex_normals,
)
from .mesh import (
    DomainKind,
    Mesh,
    MeshStats,
    OneRing,
    generate_planar,
    icosahedron,
    icosphere,
    load_mesh,
    mesh_stats,
    one_ring,
    save_obj,
    save_off,
    subdivide_midpoint,
)
from .operators import (
    LtlOptions,
    LtlStencils,
    OperatorField,
    OperatorKind,
    apply_operator,
    apply_stencils,
    coordinate_laplacians,
    gradient_ltl,
    lb_desbrun,
    lb_ltl,
    lb_mayer,
    lb_weighted,
    lb_xu_green,
    ltl_stencils,
    mean_curvature_vector,
)
from .stencil import (
    ConfigurationSolution,
    PointSet2D,
    build_configuration_matrix,
    laplacian_from_configuration,
    select_neighbors,
    solve_configuration,
)
from .surfaces import (
    SCALAR_FIELDS,
    SURFACES,
    AnalyticSurface,
    TestFunction,
    exact_lb_graph,
    exact_lb_graph_fd,
    get_scalar_field,
    get_surface,
)

__version__ = "0.1.0"
