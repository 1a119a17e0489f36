"""Numerical toolkit for relaxation of extended-real variational integrands.

The package computes lower envelopes (convex, lamination, cell-problem) of
integrands f(x, xi) that may take the value +inf, evaluates the induced set
functions and their derivatives, and compares integral representations
against glued upper-bound constructions.  A command line front end drives
the same machinery over a built-in example corpus; ``relaxkit verify`` runs
the numbered acceptance battery.
"""

from .cellsolve import (
    CellProblem,
    CellStatus,
    OptimizerConfig,
    cell_inf,
    default_eps_seq,
    default_t_seq,
    omega_delta,
    zl,
    zl_hat,
)
from .corpus import CorpusEntry, build_integrand, corpus_entry, corpus_ids, load_integrand
from .envelopes import (
    EnvelopeTable,
    XiGrid,
    convex_envelope,
    lamination_envelope,
    midpoint_violation,
    ordering_defect,
    rank_one_directions,
    raw_table,
    zl_hat_table,
    zl_table,
)
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainEscapeError,
    RelaxkitError,
    ResolutionError,
    ShapeError,
    ToleranceError,
)
from .integrand import (
    Box,
    DomainSpec,
    GrowthProfile,
    Integrand,
    MatrixShape,
    RuUscWeight,
    SamplingPlan,
    check_H3,
    check_coercivity,
    check_lebesgue_pts,
    cube_average,
    ruusc_modulus,
    sup_on_box,
    unit_box,
)
from .mesh import (
    CubeMesh,
    CubeSpec,
    GridFunction,
    cube_at,
    glue,
    interpolate_affine,
    kuhn_mesh,
    point_eval,
    restrict,
    unit_cell,
)
from .relaxation import (
    RelaxationReport,
    RepresentConfig,
    direct_upper,
    extend_ruusc,
    functional_modulus,
    relax_report,
    represent,
    scalar_check,
)
from .setfun import (
    DyadicFamily,
    SetFunction,
    dirichlet_setfun,
    dirichlet_value,
    m_eps,
    m_sharp,
    m_star,
    omega_ratio,
    quadratic_setfun,
    set_derivative,
    volume_setfun,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CellProblem",
    "CellStatus",
    "ConfigurationError",
    "CorpusEntry",
    "CubeMesh",
    "CubeSpec",
    "DegenerateInputError",
    "DomainEscapeError",
    "DomainSpec",
    "DyadicFamily",
    "EnvelopeTable",
    "GridFunction",
    "GrowthProfile",
    "Integrand",
    "MatrixShape",
    "OptimizerConfig",
    "RelaxationReport",
    "RelaxkitError",
    "RepresentConfig",
    "ResolutionError",
    "RuUscWeight",
    "SamplingPlan",
    "SetFunction",
    "ShapeError",
    "ToleranceError",
    "XiGrid",
    "build_integrand",
    "cell_inf",
    "check_H3",
    "check_coercivity",
    "check_lebesgue_pts",
    "convex_envelope",
    "corpus_entry",
    "corpus_ids",
    "cube_at",
    "cube_average",
    "default_eps_seq",
    "default_t_seq",
    "dirichlet_setfun",
    "dirichlet_value",
    "direct_upper",
    "extend_ruusc",
    "functional_modulus",
    "glue",
    "interpolate_affine",
    "kuhn_mesh",
    "lamination_envelope",
    "load_integrand",
    "m_eps",
    "m_sharp",
    "m_star",
    "midpoint_violation",
    "omega_delta",
    "omega_ratio",
    "ordering_defect",
    "point_eval",
    "quadratic_setfun",
    "rank_one_directions",
    "raw_table",
    "relax_report",
    "represent",
    "restrict",
    "ruusc_modulus",
    "scalar_check",
    "set_derivative",
    "sup_on_box",
    "unit_box",
    "unit_cell",
    "volume_setfun",
    "zl",
    "zl_hat",
    "zl_hat_table",
    "zl_table",
]
