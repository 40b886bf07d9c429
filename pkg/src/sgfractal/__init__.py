"""Fractal interpolation and fractal operators on the Sierpinski gasket.

Modules
-------
lattice
    Vertex sets ``V_n``, words, cells and contraction preimages.
field
    Expression parser and vertex functions.
analysis
    Graph energy, harmonic extension, oscillation and ``L^q`` norms.
fractal
    Alpha-fractal construction, the fixed-point oracle and operator matrices.
theorems
    Hypothesis predicates and inequality checks with JSON reports.
cli
    The ``sgfractal`` command.
"""

from .analysis import (
    DIM_SG,
    MeasureSpec,
    cbeta_norm,
    energy_norm,
    energy_sequence,
    graph_energy,
    harmonic_extend,
    lq_norm,
    measure_dimension,
    oscillation_total,
)
from .config import ConfigError, RunConfig
from .field import FieldEvalError, FieldParseError, VertexFunction, eval_field, parse_expression, sample, sup_norm
from .fractal import (
    BaseOperator,
    BoundaryMismatchWarning,
    ScalingFamily,
    alpha_fractal,
    assemble_operator,
    invert_operator,
    rb_iterate,
)
from .lattice import SGLattice, build_lattice, cached_lattice, vertex_count
from .theorems import check_hypothesis, run_report

__version__ = "0.1.0"

__all__ = [
    "DIM_SG",
    "BaseOperator",
    "BoundaryMismatchWarning",
    "ConfigError",
    "FieldEvalError",
    "FieldParseError",
    "MeasureSpec",
    "RunConfig",
    "SGLattice",
    "ScalingFamily",
    "VertexFunction",
    "alpha_fractal",
    "assemble_operator",
    "build_lattice",
    "cached_lattice",
    "cbeta_norm",
    "check_hypothesis",
    "energy_norm",
    "energy_sequence",
    "eval_field",
    "graph_energy",
    "harmonic_extend",
    "invert_operator",
    "lq_norm",
    "measure_dimension",
    "oscillation_total",
    "parse_expression",
    "rb_iterate",
    "run_report",
    "sample",
    "sup_norm",
    "vertex_count",
]
