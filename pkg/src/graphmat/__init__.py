"""Graph matrices over sparse random graphs, block-value norm predictions and
truncated pseudo-calibrated moment matrices for independent set."""

from .core_graph import (CharacterParams, PrunedGraph, RandomGraph, character, chi_product,
                         graph_from_dict, is_two_cycle_free_at, kappa, sample_gnp, sample_pruned,
                         trim_high_degree)
from .errors import (ClassificationError, ConfigError, DomainError, EnumerationOverflowError,
                     GraphmatError, ParameterError, ShapeError, UnsupportedSizeError,
                     ValidationError)
from .graph_matrix import (GraphMatrixOperator, block_norm, dense_operator, entry_bruteforce,
                           line_operator, materialize)
from .norm_bounds import (BoundParams, NormReport, charging_ratio, empirical_norm,
                          norm_experiment, predicted_block_value, trace_moment)
from .pseudo_moments import (MomentMatrix, MomentParams, Ribbon, assemble_moment_matrix,
                             check_constraints, enumerate_ribbons, glue, min_eigenvalue,
                             objective_value, pe_value, ribbon_coefficient)
from .shape import (Shape, automorphism_count, is_separator, min_vertex_separator,
                    shape_corpus, sparse_mvs, structure, transpose, validate_shape)

__version__ = "0.1.0"
