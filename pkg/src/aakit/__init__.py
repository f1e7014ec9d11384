"""Archetypal analysis toolkit.

Fast block-coordinate fitting of archetypes (plain and Huber-robust) built
on a dedicated active-set solver for simplex-constrained least squares,
plus an encoder, a nearest-archetype-hull classifier, persistence, and a
benchmark CLI.
"""

from .classifier import ClassifierModel, classify, train
from .errors import (AakitError, DataError, DeadArchetypeError,
                     DimensionError, FormatError, NumericError,
                     ParameterError, ParseError)
from .fitting import (ArchetypeModel, FitConfig, encode, fit, fit_robust,
                      update_alpha_column, update_beta_column,
                      update_beta_column_weighted)
from .model_io import (import_delimited_text, load_matrix, load_model,
                       save_matrix, save_model)
from .numcore import (ResidualTracker, frobenius_objective, huber,
                      huber_weight, robust_objective)
from .simplex_qp import (ActiveSetState, QpInstance, SimplexSolution,
                         SolverOptions, solve)

__version__ = "0.1.0"
