"""Multi-layer hybrid matrix factorization with automatic rank selection."""

__version__ = "0.1.0"

from .exceptions import (
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    MatrixFormatError,
    NumericalError,
)
from .matrix_core import pos_neg_split, pseudo_inverse, qr_decompose, read_matrix, write_matrix
from .mbp import MbpReport, run_mbp
from .metrics import hausdorff, icc, identifiability, reconstruction_error
from .rro import RankEstimate, estimate_rank
from .sender_core import (
    Activation,
    Decomposition,
    HybridFactorization,
    LayerFactors,
    SenderConfig,
    decompose,
    shrinkage,
)
from .storm import StormParams, storm_solve

__all__ = [
    "Activation",
    "ConfigError",
    "Decomposition",
    "DegenerateInputError",
    "DivergenceError",
    "HybridFactorization",
    "LayerFactors",
    "MatrixFormatError",
    "MbpReport",
    "NumericalError",
    "RankEstimate",
    "SenderConfig",
    "StormParams",
    "decompose",
    "estimate_rank",
    "hausdorff",
    "icc",
    "identifiability",
    "pos_neg_split",
    "pseudo_inverse",
    "qr_decompose",
    "read_matrix",
    "reconstruction_error",
    "run_mbp",
    "shrinkage",
    "storm_solve",
    "write_matrix",
]
