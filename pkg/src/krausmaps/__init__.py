"""Perron-Frobenius structure of completely positive maps in Kraus form."""

from .cp_map import (
    KrausFamily,
    PrimitivityReport,
    adjoint_apply,
    algebra_closure,
    apply,
    expand_weights,
    is_irreducible,
    is_primitive,
    normalize_to_kraus,
    product_span,
    transfer_matrix,
    verify_unital,
)
from .exact_linalg import GaussianRational, Mat, MatrixSubspace, extract_basis, hs_orthocomplement, span_contains
from .positivity import BilinearWitness, PositivityVerdict, Status, check, verify_witness
from .reduction import Cnf, parse_dimacs, reduce_cnf_to_kraus

__version__ = "0.1.0"

__all__ = [
    "KrausFamily",
    "PrimitivityReport",
    "adjoint_apply",
    "algebra_closure",
    "apply",
    "expand_weights",
    "is_irreducible",
    "is_primitive",
    "normalize_to_kraus",
    "product_span",
    "transfer_matrix",
    "verify_unital",
    "GaussianRational",
    "Mat",
    "MatrixSubspace",
    "extract_basis",
    "hs_orthocomplement",
    "span_contains",
    "BilinearWitness",
    "PositivityVerdict",
    "Status",
    "check",
    "verify_witness",
    "Cnf",
    "parse_dimacs",
    "reduce_cnf_to_kraus",
]
