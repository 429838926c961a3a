"""Dilation theory on finite towers of Hilbert spaces.

A locally Hilbert space is modelled as a finite chain of nested coordinate
spaces (:class:`Tower`). Operators compatible with the chain are stored
blockwise (:class:`LocalOperator`). The main entry point is :func:`dilate`,
which turns a locally positive definite function on a finite *-semigroup
into a minimal representation compressed by an isometry; the concrete
constructions in :mod:`locdilate.applications` build on it.
"""
from ._kernels import BACKEND
from .applications import (
    LocalPovm,
    SpectralDilation,
    UnitaryDilation,
    naimark,
    rho_contraction_check,
    square_root,
    unitary_dilation,
)
from .dilation import DilationResult, Rklhs, build_rklhs, dilate, intertwiner, rho_dilate
from .errors import (
    CompatibilityError,
    InvalidLevelError,
    LbcError,
    LocDilateError,
    PreconditionError,
    StructuralError,
)
from .local_operator import (
    LocalOperator,
    adjoint,
    classify,
    compose,
    fuglede_putnam_residual,
    matrix_flags,
)
from .pd_kernel import (
    OperatorFunction,
    OperatorKernel,
    is_lpdf,
    is_lpdk,
    kernel_of_function,
    lbc_constants,
)
from .star_semigroup import StarSemigroup, builtin, cyclic_group, powerset_intersection, truncated_naturals
from .tower import LocalVector, Tower, inner_product, project, promote

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CompatibilityError",
    "DilationResult",
    "InvalidLevelError",
    "LbcError",
    "LocDilateError",
    "LocalOperator",
    "LocalPovm",
    "LocalVector",
    "OperatorFunction",
    "OperatorKernel",
    "PreconditionError",
    "Rklhs",
    "SpectralDilation",
    "StarSemigroup",
    "StructuralError",
    "Tower",
    "UnitaryDilation",
    "adjoint",
    "build_rklhs",
    "builtin",
    "classify",
    "compose",
    "cyclic_group",
    "dilate",
    "fuglede_putnam_residual",
    "inner_product",
    "intertwiner",
    "is_lpdf",
    "is_lpdk",
    "kernel_of_function",
    "lbc_constants",
    "matrix_flags",
    "naimark",
    "powerset_intersection",
    "project",
    "promote",
    "rho_contraction_check",
    "rho_dilate",
    "square_root",
    "truncated_naturals",
    "unitary_dilation",
]
