# SPDX-License-Identifier: Apache-2.0
"""Richardson iterations with learned weights, multigrid and flexible GMRES."""

from ._richlab import (
    ComplexSparseMatrix,
    ConfigError,
    DivergenceError,
    Error,
    SparseMatrix,
    WeightSchedule,
    assemble_anisotropic,
    assemble_helmholtz,
    chebyshev_semi_weights,
    chebyshev_weights,
    dst2,
    sample_rhs,
    solve_helmholtz,
    solve_stationary,
    spectral_bounds,
    train_checkpoint,
)

__all__ = [
    "ComplexSparseMatrix",
    "ConfigError",
    "DivergenceError",
    "Error",
    "SparseMatrix",
    "WeightSchedule",
    "assemble_anisotropic",
    "assemble_helmholtz",
    "chebyshev_semi_weights",
    "chebyshev_weights",
    "dst2",
    "sample_rhs",
    "solve_helmholtz",
    "solve_stationary",
    "spectral_bounds",
    "train_checkpoint",
]
