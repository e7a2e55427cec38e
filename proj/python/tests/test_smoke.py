# SPDX-License-Identifier: Apache-2.0
import math

import numpy as np
import pytest
import scipy.sparse as sp

import richlab


def to_scipy(A):
    indptr, indices, data = A.csr()
    return sp.csr_matrix((data, indices, indptr), shape=A.shape)


def test_assembly_matches_matvec():
    A = richlab.assemble_anisotropic(1e-2, math.pi / 6, 16)
    assert A.shape == (225, 225)
    S = to_scipy(A)
    x = np.random.default_rng(0).standard_normal(225)
    np.testing.assert_allclose(A.matvec(x), S @ x, rtol=1e-14, atol=1e-14)
    assert abs(S - S.T).max() < 1e-14


def test_from_csr_round_trip():
    A = richlab.assemble_anisotropic(1.0, 0.0, 8)
    indptr, indices, data = A.csr()
    B = richlab.SparseMatrix.from_csr(49, 49, indptr, indices, data)
    np.testing.assert_array_equal(B.csr()[2], data)


def test_chebyshev_solve_converges():
    A = richlab.assemble_anisotropic(1.0, 0.0, 16)
    lmin, lmax = richlab.spectral_bounds(A)
    schedule = richlab.WeightSchedule.plain(richlab.chebyshev_weights(lmax, lmin, 3))
    f = richlab.sample_rhs(0, 0, 225)
    out = richlab.solve_stationary(A, f, schedule, tol=1e-8)
    assert out["converged"]
    assert out["inner_iters"] == 3 * out["outer_iters"]
    r = f - to_scipy(A) @ out["u"]
    assert np.linalg.norm(r) / np.linalg.norm(f) <= 1e-8


def test_bad_preconditioner_raises():
    A = richlab.assemble_anisotropic(1.0, 0.0, 8)
    s = richlab.WeightSchedule.plain([0.1])
    with pytest.raises(richlab.ConfigError):
        richlab.solve_stationary(A, np.ones(49), s, precond="nope")


def test_dst2_is_orthonormal_involution():
    x = np.random.default_rng(1).standard_normal(15 * 15)
    y = richlab.dst2(x)
    np.testing.assert_allclose(np.linalg.norm(y), np.linalg.norm(x), rtol=1e-13)
    np.testing.assert_allclose(richlab.dst2(y), x, atol=1e-13)


def test_helmholtz_vcycle_beats_identity():
    omega = 2 * math.pi * 2
    pre = richlab.solve_helmholtz(omega, 32, "vcycle")
    plain = richlab.solve_helmholtz(omega, 32, "none")
    assert pre["converged"] and plain["converged"]
    assert pre["inner_iters"] < plain["inner_iters"]


def test_training_is_deterministic():
    a = richlab.train_checkpoint(n=8, samples=20, epochs=2, K=5, seed=3)
    b = richlab.train_checkpoint(n=8, samples=20, epochs=2, K=5, seed=3)
    assert a == b and len(a) > 0
