import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from rmfem.assembly import DofMap, assemble, eliminate_constraints, pairing
from rmfem.errors import ParameterError, SolverError
from rmfem.materials import BVP1_MATERIALS
from rmfem.solver import CG, DIRECT, relative_residual, solve_spd
from rmfem.studies import StudySpec, build_constraints, build_mesh, rect_bcs, study_materials


def laplacian(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


@pytest.mark.parametrize("method", [DIRECT, CG])
def test_identity(method):
    x, rep = solve_spd(sp.identity(3), [1.0, 2.0, 3.0], method=method)
    assert np.allclose(x, [1, 2, 3]) and rep.residual <= 1e-10


@pytest.mark.parametrize("method", [DIRECT, CG])
def test_laplacian_ones(method):
    x, _ = solve_spd(laplacian(5), [1.0, 0, 0, 0, 1.0], method=method)
    assert np.allclose(x, 1.0, atol=1e-9)


def test_zero_rhs_short_circuit():
    x, rep = solve_spd(laplacian(4), np.zeros(4))
    assert np.all(x == 0) and rep.residual == 0.0


def test_empty_system():
    x, rep = solve_spd(sp.csr_matrix((0, 0)), np.zeros(0))
    assert x.shape == (0,) and rep.n_unknowns == 0


def test_unknown_method():
    with pytest.raises(ParameterError, match="direct-factorization"):
        solve_spd(sp.identity(2), np.ones(2), method="gauss")


def test_shape_mismatch():
    with pytest.raises(ParameterError):
        solve_spd(sp.identity(2), np.ones(3))


def test_singular_detected():
    K = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolverError):
        solve_spd(K, [1.0, 0.0])


def test_indefinite_detected():
    K = sp.diags([1.0, -2.0, 3.0])
    with pytest.raises(SolverError, match="positive definite"):
        solve_spd(K, np.ones(3))


def test_cg_iteration_limit():
    with pytest.raises(SolverError):
        solve_spd(laplacian(200), np.ones(200), method=CG, max_iter=2)


@given(seed=st.integers(0, 10_000), n=st.integers(2, 30))
def test_random_spd_matches_dense(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    K = A @ A.T + n * np.eye(n)
    f = rng.standard_normal(n)
    x, rep = solve_spd(sp.csr_matrix(K), f)
    assert np.allclose(x, np.linalg.solve(K, f), atol=1e-10)
    assert rep.residual == pytest.approx(relative_residual(K, x, f))


@pytest.fixture(scope="module")
def bvp1_reduced():
    spec = StudySpec(pairing="T2NT1", level=0)
    dm = DofMap(build_mesh(spec), pairing("T2NT1"))
    system = assemble(dm, study_materials(spec))
    return eliminate_constraints(system.K, system.f, build_constraints(dm, rect_bcs()))


def test_bvp1_coarse_residual(bvp1_reduced):
    x, rep = solve_spd(bvp1_reduced.K, bvp1_reduced.f)
    assert rep.residual <= 1e-10


def test_direct_and_cg_agree(bvp1_reduced):
    xd, _ = solve_spd(bvp1_reduced.K, bvp1_reduced.f, method=DIRECT)
    xc, rep = solve_spd(bvp1_reduced.K, bvp1_reduced.f, tolerance=1e-12, method=CG)
    assert rep.iterations > 0
    assert np.linalg.norm(xd - xc) <= 1e-8 * np.linalg.norm(xd)


def test_energy_minimality(bvp1_reduced):
    """The discrete solution minimizes 1/2 y.K y - f.y over the admissible set."""
    K, f = bvp1_reduced.K, bvp1_reduced.f
    y, _ = solve_spd(K, f)
    pi = lambda v: 0.5 * v @ (K @ v) - f @ v  # noqa: E731
    rng = np.random.default_rng(0)
    for _ in range(5):
        d = rng.standard_normal(len(y)) * 1e-3 * np.abs(y).max()
        assert pi(y + d) >= pi(y)


def test_reduced_matrix_symmetric(bvp1_reduced):
    K = bvp1_reduced.K
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()


def test_materials_table_is_used(bvp1_reduced):
    # sanity: the coarse problem is not trivially zero
    assert np.linalg.norm(bvp1_reduced.f) > 0
    assert BVP1_MATERIALS[1].mu_e == pytest.approx(729.17)
