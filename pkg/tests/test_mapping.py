import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmfem.assembly import DofMap, Formulation
from rmfem.elements.nedelec import nedelec_eval
from rmfem.errors import GeometryError, ParameterError
from rmfem.mapping import (
    GeometryMap,
    beta_normalization,
    map_scalar_gradient,
    orientation_alpha,
    piola_map,
)
from rmfem.mesh import QUAD, TRI, gen_rectangle
from rmfem.postprocess import SolutionFields, sample_line
from rmfem.verification import check_traces

from _helpers import MAT, jitter, mixed_mesh

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


class TestScalarGradient:
    def test_identity(self):
        g = np.array([[1.0, 2.0]])
        assert np.allclose(map_scalar_gradient(np.eye(2), g), g)

    def test_stretch_halves(self):
        g = np.array([[1.0, 2.0]])
        assert np.allclose(map_scalar_gradient(2 * np.eye(2), g), 0.5 * g)

    def test_rotation(self):
        g = np.array([[1.0, 0.0]])
        assert np.allclose(map_scalar_gradient(ROT90, g), (ROT90 @ g.T).T)

    def test_singular(self):
        with pytest.raises(GeometryError):
            map_scalar_gradient(np.zeros((2, 2)), np.ones((1, 2)))

    def test_inverted_cell_named(self):
        coords = np.array([[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]])
        with pytest.raises(GeometryError, match="cell 7"):
            GeometryMap(TRI, coords, np.array([7])).evaluate(np.array([[0.2, 0.2]]))


class TestAlphaBeta:
    @pytest.mark.parametrize("t,alpha", [((1, 0), 1), ((-1, 0), -1), ((0, 1), 1), ((0, -1), -1), ((1e-14, -1), -1)])
    def test_alpha(self, t, alpha):
        assert orientation_alpha(np.array(t, dtype=float)) == alpha

    def test_alpha_zero(self):
        with pytest.raises(GeometryError):
            orientation_alpha(np.zeros(2))

    @pytest.mark.parametrize("k,L,beta", [(1, 2.0, 2.0), (2, 2.0, 1.0), (1, 1.0, 1.0)])
    def test_beta(self, k, L, beta):
        assert beta_normalization(k, L) == beta

    @pytest.mark.parametrize("k,L", [(1, 0.0), (3, 1.0)])
    def test_beta_invalid(self, k, L):
        with pytest.raises(ParameterError):
            beta_normalization(k, L)


class TestPiola:
    def test_identity(self):
        v, c = nedelec_eval(TRI, 1, np.array([0.2, 0.3]))
        psi, curl = piola_map(np.eye(2), 1.0, 1.0, 1.0, v, c)
        assert np.allclose(psi, v) and np.allclose(curl, c)

    @given(h=st.floats(0.1, 10.0), alpha=st.sampled_from([-1, 1]), beta=st.floats(0.1, 5.0))
    def test_uniform_scaling(self, h, alpha, beta):
        v, c = nedelec_eval(QUAD, 2, np.array([0.1, -0.3]))
        psi, curl = piola_map(h * np.eye(2), h * h, alpha, beta, v, c)
        assert np.allclose(curl, alpha * beta * c / h**2)
        assert np.allclose(psi, alpha * beta * v / h)

    def test_square_of_side_two(self):
        # [-1,1]^2 -> [0,2]^2: J = identity, edge 1 along x, L = 2
        s = np.linspace(-1, 1, 5)
        pts = np.column_stack([s, -np.ones_like(s)])
        v, c = nedelec_eval(QUAD, 1, pts)
        psi, _ = piola_map(np.broadcast_to(np.eye(2), (5, 2, 2)), np.ones(5), 1.0, 2.0, v[:, :1], c[:, :1])
        assert np.allclose(psi[:, 0] @ np.array([1.0, 0.0]), 1.0)

    @pytest.mark.parametrize("name", ["NT1", "NT2", "NQ1", "NQ2"])
    def test_trace_sums_on_distorted_cells(self, name):
        r = check_traces(name, n_cells=20, seed=5)
        assert r.passed, r


def one_sided_tangential_jumps(mesh, order, seed, n_s=4):
    """max |tau.P(left) - tau.P(right)| over interior edges for a random dof vector."""
    dm = DofMap(mesh, Formulation("nedelec", order))
    x = np.random.default_rng(seed).standard_normal(dm.n_dofs)
    sol = SolutionFields(dm, x, {r: MAT for r in np.unique(mesh.cell_regions)})
    interior = np.flatnonzero(~mesh.is_boundary_edge())
    s = (np.arange(n_s) + 0.5) / n_s
    a, b = mesh.nodes[mesh.edge_nodes[interior, 0]], mesh.nodes[mesh.edge_nodes[interior, 1]]
    pts = (a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
    t = sample_line(sol, pts, ["P"])
    pid = t.column("point").astype(int)
    P = np.stack([t.column(f"P_{c}") for c in ("11", "12", "21", "22")], axis=1).reshape(-1, 2, 2)
    tau = np.repeat(mesh.edge_tangent[interior], n_s, axis=0)[pid]
    tp = np.einsum("nij,nj->ni", P, tau)
    worst, scale = 0.0, float(np.max(np.abs(tp)))
    for p in np.unique(pid):
        rows = np.flatnonzero(pid == p)
        assert len(rows) == 2
        worst = max(worst, float(np.max(np.abs(tp[rows[0]] - tp[rows[1]]))))
    return worst, scale


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("kind", [TRI, QUAD])
def test_tangential_continuity_structured(kind, order):
    worst, scale = one_sided_tangential_jumps(jitter(gen_rectangle(3.0, 2.0, 3, 2, kind), np.random.default_rng(1)), order, 0)
    assert scale > 1e-3 and worst < 1e-10


@given(seed=st.integers(0, 10_000), order=st.sampled_from([1, 2]))
def test_tangential_continuity_mixed(seed, order):
    mesh = mixed_mesh(nx=4, ny=3, n_split=5, seed=seed)
    worst, _ = one_sided_tangential_jumps(mesh, order, seed)
    assert worst < 1e-10
