import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmfem.elements import nedelec
from rmfem.elements.lagrange import lagrange_eval, reference_nodes
from rmfem.elements.nedelec import nedelec_eval
from rmfem.elements.quadrature import gauss_line, quadrature
from rmfem.elements.reference import (
    LAGRANGE,
    NEDELEC,
    ReferenceElement,
    basis_field,
    duality_matrix,
    edge_dof_functional,
    inner_dof_functional,
)
from rmfem.errors import ElementError

NEDELEC_TYPES = [("tri", 1), ("tri", 2), ("quad", 1), ("quad", 2)]
LAGRANGE_TYPES = [("tri", 1), ("tri", 2), ("quad", 1), ("quad", 2)]


def random_points(kind, n, rng):
    if kind == "tri":
        p = rng.uniform(0.01, 0.98, size=(4 * n, 2))
        return p[p.sum(axis=1) < 0.98][:n]
    return rng.uniform(-0.98, 0.98, size=(n, 2))


# -- Lagrange -----------------------------------------------------------------
class TestLagrange:
    def test_t2_vertex_kronecker(self):
        N, _ = lagrange_eval("tri", 2, np.array([1.0, 0.0]))
        assert np.allclose(N, np.eye(6)[1])

    def test_q2_bubble(self):
        N, _ = lagrange_eval("quad", 2, np.array([0.0, 0.0]))
        assert np.allclose(N, np.eye(9)[8])

    def test_t1_centre(self):
        N, _ = lagrange_eval("tri", 1, np.array([1 / 3, 1 / 3]))
        assert np.allclose(N, 1 / 3)

    @pytest.mark.parametrize("kind,order,count", [("tri", 1, 3), ("tri", 2, 6), ("quad", 1, 4), ("quad", 2, 9)])
    def test_counts_and_kronecker(self, kind, order, count):
        nodes = reference_nodes(kind, order)
        N, _ = lagrange_eval(kind, order, nodes)
        assert N.shape == (count, count)
        assert np.allclose(N, np.eye(count), atol=1e-14)

    @pytest.mark.parametrize("kind,order", LAGRANGE_TYPES)
    def test_partition_of_unity_and_fd_gradients(self, kind, order):
        rng = np.random.default_rng(3)
        xi = random_points(kind, 20, rng)
        N, dN = lagrange_eval(kind, order, xi)
        assert np.allclose(N.sum(axis=1), 1.0, atol=1e-14)
        assert np.allclose(dN.sum(axis=1), 0.0, atol=1e-13)
        h = 1e-6
        for d in range(2):
            e = np.zeros(2)
            e[d] = h
            fd = (lagrange_eval(kind, order, xi + e)[0] - lagrange_eval(kind, order, xi - e)[0]) / (2 * h)
            assert np.allclose(fd, dN[..., d], atol=1e-8)

    @pytest.mark.parametrize("kind,order", [("tri", 3), ("hex", 1)])
    def test_unsupported(self, kind, order):
        with pytest.raises(ElementError):
            lagrange_eval(kind, order, np.zeros(2))


# -- Nedelec shape functions -------------------------------------------------
class TestNedelecValues:
    def test_nt1_third_basis(self):
        v, _ = nedelec_eval("tri", 1, np.array([0.5, 0.0]))
        assert np.allclose(v[2], [1.0, 0.5])

    def test_nq1_first_basis(self):
        v, _ = nedelec_eval("quad", 1, np.array([0.0, -1.0]))
        assert np.allclose(v[0], [0.5, 0.0])

    def test_nt2_first_basis_at_origin(self):
        v, _ = nedelec_eval("tri", 2, np.array([0.0, 0.0]))
        assert np.allclose(v[0], [0.0, 0.0])

    def test_nt2_first_basis_closed_form(self):
        x, y = 0.3, 0.2
        v, _ = nedelec_eval("tri", 2, np.array([x, y]))
        assert np.allclose(v[0], 2 * np.array([-y + 4 * y * x, 2 * x - 4 * x * x]))

    @pytest.mark.parametrize("kind,order,count", [("tri", 1, 3), ("tri", 2, 8), ("quad", 1, 4), ("quad", 2, 12)])
    def test_counts(self, kind, order, count):
        v, c = nedelec_eval(kind, order, np.zeros((5, 2)) + 0.1)
        assert v.shape == (5, count, 2) and c.shape == (5, count)

    @pytest.mark.parametrize("kind,order", [("tri", 3), ("quad", 0), ("hex", 1)])
    def test_unsupported(self, kind, order):
        with pytest.raises(ElementError):
            nedelec_eval(kind, order, np.zeros(2))

    @pytest.mark.parametrize("kind,order", NEDELEC_TYPES)
    def test_curl_matches_finite_differences(self, kind, order):
        rng = np.random.default_rng(7)
        xi = random_points(kind, 20, rng)
        _, curl = nedelec_eval(kind, order, xi)
        h = 1e-6
        ex, ey = np.array([h, 0.0]), np.array([0.0, h])
        dvy_dx = (nedelec_eval(kind, order, xi + ex)[0][..., 1] - nedelec_eval(kind, order, xi - ex)[0][..., 1]) / (2 * h)
        dvx_dy = (nedelec_eval(kind, order, xi + ey)[0][..., 0] - nedelec_eval(kind, order, xi - ey)[0][..., 0]) / (2 * h)
        assert np.allclose(dvy_dx - dvx_dy, curl, atol=1e-6)

    @pytest.mark.parametrize("kind", ["tri", "quad"])
    def test_nestedness(self, kind):
        """Every order-1 basis lies in the order-2 space."""
        rng = np.random.default_rng(11)
        xi = random_points(kind, 60, rng)
        v1, _ = nedelec_eval(kind, 1, xi)
        v2, _ = nedelec_eval(kind, 2, xi)
        A = v2.transpose(0, 2, 1).reshape(-1, v2.shape[1])
        for b in range(v1.shape[1]):
            rhs = v1[:, b, :].ravel()
            coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            assert np.linalg.norm(A @ coef - rhs) < 1e-12

    @pytest.mark.parametrize("kind,order", NEDELEC_TYPES)
    def test_tangential_trace_degree(self, kind, order):
        s = np.linspace(0.0, 1.0, 9)
        for start, end, t in nedelec.REF_EDGES[kind]:
            pts = start + s[:, None] * (end - start)
            v, _ = nedelec_eval(kind, order, pts)
            trace = v @ t
            V = np.vander(s, order)  # polynomials of degree <= order - 1
            coef, *_ = np.linalg.lstsq(V, trace, rcond=None)
            assert np.max(np.abs(V @ coef - trace)) < 1e-12


# -- dof functionals -----------------------------------------------------------
class TestFunctionals:
    def test_nt1_edge3_of_v3(self):
        el = ReferenceElement(NEDELEC, "tri", 1)
        assert edge_dof_functional(el, 2, 0, basis_field(el, 2)) == pytest.approx(1.0, abs=1e-14)

    def test_nt1_edge1_of_v3(self):
        el = ReferenceElement(NEDELEC, "tri", 1)
        assert edge_dof_functional(el, 0, 0, basis_field(el, 2)) == pytest.approx(0.0, abs=1e-14)

    def test_nq2_edge1_constant(self):
        el = ReferenceElement(NEDELEC, "quad", 2)
        const = lambda p: np.tile([1.0, 0.0], (len(p), 1))  # noqa: E731
        assert edge_dof_functional(el, 0, 0, const) == pytest.approx(1.0, abs=1e-14)

    def test_nt2_inner_duality(self):
        el = ReferenceElement(NEDELEC, "tri", 2)
        assert inner_dof_functional(el, 0, basis_field(el, 6)) == pytest.approx(1.0, abs=1e-13)
        assert inner_dof_functional(el, 0, basis_field(el, 0)) == pytest.approx(0.0, abs=1e-13)

    def test_nq2_inner_constant(self):
        el = ReferenceElement(NEDELEC, "quad", 2)
        const = lambda p: np.tile([1.0, 0.0], (len(p), 1))  # noqa: E731
        assert inner_dof_functional(el, 0, const) == pytest.approx(2.0, abs=1e-14)

    def test_inner_on_first_order(self):
        el = ReferenceElement(NEDELEC, "tri", 1)
        with pytest.raises(ElementError):
            inner_dof_functional(el, 0, basis_field(el, 0))

    def test_moment_out_of_range(self):
        el = ReferenceElement(NEDELEC, "quad", 1)
        with pytest.raises(ElementError):
            edge_dof_functional(el, 0, 1, basis_field(el, 0))

    def test_lagrange_has_no_edge_moments(self):
        el = ReferenceElement(LAGRANGE, "tri", 2)
        with pytest.raises(ElementError):
            edge_dof_functional(el, 0, 0, lambda p: p)

    @pytest.mark.parametrize("kind,order", NEDELEC_TYPES)
    def test_duality_identity(self, kind, order):
        M = duality_matrix(ReferenceElement(NEDELEC, kind, order))
        assert np.max(np.abs(M - np.eye(len(M)))) < 1e-12

    @pytest.mark.parametrize("kind,order", NEDELEC_TYPES)
    def test_descriptors(self, kind, order):
        el = ReferenceElement(NEDELEC, kind, order)
        assert len(el.dofs) == el.n_basis
        n_edges = 3 if kind == "tri" else 4
        assert sum(d.entity == "edge" for d in el.dofs) == n_edges * order


# -- quadrature ------------------------------------------------------------------
class TestQuadrature:
    def test_quad_degree3(self):
        r = quadrature("quad", 3)
        assert len(r) == 4 and r.weights.sum() == pytest.approx(4.0)

    def test_tri_degree2(self):
        r = quadrature("tri", 2)
        assert len(r) == 3 and r.weights.sum() == pytest.approx(0.5)

    def test_tri_degree5_monomial(self):
        r = quadrature("tri", 5)
        assert len(r) == 7
        # int x^2 y^3 over the unit triangle = 2! 3! / 7! = 1/420
        x, y = r.points.T
        assert np.sum(r.weights * x**2 * y**3) == pytest.approx(1 / 420, rel=1e-13)

    @pytest.mark.parametrize("degree", [-1, 9])
    def test_unsupported_degree(self, degree):
        with pytest.raises(ElementError):
            quadrature("tri", degree)

    @given(a=st.integers(0, 8), b=st.integers(0, 8))
    def test_tri_exactness(self, a, b):
        from math import factorial

        if a + b > 8:
            return
        r = quadrature("tri", a + b)
        x, y = r.points.T
        exact = factorial(a) * factorial(b) / factorial(a + b + 2)
        assert np.sum(r.weights * x**a * y**b) == pytest.approx(exact, rel=1e-12, abs=1e-15)
        assert np.all(r.weights > 0)

    @given(a=st.integers(0, 8), b=st.integers(0, 8))
    def test_quad_exactness(self, a, b):
        if max(a, b) > 8:
            return
        r = quadrature("quad", max(a, b))
        x, y = r.points.T
        one_d = lambda k: 0.0 if k % 2 else 2.0 / (k + 1)  # noqa: E731
        assert np.sum(r.weights * x**a * y**b) == pytest.approx(one_d(a) * one_d(b), abs=1e-13)

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_gauss_line(self, n):
        s, w = gauss_line(n)
        assert w.sum() == pytest.approx(1.0)
        assert np.all((s > 0) & (s < 1))
        assert np.sum(w * s ** (2 * n - 1)) == pytest.approx(1 / (2 * n))
