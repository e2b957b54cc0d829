"""Shared builders for tests: jittered and mixed meshes, random materials."""
import numpy as np

from rmfem.materials import IsotropicParams
from rmfem.mesh import QUAD, TRI, Mesh2D, gen_rectangle

MAT = IsotropicParams(lambda_micro=555.55, mu_micro=833.33, lambda_e=486.11, mu_e=729.17, mu_c=0.0, mu=833.33, Lc=1.0)
MAT2 = IsotropicParams(lambda_micro=1111.11, mu_micro=1667.67, lambda_e=972.22, mu_e=1458.33, mu_c=0.0, mu=1666.67, Lc=1.0)


def random_material(rng, mu_c=None):
    mu_e, mu_m = rng.uniform(1, 10, size=2)
    return IsotropicParams(
        lambda_micro=rng.uniform(0, 10),
        mu_micro=mu_m,
        lambda_e=rng.uniform(0, 10),
        mu_e=mu_e,
        mu_c=rng.uniform(0, 2) if mu_c is None else mu_c,
        mu=rng.uniform(0.5, 2),
        Lc=rng.uniform(0.2, 2),
    )


def jitter(mesh: Mesh2D, rng, amount=0.2) -> Mesh2D:
    """Move interior vertices randomly by up to ``amount`` times the local spacing."""
    nodes = mesh.nodes.copy()
    bnd = np.unique(mesh.edge_nodes[mesh.is_boundary_edge()])
    interior = np.setdiff1d(np.arange(mesh.n_nodes), bnd)
    h = float(np.min(mesh.edge_length))
    nodes[interior] += rng.uniform(-amount * h, amount * h, size=(len(interior), 2))
    cells = [(mesh.cell_kinds[c], mesh.cell_vertices(c).tolist(), mesh.cell_regions[c]) for c in range(mesh.n_cells)]
    tags = {tuple(mesh.edge_nodes[e]): t for e, t in mesh.boundary_tags.items()}
    return Mesh2D.from_cells(nodes, cells, tags)


def mixed_mesh(nx=8, ny=5, n_split=10, seed=0, amount=0.2) -> Mesh2D:
    """Rectangle of quads with ``n_split`` of them split into triangles, jittered.

    The default gives 50 cells (30 quads, 20 triangles).
    """
    rng = np.random.default_rng(seed)
    base = gen_rectangle(float(nx), float(ny), nx, ny, QUAD)
    split = set(rng.choice(base.n_cells, size=n_split, replace=False).tolist())
    cells = []
    for c in range(base.n_cells):
        q = base.cell_vertices(c).tolist()
        if c in split:
            cells += [(TRI, [q[0], q[1], q[2]], 1), (TRI, [q[0], q[2], q[3]], 1)]
        else:
            cells.append((QUAD, q, 1))
    tags = {tuple(base.edge_nodes[e]): t for e, t in base.boundary_tags.items()}
    return jitter(Mesh2D.from_cells(base.nodes, cells, tags), rng, amount)


def p_evaluation_matrix(dm, degree=4):
    """Dense map from P dofs to P values at quadrature points, plus the points."""
    from rmfem.assembly.system import strain_operator
    from rmfem.elements.quadrature import quadrature

    blocks, points = [], []
    for group in dm.groups:
        rule = quadrature(group.kind, degree)
        kin = strain_operator(dm, group, np.arange(len(group.cells)), rule.points)
        nc, nq = kin.det.shape
        A = np.zeros((nc, nq, 4, dm.n_dofs))
        for c in range(nc):
            A[c][:, :, group.dofs[c]] += kin.B[c, :, 4:8, :]
        blocks.append(A.reshape(-1, dm.n_dofs))
        points.append(np.repeat(kin.X.reshape(-1, 2), 4, axis=0))
    return np.vstack(blocks), np.vstack(points)


def interpolate(dm, u_fun, P_fun=None):
    """Dof vector with exact nodal u and least-squares P (exact inside the space)."""
    x = np.zeros(dm.n_dofs)
    nodes = np.arange(dm.n_unodes)
    x[dm.u_dofs(nodes).ravel()] = np.asarray(u_fun(dm.unode_coords)).ravel()
    if P_fun is None or dm.formulation.elastic:
        return x
    A, pts = p_evaluation_matrix(dm)
    target = np.asarray(P_fun(pts[::4])).reshape(-1)
    cols = np.arange(dm.p_offset, dm.n_dofs)
    coef, *_ = np.linalg.lstsq(A[:, cols], target, rcond=None)
    assert np.max(np.abs(A[:, cols] @ coef - target)) < 1e-9 * max(1.0, np.max(np.abs(target)))
    x[cols] = coef
    return x
