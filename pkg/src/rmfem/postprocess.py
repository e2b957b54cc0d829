"""Field evaluation, stresses, energies, line sampling and file export.

Fields are always evaluated inside one cell: values on an interior edge are
reported once per adjacent cell, never averaged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly.dofmap import U_ORDER, DofMap
from .assembly.system import Loads, load_vector, strain_operator
from .elements.lagrange import lagrange_eval
from .elements.quadrature import quadrature
from .errors import ParameterError
from .materials import ElasticityTensor2D, IsotropicParams, moment_modulus
from .mesh import NVERT, QUAD, TRI

LOCATE_TOL = 1e-10
NEWTON_ITERS = 30


@dataclass
class FieldValues:
    """Point values of the primary fields; leading axis runs over points."""

    X: np.ndarray  # (n, 2)
    u: np.ndarray  # (n, 2)
    grad_u: np.ndarray  # (n, 2, 2)
    P: np.ndarray | None  # (n, 2, 2)
    curl_P: np.ndarray | None  # (n, 2) rows of the 2D curl


@dataclass(frozen=True)
class StressState:
    sigma: np.ndarray  # (..., 2, 2)
    sigma_micro: np.ndarray  # (..., 2, 2)
    m: np.ndarray  # (..., 2) = (m13, m23)
    W: np.ndarray  # (...)


class SolutionFields:
    """Solved dof vector bound to its discretization and materials."""

    def __init__(self, dofmap: DofMap, x, materials):
        self.dofmap = dofmap
        self.mesh = dofmap.mesh
        self.x = np.asarray(x, dtype=float)
        if self.x.shape != (dofmap.n_dofs,):
            raise ParameterError(f"dof vector has shape {self.x.shape}, expected ({dofmap.n_dofs},)")
        self.materials = dict(materials)
        self._group_of = {}
        for gi, group in enumerate(dofmap.groups):
            for row, c in enumerate(group.cells):
                self._group_of[int(c)] = (gi, row)

    @property
    def has_p(self) -> bool:
        return not self.dofmap.formulation.elastic

    def evaluate(self, cells, xi) -> FieldValues:
        """Fields at reference points ``xi`` (n, 2) of ``cells`` (n,)."""
        cells = np.asarray(cells, dtype=np.int64).ravel()
        xi = np.asarray(xi, dtype=float).reshape(len(cells), 2)
        n = len(cells)
        X = np.zeros((n, 2))
        u = np.zeros((n, 2))
        g = np.zeros((n, self.dofmap.formulation.n_components))
        gidx = np.array([self._group_of[int(c)][0] for c in cells], dtype=np.int64)
        for gi, group in enumerate(self.dofmap.groups):
            sel = np.flatnonzero(gidx == gi)
            if not sel.size:
                continue
            rows = np.array([self._group_of[int(c)][1] for c in cells[sel]])
            xs = xi[sel][:, None, :]
            kin = strain_operator(self.dofmap, group, rows, xs)
            d = self.x[group.dofs[rows]]
            g[sel] = np.einsum("ckn,cn->ck", kin.B[:, 0], d)
            X[sel] = kin.X[:, 0]
            N, _ = lagrange_eval(group.kind, U_ORDER, xs[:, 0])
            du = d[:, : group.n_u_local].reshape(len(sel), -1, 2)
            u[sel] = np.einsum("ca,cai->ci", N, du)
        grad = g[:, :4].reshape(n, 2, 2)
        if not self.has_p:
            return FieldValues(X, u, grad, None, None)
        return FieldValues(X, u, grad, g[:, 4:8].reshape(n, 2, 2), g[:, 8:10])

    def stresses(self, cells, xi) -> StressState:
        vals = self.evaluate(cells, xi)
        regions = self.mesh.cell_regions[np.asarray(cells, dtype=np.int64).ravel()]
        return stress_state(vals, regions, self.materials)


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def _material(materials, region):
    try:
        return materials[int(region)]
    except KeyError:
        raise ParameterError(f"no material for region {int(region)}") from None


def stress_state(vals: FieldValues, regions, materials) -> StressState:
    """Force stress, micro-stress, moment stress and energy density per point."""
    n = len(vals.X)
    sigma = np.zeros((n, 2, 2))
    sigma_micro = np.zeros((n, 2, 2))
    m = np.zeros((n, 2))
    W = np.zeros(n)
    for reg in np.unique(regions):
        sel = regions == reg
        mat = _material(materials, reg)
        if isinstance(mat, ElasticityTensor2D):
            eps = _sym(vals.grad_u[sel])
            sigma[sel] = mat.apply(eps)
            W[sel] = 0.5 * np.einsum("nij,nij->n", sigma[sel], eps)
            continue
        if not isinstance(mat, IsotropicParams):
            raise ParameterError(f"unsupported material type {type(mat).__name__}")
        E = vals.grad_u[sel] - vals.P[sel]
        e = _sym(E)
        skew = E - e
        s_sym = mat.c_e.apply(e)
        sigma[sel] = s_sym + 2.0 * mat.mu_c * skew
        ps = _sym(vals.P[sel])
        sigma_micro[sel] = mat.c_micro.apply(ps)
        m[sel] = moment_modulus(mat) * vals.curl_P[sel]
        W[sel] = 0.5 * (
            np.einsum("nij,nij->n", s_sym, e)
            + 2.0 * mat.mu_c * np.einsum("nij,nij->n", skew, skew)
            + np.einsum("nij,nij->n", sigma_micro[sel], ps)
            + np.einsum("ni,ni->n", m[sel], vals.curl_P[sel])
        )
    return StressState(sigma, sigma_micro, m, W)


def stresses_at(solution: SolutionFields, cell: int, xi, materials=None) -> StressState:
    """Stress state at one reference point of one cell."""
    sol = solution if materials is None else SolutionFields(solution.dofmap, solution.x, materials)
    s = sol.stresses([cell], np.asarray(xi, dtype=float).reshape(1, 2))
    return StressState(s.sigma[0], s.sigma_micro[0], s.m[0], s.W[0])


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------
ENERGY_TERMS = ("elastic", "micro", "coupling", "curvature")


def energy_split(solution: SolutionFields, degree: int | None = None) -> dict[str, float]:
    """Volume integrals of the four energy terms (elasticity: 'elastic' only)."""
    dm = solution.dofmap
    out = dict.fromkeys(ENERGY_TERMS, 0.0)
    for group in dm.groups:
        rule = quadrature(group.kind, degree or dm.formulation.quadrature_degree)
        nq = len(rule.weights)
        for start in range(0, len(group.cells), 1024):
            rows = np.arange(start, min(start + 1024, len(group.cells)))
            kin = strain_operator(dm, group, rows, rule.points)
            g = np.einsum("cqkn,cn->cqk", kin.B, solution.x[group.dofs[rows]])
            w = (kin.det * rule.weights).ravel()
            g = g.reshape(-1, g.shape[-1])
            regions = np.repeat(dm.mesh.cell_regions[group.cells[rows]], nq)
            for reg in np.unique(regions):
                sel = regions == reg
                parts = _energy_terms(g[sel], _material(solution.materials, reg))
                for key, dens in parts.items():
                    out[key] += float(np.sum(w[sel] * dens))
    return out


def _energy_terms(g, mat) -> dict[str, np.ndarray]:
    n = len(g)
    H = g[:, :4].reshape(n, 2, 2)
    if isinstance(mat, ElasticityTensor2D):
        e = _sym(H)
        return {"elastic": 0.5 * np.einsum("nij,nij->n", mat.apply(e), e)}
    P = g[:, 4:8].reshape(n, 2, 2)
    E = H - P
    e, ps = _sym(E), _sym(P)
    skew = E - e
    return {
        "elastic": 0.5 * np.einsum("nij,nij->n", mat.c_e.apply(e), e),
        "micro": 0.5 * np.einsum("nij,nij->n", mat.c_micro.apply(ps), ps),
        "coupling": mat.mu_c * np.einsum("nij,nij->n", skew, skew),
        "curvature": 0.5 * moment_modulus(mat) * np.sum(g[:, 8:10] ** 2, axis=1),
    }


def total_potential(solution: SolutionFields, loads: Loads | None = None, degree: int | None = None) -> float:
    """Pi = int W dV minus the work of the external loads."""
    pi = sum(energy_split(solution, degree).values())
    if loads is not None and not loads.empty:
        pi -= float(load_vector(solution.dofmap, loads, degree) @ solution.x)
    return pi


# ---------------------------------------------------------------------------
# point location
# ---------------------------------------------------------------------------
def _inside(kind, xi, tol):
    if kind == TRI:
        return (xi[..., 0] >= -tol) & (xi[..., 1] >= -tol) & (xi[..., 0] + xi[..., 1] <= 1 + tol)
    return np.all(np.abs(xi) <= 1 + tol, axis=-1)


def _inverse_map(kind, coords, p):
    """Reference coordinates of point ``p`` in each cell of ``coords`` (nc, nv, 2)."""
    if kind == TRI:
        A = np.stack([coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]], axis=-1)
        return np.linalg.solve(A, (p - coords[:, 0])[..., None])[..., 0]
    xi = np.zeros((len(coords), 2))
    for _ in range(NEWTON_ITERS):
        N, dN = lagrange_eval(QUAD, 1, xi)
        r = np.einsum("ca,cad->cd", N, coords) - p
        J = np.einsum("cab,cad->cdb", dN, coords)
        step = np.linalg.solve(J, r[..., None])[..., 0]
        xi = xi - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return xi


def locate(mesh, points, tol: float = LOCATE_TOL) -> list[list[tuple[int, np.ndarray]]]:
    """All (cell, xi) pairs containing each point, cells in ascending order.

    Brute force with a bounding-box prefilter: O(cells) per query.
    Raises :class:`ParameterError` for a point outside the mesh.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    lo = np.full((mesh.n_cells, 2), np.inf)
    hi = np.full((mesh.n_cells, 2), -np.inf)
    for kind in (TRI, QUAD):
        cells = mesh.cells_of_kind(kind)
        if cells.size:
            xy = mesh.nodes[mesh.cell_nodes[cells, : NVERT[kind]]]
            lo[cells], hi[cells] = xy.min(axis=1), xy.max(axis=1)
    pad = tol * max(1.0, float(np.max(np.abs(mesh.nodes))))
    out = []
    for p in points:
        cand = np.flatnonzero(np.all((lo - pad <= p) & (p <= hi + pad), axis=1))
        hits = []
        for kind in (TRI, QUAD):
            cells = cand[np.asarray([mesh.cell_kinds[c] == kind for c in cand], dtype=bool)] if cand.size else cand
            if not cells.size:
                continue
            xi = _inverse_map(kind, mesh.nodes[mesh.cell_nodes[cells, : NVERT[kind]]], p)
            ok = _inside(kind, xi, tol)
            hits += [(int(c), xi[i]) for i, c in enumerate(cells) if ok[i]]
        if not hits:
            raise ParameterError(f"point ({p[0]!r}, {p[1]!r}) lies outside the mesh")
        out.append(sorted(hits, key=lambda h: h[0]))
    return out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------
TENSORS = ("grad_u", "P", "sigma", "sigma_micro")
VECTORS = ("u", "m", "curl_P")
SCALARS = ("W",)
QUANTITIES = VECTORS + TENSORS + SCALARS
FRAMES = ("cartesian", "polar")
_TENSOR_SUFFIX = {"cartesian": ("11", "12", "21", "22"), "polar": ("rr", "rt", "tr", "tt")}
_VECTOR_SUFFIX = {"cartesian": ("1", "2"), "polar": ("r", "t")}


@dataclass
class Table:
    columns: list[str]
    rows: np.ndarray  # (n, len(columns))
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.rows[:, self.columns.index(name)]
        except ValueError:
            raise ParameterError(f"no column {name!r}; have {self.columns}") from None

    def __len__(self) -> int:
        return len(self.rows)


def polar_rotation(X) -> np.ndarray:
    """Rows e_r, e_theta at points X (n, 2)."""
    X = np.asarray(X, dtype=float)
    theta = np.arctan2(X[:, 1], X[:, 0])
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], axis=-2)


def sample_line(solution: SolutionFields, points, quantities=("u", "P"), frame: str = "cartesian") -> Table:
    """Evaluate quantities at points, one row per (point, containing cell)."""
    if frame not in FRAMES:
        raise ParameterError(f"unknown frame {frame!r}; valid: {list(FRAMES)}")
    quantities = list(quantities)
    for q in quantities:
        if q not in QUANTITIES:
            raise ParameterError(f"unknown quantity {q!r}; valid: {list(QUANTITIES)}")
        if q in ("P", "curl_P", "sigma_micro", "m") and not solution.has_p:
            raise ParameterError(f"quantity {q!r} needs a micro-distortion field")
    columns = ["point", "x", "y", "cell", "region"]
    for q in quantities:
        if q in TENSORS:
            columns += [f"{q}_{s}" for s in _TENSOR_SUFFIX[frame]]
        elif q in VECTORS:
            columns += [f"{q}_{s}" for s in _VECTOR_SUFFIX[frame]]
        else:
            columns.append(q)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(points):
        return Table(columns, np.empty((0, len(columns))), {"frame": frame})
    hits = locate(solution.mesh, points)
    pid = np.array([i for i, h in enumerate(hits) for _ in h], dtype=np.int64)
    cells = np.array([c for h in hits for c, _ in h], dtype=np.int64)
    xi = np.array([x for h in hits for _, x in h])
    vals = solution.evaluate(cells, xi)
    regions = solution.mesh.cell_regions[cells]
    need_stress = any(q in ("sigma", "sigma_micro", "m", "W") for q in quantities)
    st = stress_state(vals, regions, solution.materials) if need_stress else None
    source = {
        "u": vals.u,
        "grad_u": vals.grad_u,
        "P": vals.P,
        "curl_P": vals.curl_P,
        "sigma": st.sigma if st else None,
        "sigma_micro": st.sigma_micro if st else None,
        "m": st.m if st else None,
        "W": st.W if st else None,
    }
    Q = polar_rotation(points[pid]) if frame == "polar" else None
    cols = [pid.astype(float), points[pid, 0], points[pid, 1], cells.astype(float), regions.astype(float)]
    for q in quantities:
        v = source[q]
        if q in TENSORS:
            if Q is not None:
                v = Q @ v @ np.swapaxes(Q, -1, -2)
            cols += [v[:, 0, 0], v[:, 0, 1], v[:, 1, 0], v[:, 1, 1]]
        elif q in VECTORS:
            if Q is not None:
                v = np.einsum("nij,nj->ni", Q, v)
            cols += [v[:, 0], v[:, 1]]
        else:
            cols.append(v)
    return Table(columns, np.column_stack(cols), {"frame": frame})


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------
def export_csv(table: Table, path, metadata: dict | None = None) -> Path:
    """CSV with '# key: value' metadata lines and a header row."""
    path = Path(path)
    meta = {**table.metadata, **(metadata or {})}
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(table.columns))
    lines += [",".join(f"{v:.17g}" for v in row) for row in table.rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> Table:
    meta, rows, columns = {}, [], None
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("#"):
            key, _, val = ln[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif columns is None:
            columns = ln.split(",")
        elif ln:
            rows.append([float(v) for v in ln.split(",")])
    cols = columns or []
    return Table(cols, np.array(rows).reshape(-1, len(cols)), meta)


_VTK_CELL = {TRI: 5, QUAD: 9}


def _tensor3(T):
    out = np.zeros((len(T), 3, 3))
    out[:, :2, :2] = T
    return out


def export_vtk(solution: SolutionFields, path, title: str = "rmfem solution") -> Path:
    """Legacy ASCII unstructured grid.

    Point data: u at the mesh vertices.  Cell data: P, sigma, sigma_micro,
    m and W at each cell centroid, evaluated inside that cell (no averaging).
    """
    mesh = solution.mesh
    nv = np.array([NVERT[k] for k in mesh.cell_kinds])
    ref_centroid = {TRI: np.array([1 / 3, 1 / 3]), QUAD: np.zeros(2)}
    xi = np.array([ref_centroid[k] for k in mesh.cell_kinds])
    cells = np.arange(mesh.n_cells)
    vals = solution.evaluate(cells, xi)
    st = stress_state(vals, mesh.cell_regions, solution.materials)
    u_vert = solution.x[solution.dofmap.u_dofs(np.arange(mesh.n_nodes))]

    fmt = "{:.17g}".format
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_nodes} double")
    lines += [f"{fmt(x)} {fmt(y)} 0" for x, y in mesh.nodes]
    lines.append(f"CELLS {mesh.n_cells} {int(np.sum(nv + 1))}")
    for c in range(mesh.n_cells):
        lines.append(" ".join(str(v) for v in [nv[c], *mesh.cell_vertices(c)]))
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += [str(_VTK_CELL[k]) for k in mesh.cell_kinds]
    lines.append(f"POINT_DATA {mesh.n_nodes}")
    lines.append("VECTORS u double")
    lines += [f"{fmt(a)} {fmt(b)} 0" for a, b in u_vert]
    lines.append(f"CELL_DATA {mesh.n_cells}")
    lines += ["SCALARS region int 1", "LOOKUP_TABLE default"]
    lines += [str(int(r)) for r in mesh.cell_regions]
    tensors = {"grad_u": vals.grad_u, "sigma": st.sigma}
    if solution.has_p:
        tensors.update({"P": vals.P, "sigma_micro": st.sigma_micro})
    for name, T in tensors.items():
        lines.append(f"TENSORS {name} double")
        for t in _tensor3(T):
            lines += [" ".join(fmt(v) for v in row) for row in t]
    if solution.has_p:
        lines.append("VECTORS m double")  # (m13, m23) stored in the x/y slots
        lines += [f"{fmt(a)} {fmt(b)} 0" for a, b in st.m]
    lines += ["SCALARS W double 1", "LOOKUP_TABLE default"]
    lines += [fmt(w) for w in st.W]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path
