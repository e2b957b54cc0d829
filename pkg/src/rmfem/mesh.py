"""Two-dimensional triangle/quadrilateral meshes with a global edge table.

Edges carry a single global tangent chosen by the positive-x rule (positive-y
when the edge is vertical).  Every cell stores, per local edge, the sign that
maps its local reference tangent onto that global tangent, so all tangential
degrees of freedom are consistently oriented by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError, ParameterError, TopologyError

TRI, QUAD = "tri", "quad"
NVERT = {TRI: 3, QUAD: 4}

# Local edges as (start, end) vertex pairs.  The direction matches the
# reference-element tangents t_i of the Nedelec bases:
#   tri : e1 = V3->V2 (t=(1,-1)/sqrt2), e2 = V1->V3 (t=(0,1)), e3 = V1->V2 (t=(1,0))
#   quad: e1 = V1->V2, e2 = V2->V3, e3 = V4->V3, e4 = V1->V4
LOCAL_EDGES = {
    TRI: ((2, 1), (0, 2), (0, 1)),
    QUAD: ((0, 1), (1, 2), (3, 2), (0, 3)),
}

ORIENTATION_TOL = 1e-12


def global_tangent(direction: np.ndarray, tol: float = ORIENTATION_TOL) -> np.ndarray:
    """Unit tangent(s) pointing towards positive x (positive y if vertical).

    ``direction`` has shape (..., 2); it need not be normalized.
    """
    d = np.asarray(direction, dtype=float)
    length = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(length == 0.0):
        raise GeometryError("zero-length edge has no tangent")
    t = d / length
    sign = np.where(np.abs(t[..., 0]) > tol, np.sign(t[..., 0]), np.sign(t[..., 1]))
    return t * sign[..., None]


@dataclass(frozen=True)
class EdgeRecord:
    """Read-only view of one mesh edge."""

    endpoints: tuple[int, int]
    tangent: np.ndarray
    length: float
    adjacency: tuple[tuple[int, int, int], ...]  # (cell, local edge, local sense)
    tag: str | None = None


@dataclass(frozen=True, eq=False)
class EdgeTopology:
    edge_nodes: np.ndarray  # (E, 2), sorted ascending
    edge_cells: np.ndarray  # (E, 2), -1 where absent
    edge_local: np.ndarray  # (E, 2) local edge index in the adjacent cell
    cell_edges: np.ndarray  # (M, 4), -1 padded for triangles


def build_edge_topology(cell_kinds: Sequence[str], cell_nodes: Sequence[Sequence[int]]) -> EdgeTopology:
    """Enumerate the unique edges of a cell list.

    Edge ids follow the lexicographic order of their (sorted) endpoint ids.
    Raises :class:`TopologyError` for duplicated cells or for edges shared by
    more than two cells.
    """
    seen = set()
    pairs, owners, locals_ = [], [], []
    for c, (kind, nodes) in enumerate(zip(cell_kinds, cell_nodes)):
        key = tuple(sorted(nodes))
        if key in seen:
            raise TopologyError(f"duplicate cell {c} with nodes {list(nodes)}")
        seen.add(key)
        for i, (a, b) in enumerate(LOCAL_EDGES[kind]):
            na, nb = nodes[a], nodes[b]
            if na == nb:
                raise TopologyError(f"cell {c} has a collapsed edge at node {na}")
            pairs.append((min(na, nb), max(na, nb)))
            owners.append(c)
            locals_.append(i)
    if not pairs:
        raise TopologyError("empty cell list")
    pairs_arr = np.asarray(pairs, dtype=np.int64)
    edge_nodes, inverse, counts = np.unique(pairs_arr, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        bad = int(np.flatnonzero(counts > 2)[0])
        raise TopologyError(
            f"non-manifold edge {tuple(edge_nodes[bad])} shared by {counts[bad]} cells"
        )
    n_edges = len(edge_nodes)
    edge_cells = -np.ones((n_edges, 2), dtype=np.int64)
    edge_local = -np.ones((n_edges, 2), dtype=np.int64)
    cell_edges = -np.ones((len(cell_nodes), 4), dtype=np.int64)
    for k, e in enumerate(inverse):
        slot = 0 if edge_cells[e, 0] < 0 else 1
        edge_cells[e, slot] = owners[k]
        edge_local[e, slot] = locals_[k]
        cell_edges[owners[k], locals_[k]] = e
    return EdgeTopology(edge_nodes, edge_cells, edge_local, cell_edges)


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Immutable mixed triangle/quadrilateral mesh.

    Use :meth:`from_cells` to build one; it validates orientation and computes
    the edge table once.
    """

    nodes: np.ndarray
    cell_kinds: tuple[str, ...]
    cell_nodes: np.ndarray  # (M, 4), -1 padded
    cell_regions: np.ndarray
    edge_nodes: np.ndarray
    edge_cells: np.ndarray
    edge_local: np.ndarray
    edge_tangent: np.ndarray
    edge_length: np.ndarray
    cell_edges: np.ndarray
    cell_edge_sense: np.ndarray  # (M, 4) +-1, 0 padded
    boundary_tags: dict = field(default_factory=dict)  # edge id -> tag

    @classmethod
    def from_cells(
        cls,
        nodes,
        cells: Iterable[tuple[str, Sequence[int], int]],
        boundary_tags: dict[tuple[int, int], str] | None = None,
    ) -> "Mesh2D":
        nodes = np.ascontiguousarray(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ParameterError("nodes must have shape (N, 2)")
        kinds, conn, regions = [], [], []
        for kind, cn, region in cells:
            if kind not in NVERT:
                raise ParameterError(f"unknown cell kind {kind!r}")
            cn = [int(v) for v in cn]
            if len(cn) != NVERT[kind]:
                raise ParameterError(f"{kind} cell needs {NVERT[kind]} nodes, got {len(cn)}")
            if min(cn) < 0 or max(cn) >= len(nodes):
                raise TopologyError(f"cell references missing node in {cn}")
            kinds.append(kind)
            conn.append(cn)
            regions.append(int(region))
        topo = build_edge_topology(kinds, conn)
        cell_nodes = -np.ones((len(conn), 4), dtype=np.int64)
        for c, cn in enumerate(conn):
            cell_nodes[c, : len(cn)] = cn

        for c, (kind, cn) in enumerate(zip(kinds, conn)):
            if _signed_area(nodes[cn]) <= 0.0:
                raise GeometryError(f"cell {c} is not counterclockwise (nodes {cn})")

        d = nodes[topo.edge_nodes[:, 1]] - nodes[topo.edge_nodes[:, 0]]
        length = np.linalg.norm(d, axis=1)
        tangent = global_tangent(d)
        sense = np.zeros((len(conn), 4), dtype=np.int64)
        for c, (kind, cn) in enumerate(zip(kinds, conn)):
            for i, (a, b) in enumerate(LOCAL_EDGES[kind]):
                e = topo.cell_edges[c, i]
                local = nodes[cn[b]] - nodes[cn[a]]
                sense[c, i] = 1 if float(local @ tangent[e]) > 0.0 else -1

        tags = {}
        if boundary_tags:
            index = {tuple(p): e for e, p in enumerate(topo.edge_nodes.tolist())}
            for (a, b), tag in boundary_tags.items():
                key = (min(a, b), max(a, b))
                if key not in index:
                    raise TopologyError(f"tagged edge {key} is not a mesh edge")
                e = index[key]
                if topo.edge_cells[e, 1] >= 0:
                    raise TopologyError(f"tagged edge {key} is interior")
                tags[e] = str(tag)
        return cls(
            nodes=nodes,
            cell_kinds=tuple(kinds),
            cell_nodes=cell_nodes,
            cell_regions=np.asarray(regions, dtype=np.int64),
            edge_nodes=topo.edge_nodes,
            edge_cells=topo.edge_cells,
            edge_local=topo.edge_local,
            edge_tangent=tangent,
            edge_length=length,
            cell_edges=topo.cell_edges,
            cell_edge_sense=sense,
            boundary_tags=dict(sorted(tags.items())),
        )

    # -- sizes -------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cell_kinds)

    @property
    def n_edges(self) -> int:
        return len(self.edge_nodes)

    # -- queries -----------------------------------------------------------
    def cells_of_kind(self, kind: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.cell_kinds) == kind)

    def cell_vertices(self, c: int) -> np.ndarray:
        n = NVERT[self.cell_kinds[c]]
        return self.cell_nodes[c, :n]

    def edge(self, e: int) -> EdgeRecord:
        adj = []
        for slot in range(2):
            c = int(self.edge_cells[e, slot])
            if c >= 0:
                i = int(self.edge_local[e, slot])
                adj.append((c, i, int(self.cell_edge_sense[c, i])))
        return EdgeRecord(
            endpoints=(int(self.edge_nodes[e, 0]), int(self.edge_nodes[e, 1])),
            tangent=self.edge_tangent[e].copy(),
            length=float(self.edge_length[e]),
            adjacency=tuple(adj),
            tag=self.boundary_tags.get(e),
        )

    def is_boundary_edge(self) -> np.ndarray:
        return self.edge_cells[:, 1] < 0

    @property
    def tags(self) -> list[str]:
        return sorted(set(self.boundary_tags.values()))

    def tagged_edges(self, tag: str) -> np.ndarray:
        edges = [e for e, t in self.boundary_tags.items() if t == tag]
        if not edges:
            raise ParameterError(f"unknown boundary tag {tag!r}; known: {self.tags}")
        return np.asarray(edges, dtype=np.int64)

    def tagged_nodes(self, tag: str) -> np.ndarray:
        return np.unique(self.edge_nodes[self.tagged_edges(tag)])

    def cell_areas(self) -> np.ndarray:
        return np.array([_signed_area(self.nodes[self.cell_vertices(c)]) for c in range(self.n_cells)])

    def centroids(self) -> np.ndarray:
        out = np.empty((self.n_cells, 2))
        for c in range(self.n_cells):
            out[c] = self.nodes[self.cell_vertices(c)].mean(axis=0)
        return out

    def with_regions(self, regions) -> "Mesh2D":
        """Copy of the mesh with a new region id per cell."""
        regions = np.asarray(regions, dtype=np.int64)
        if regions.shape != (self.n_cells,):
            raise ParameterError("one region id per cell required")
        return _replace(self, cell_regions=regions)


def _replace(mesh: Mesh2D, **changes) -> Mesh2D:
    from dataclasses import replace

    return replace(mesh, **changes)


def _signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _split_quad(q: Sequence[int]) -> list[list[int]]:
    """Split a CCW quad along the diagonal starting at its lowest node id."""
    k = int(np.argmin(q))
    a, b, c, d = (q[(k + i) % 4] for i in range(4))
    return [[a, b, c], [a, c, d]]


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------
def gen_rectangle(
    length: float,
    height: float,
    nx: int,
    ny: int,
    kind: str = QUAD,
    interface_x: float | None = None,
) -> Mesh2D:
    """Structured rectangle [0, length] x [0, height].

    Cells left of ``interface_x`` get region 1, cells right of it region 2.
    Boundary tags: ``bottom``, ``right``, ``top``, ``left``.
    """
    if nx < 1 or ny < 1:
        raise ParameterError("nx and ny must be >= 1")
    if length <= 0 or height <= 0:
        raise ParameterError("rectangle dimensions must be positive")
    if kind not in NVERT:
        raise ParameterError(f"unknown cell kind {kind!r}")
    xs = np.linspace(0.0, length, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    if interface_x is not None:
        if not 0.0 < interface_x < length:
            raise ParameterError("interface_x must lie strictly inside (0, length)")
        hit = np.flatnonzero(np.abs(xs - interface_x) <= 1e-12 * max(1.0, length))
        if hit.size == 0:
            raise ParameterError(f"grid with nx={nx} does not resolve interface x={interface_x}")
        xs[hit[0]] = interface_x
    X, Y = np.meshgrid(xs, ys)  # row j = y_j
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    cells = []
    for j in range(ny):
        for i in range(nx):
            q = [nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)]
            xc = 0.5 * (xs[i] + xs[i + 1])
            region = 1 if interface_x is None or xc < interface_x else 2
            if kind == QUAD:
                cells.append((QUAD, q, region))
            else:
                cells.extend((TRI, t, region) for t in _split_quad(q))
    tags = {}
    for i in range(nx):
        tags[(nid(i, 0), nid(i + 1, 0))] = "bottom"
        tags[(nid(i, ny), nid(i + 1, ny))] = "top"
    for j in range(ny):
        tags[(nid(0, j), nid(0, j + 1))] = "left"
        tags[(nid(nx, j), nid(nx, j + 1))] = "right"
    return Mesh2D.from_cells(nodes, cells, tags)


def radial_levels(r_in: float, r_out: float, n: int, spacing: str) -> np.ndarray:
    if spacing == "uniform":
        return np.linspace(r_in, r_out, n + 1)
    if spacing == "geometric":
        return r_in * (r_out / r_in) ** (np.arange(n + 1) / n)
    raise ParameterError(f"unknown radial spacing {spacing!r}")


def gen_annulus(
    r_o: float,
    r_i: float,
    n_r: int,
    n_theta: int,
    kind: str = QUAD,
    r_m: float | None = None,
    spacing: str = "uniform",
    theta0: float | None = None,
) -> Mesh2D:
    """Structured polar mesh of the annulus r_i <= r <= r_o.

    Circles are replaced by regular polygons with ``n_theta`` vertices at
    angles ``theta0 + 2 pi k / n_theta``.  The default puts vertices at odd
    multiples of pi / n_theta, so the positive x-axis crosses every ring at a
    chord midpoint, and starts the numbering near theta = pi: the one sector
    whose diagonal split differs (the wrap-around sector) then lies opposite
    the x-axis sampling ray.  With ``r_m``
    the radial lines include r_m, cells with r < r_m get region 2 and the rest
    region 1; ``n_r`` is then split between both zones by logarithmic length.
    Boundary tags: ``inner``, ``outer``.
    """
    if not (r_o > 0 and r_i > 0 and r_o > r_i):
        raise ParameterError(f"degenerate radii r_i={r_i}, r_o={r_o}")
    if r_m is not None and not (r_i < r_m < r_o):
        raise ParameterError(f"r_m={r_m} must lie strictly between r_i and r_o")
    if n_r < 1 or n_theta < 3:
        raise ParameterError("need n_r >= 1 and n_theta >= 3")
    if r_m is not None and n_r < 2:
        raise ParameterError("two material zones need n_r >= 2")
    if kind not in NVERT:
        raise ParameterError(f"unknown cell kind {kind!r}")
    if theta0 is None:
        theta0 = np.pi / n_theta - 2.0 * np.pi * (n_theta // 2) / n_theta

    if r_m is None:
        radii = radial_levels(r_i, r_o, n_r, spacing)
    else:
        w_in = np.log(r_m / r_i) if spacing == "geometric" else r_m - r_i
        w_out = np.log(r_o / r_m) if spacing == "geometric" else r_o - r_m
        n_in = int(np.clip(round(n_r * w_in / (w_in + w_out)), 1, n_r - 1))
        radii = np.concatenate(
            [radial_levels(r_i, r_m, n_in, spacing), radial_levels(r_m, r_o, n_r - n_in, spacing)[1:]]
        )
    theta = theta0 + 2.0 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(radii, theta, indexing="ij")
    nodes = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    nr = len(radii) - 1

    def nid(j, k):
        return j * n_theta + (k % n_theta)

    cells = []
    for j in range(nr):
        r_mid = 0.5 * (radii[j] + radii[j + 1])
        region = 2 if (r_m is not None and r_mid < r_m) else 1
        for k in range(n_theta):
            q = [nid(j, k), nid(j + 1, k), nid(j + 1, k + 1), nid(j, k + 1)]
            if kind == QUAD:
                cells.append((QUAD, q, region))
            else:
                cells.extend((TRI, t, region) for t in _split_quad(q))
    tags = {}
    for k in range(n_theta):
        tags[(nid(0, k), nid(0, k + 1))] = "inner"
        tags[(nid(nr, k), nid(nr, k + 1))] = "outer"
    return Mesh2D.from_cells(nodes, cells, tags)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------
MESH_HEADER = "mm-mesh v1"


def write_mesh(mesh: Mesh2D, path) -> None:
    lines = [MESH_HEADER, f"nodes {mesh.n_nodes}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines.append(f"cells {mesh.n_cells}")
    for c in range(mesh.n_cells):
        vs = " ".join(str(v) for v in mesh.cell_vertices(c))
        lines.append(f"{mesh.cell_kinds[c]} {mesh.cell_regions[c]} {vs}")
    lines.append(f"tags {len(mesh.boundary_tags)}")
    for e, tag in mesh.boundary_tags.items():
        a, b = mesh.edge_nodes[e]
        lines.append(f"{a} {b} {tag}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh2D:
    rows = [ln.strip() for ln in Path(path).read_text().splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows or rows[0] != MESH_HEADER:
        raise ParameterError(f"{path}: missing '{MESH_HEADER}' header")
    pos = 1

    def section(name):
        nonlocal pos
        parts = rows[pos].split()
        if len(parts) != 2 or parts[0] != name:
            raise ParameterError(f"{path}: expected '{name} <count>' at line {pos + 1}")
        pos += 1
        count = int(parts[1])
        block = rows[pos : pos + count]
        if len(block) != count:
            raise ParameterError(f"{path}: section '{name}' truncated")
        pos += count
        return [ln.split() for ln in block]

    nodes = [[float(a), float(b)] for a, b in section("nodes")]
    cells = [(p[0], [int(v) for v in p[2:]], int(p[1])) for p in section("cells")]
    tags = {(int(p[0]), int(p[1])): p[2] for p in section("tags")}
    return Mesh2D.from_cells(np.array(nodes), cells, tags)
