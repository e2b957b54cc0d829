"""Drivers for the two benchmark problems, the elasticity oracle and campaigns.

rect-bimaterial
    [0, 2] x [0, 1], material 1 for x < 1 and material 2 for x > 1.  u = 0 on
    the bottom, u = (0.01, 0.01) on the top, u = 0.01 y^2 (1, 1) on left and
    right; P . tau = grad(u_bar) . tau on the whole boundary.
annulus-shear
    r_i = 2 <= r <= r_o = 25, u = 0 on the inner circle, rigid rotation of
    the outer circle by arc length 0.01; P coupled on both circles.  Case B
    places material 2 in r < r_m = 10.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .assembly import (
    PAIRINGS,
    ConstraintSet,
    DofMap,
    Formulation,
    assemble,
    consistent_coupling,
    dirichlet_u,
    eliminate_constraints,
    pairing,
)
from .errors import ParameterError
from .materials import BVP1_MATERIALS, BVP2_MATERIALS, ElasticityTensor2D, IsotropicParams
from .mesh import Mesh2D, gen_annulus, gen_rectangle
from .postprocess import (
    SolutionFields,
    Table,
    energy_split,
    export_csv,
    export_vtk,
    sample_line,
    total_potential,
)
from .solver import DEFAULT_TOL, DIRECT, SolveReport, solve_spd

BVP_RECT, BVP_ANNULUS = "rect-bimaterial", "annulus-shear"
BVPS = (BVP_RECT, BVP_ANNULUS)
CASES = ("A", "B")
DEFAULT_LC_SWEEP = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)

RECT_LENGTH, RECT_HEIGHT, RECT_INTERFACE = 2.0, 1.0, 1.0
INSPECTION_Y = 0.5
R_OUT, R_IN, R_MID = 25.0, 2.0, 10.0
ROTATION = 0.01

RECT_LEVELS = 5  # nx = 4 * 2**level, ny = 2 * 2**level
ANNULUS_THETA = (24, 64, 192)
SAMPLE_QUANTITIES = ("u", "grad_u", "P", "sigma", "sigma_micro", "m", "W")
ELASTIC_QUANTITIES = ("u", "grad_u", "sigma", "W")

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BoundaryCondition:
    tag: str
    u_bar: Field
    grad_u_bar: Field


@dataclass(frozen=True)
class StudySpec:
    bvp: str = BVP_RECT
    pairing: str = "T2NT2"
    level: int = 0
    case: str = "A"
    lc: float | None = None  # None keeps the preset value
    lc_values: tuple = DEFAULT_LC_SWEEP
    out_dir: str | None = None
    identical_materials: bool = False  # rect only: material 1 on both sides
    solver: str = DIRECT
    tolerance: float = DEFAULT_TOL
    quadrature_degree: int | None = None
    n_samples: int = 201
    materials: dict | None = None  # region id -> IsotropicParams fields; replaces the preset
    seed: int = 0

    def __post_init__(self):
        if self.bvp not in BVPS:
            raise ParameterError(f"unknown bvp {self.bvp!r}; valid: {list(BVPS)}")
        pairing(self.pairing)
        if self.case not in CASES:
            raise ParameterError(f"unknown case {self.case!r}; valid: {list(CASES)}")
        n_levels = RECT_LEVELS if self.bvp == BVP_RECT else len(ANNULUS_THETA)
        if not 0 <= self.level < n_levels:
            raise ParameterError(f"level must be in [0, {n_levels - 1}] for {self.bvp}")
        if self.lc is not None and self.lc < 0:
            raise ParameterError("lc must be >= 0")
        if self.n_samples < 1:
            raise ParameterError("n_samples must be >= 1")
        if self.materials is not None:
            _parse_materials(self.materials)

    @property
    def cell_kind(self) -> str:
        return PAIRINGS[self.pairing][0]

    @property
    def formulation(self) -> Formulation:
        return pairing(self.pairing)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lc_values"] = list(self.lc_values)
        return d


# ---------------------------------------------------------------------------
# problem data
# ---------------------------------------------------------------------------
def _const(value):
    value = np.asarray(value, dtype=float)
    return lambda x: np.broadcast_to(value, (len(x), *value.shape)).copy()


def _side_u(x):
    v = 0.01 * x[:, 1] ** 2
    return np.column_stack([v, v])


def _side_grad(x):
    g = np.zeros((len(x), 2, 2))
    g[:, 0, 1] = g[:, 1, 1] = 0.02 * x[:, 1]
    return g


def rect_bcs() -> list[BoundaryCondition]:
    zero_u, zero_g = _const([0.0, 0.0]), _const(np.zeros((2, 2)))
    return [
        BoundaryCondition("bottom", zero_u, zero_g),
        BoundaryCondition("top", _const([0.01, 0.01]), zero_g),
        BoundaryCondition("left", _side_u, _side_grad),
        BoundaryCondition("right", _side_u, _side_grad),
    ]


def annulus_bcs(delta: float = ROTATION, r_o: float = R_OUT) -> list[BoundaryCondition]:
    w = delta / r_o
    G = np.array([[0.0, -w], [w, 0.0]])
    return [
        BoundaryCondition("inner", _const([0.0, 0.0]), _const(np.zeros((2, 2)))),
        BoundaryCondition("outer", lambda x: x @ G.T, _const(G)),
    ]


def annulus_resolution(level: int) -> tuple[int, int]:
    """(n_r, n_theta) with nearly square cells under geometric radial grading."""
    n_theta = ANNULUS_THETA[level]
    n_r = int(round(np.log(R_OUT / R_IN) / np.log(1.0 + 2.0 * np.pi / n_theta)))
    return n_r, n_theta


def build_mesh(spec: StudySpec) -> Mesh2D:
    kind = spec.cell_kind
    if spec.bvp == BVP_RECT:
        n = 2**spec.level
        return gen_rectangle(RECT_LENGTH, RECT_HEIGHT, 4 * n, 2 * n, kind, interface_x=RECT_INTERFACE)
    n_r, n_theta = annulus_resolution(spec.level)
    r_m = R_MID if spec.case == "B" else None
    return gen_annulus(R_OUT, R_IN, n_r, n_theta, kind, r_m=r_m, spacing="geometric")


def _parse_materials(blocks: dict) -> dict[int, IsotropicParams]:
    out = {}
    for region, params in blocks.items():
        try:
            out[int(region)] = params if isinstance(params, IsotropicParams) else IsotropicParams(**params)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"materials[{region!r}]: {exc}") from exc
    return out


def study_materials(spec: StudySpec) -> dict[int, IsotropicParams]:
    if spec.materials is not None:
        mats = _parse_materials(spec.materials)
    elif spec.bvp == BVP_RECT:
        mats = dict(BVP1_MATERIALS)
        if spec.identical_materials:
            mats[2] = mats[1]
    else:
        mats = {1: BVP2_MATERIALS[1]}
        if spec.case == "B":
            mats[2] = BVP2_MATERIALS[2]
    needed = {1, 2} if (spec.bvp == BVP_RECT or spec.case == "B") else {1}
    missing = needed - set(mats)
    if missing:
        raise ParameterError(f"materials missing for regions {sorted(missing)}")
    if spec.lc is not None:
        mats = {k: v.with_lc(spec.lc) for k, v in mats.items()}
    return mats


def study_bcs(spec: StudySpec) -> list[BoundaryCondition]:
    return rect_bcs() if spec.bvp == BVP_RECT else annulus_bcs()


# ---------------------------------------------------------------------------
# generic solve
# ---------------------------------------------------------------------------
@dataclass
class SolveResult:
    solution: SolutionFields
    report: SolveReport
    n_constraints: int
    timings: dict = field(default_factory=dict)


def build_constraints(dofmap: DofMap, bcs: Sequence[BoundaryCondition]) -> ConstraintSet:
    cs = ConstraintSet()
    for bc in bcs:
        cs.extend(dirichlet_u(dofmap, bc.tag, bc.u_bar))
        if not dofmap.formulation.elastic:
            cs.extend(consistent_coupling(dofmap, bc.tag, bc.grad_u_bar))
    return cs


def solve_problem(
    mesh: Mesh2D,
    formulation: Formulation,
    materials,
    bcs: Sequence[BoundaryCondition],
    method: str = DIRECT,
    tolerance: float = DEFAULT_TOL,
    degree: int | None = None,
) -> SolveResult:
    t0 = time.perf_counter()
    dm = DofMap(mesh, formulation)
    system = assemble(dm, materials, degree=degree)
    t1 = time.perf_counter()
    cs = build_constraints(dm, bcs)
    red = eliminate_constraints(system.K, system.f, cs)
    t2 = time.perf_counter()
    y, report = solve_spd(red.K, red.f, tolerance, method)
    x = red.recover(y)
    timings = {"assemble": t1 - t0, "constraints": t2 - t1, "solve": report.wall_time}
    return SolveResult(SolutionFields(dm, x, materials), report, len(cs), timings)


def linear_elasticity_solve(mesh: Mesh2D, tensor, bcs: Sequence[BoundaryCondition], **kw) -> SolveResult:
    """Quadratic-Lagrange displacement solve; ``tensor`` is one tensor or a region map."""
    mats = tensor if isinstance(tensor, dict) else {int(r): tensor for r in np.unique(mesh.cell_regions)}
    for r, t in mats.items():
        if not isinstance(t, ElasticityTensor2D):
            raise ParameterError(f"region {r}: elasticity oracle needs an ElasticityTensor2D")
    return solve_problem(mesh, Formulation(None, 0), mats, bcs, **kw)


# ---------------------------------------------------------------------------
# sampling lines
# ---------------------------------------------------------------------------
def inspection_points(n: int = 201) -> np.ndarray:
    """y = 0.5 across the rectangle, the interface x = 1 always included."""
    x = np.union1d(np.linspace(0.0, RECT_LENGTH, n), [RECT_INTERFACE])
    return np.column_stack([x, np.full_like(x, INSPECTION_Y)])


def ray_points(mesh_theta: int, n: int = 201, r_m: float | None = None, theta: float = 0.0) -> np.ndarray:
    """Points along a ray, clustered geometrically towards the hole.

    Rings are polygons, so the ray through a chord midpoint meets ring r at
    distance r cos(pi / n_theta); those crossing points bound the samples and
    the interface crossing is included when ``r_m`` is given.
    """
    c = np.cos(np.pi / mesh_theta)
    r = R_IN * (R_OUT / R_IN) ** np.linspace(0.0, 1.0, n)
    if r_m is not None:
        r = np.union1d(r, [r_m])
    d = c * r
    return np.column_stack([d * np.cos(theta), d * np.sin(theta)])


# ---------------------------------------------------------------------------
# turn-key runs
# ---------------------------------------------------------------------------
@dataclass
class StudyResult:
    spec: StudySpec
    result: SolveResult
    samples: Table
    potential: float
    energies: dict
    files: dict = field(default_factory=dict)
    config: dict | None = None  # echoed verbatim into the summary when given

    @property
    def solution(self) -> SolutionFields:
        return self.result.solution

    def summary(self) -> dict:
        dm = self.solution.dofmap
        return {
            "config": self.config if self.config is not None else self.spec.to_dict(),
            "potential": self.potential,
            "energies": self.energies,
            "dofs": {**dm.describe(), "n_constraints": self.result.n_constraints},
            "solve": self.result.report.to_dict(),
            "files": {k: str(v) for k, v in self.files.items()},
        }


def _metadata(spec: StudySpec, mesh: Mesh2D, materials) -> dict:
    lcs = sorted({m.Lc for m in materials.values() if isinstance(m, IsotropicParams)})
    return {
        "bvp": spec.bvp,
        "case": spec.case,
        "element": spec.pairing,
        "level": spec.level,
        "cells": mesh.n_cells,
        "Lc": ",".join(repr(v) for v in lcs),
    }


def _run(spec: StudySpec, points: np.ndarray, frame: str, write_vtk: bool = True, config: dict | None = None) -> StudyResult:
    mesh = build_mesh(spec)
    mats = study_materials(spec)
    res = solve_problem(
        mesh, spec.formulation, mats, study_bcs(spec), spec.solver, spec.tolerance, spec.quadrature_degree
    )
    quantities = ELASTIC_QUANTITIES if spec.formulation.elastic else SAMPLE_QUANTITIES
    samples = sample_line(res.solution, points, quantities, frame)
    samples.metadata.update(_metadata(spec, mesh, mats))
    energies = energy_split(res.solution, spec.quadrature_degree)
    out = StudyResult(spec, res, samples, total_potential(res.solution, degree=spec.quadrature_degree), energies, config=config)
    if spec.out_dir is not None:
        d = Path(spec.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        name = "inspection.csv" if spec.bvp == BVP_RECT else "radial.csv"
        out.files["samples"] = export_csv(samples, d / name)
        if write_vtk:
            out.files["vtk"] = export_vtk(res.solution, d / "solution.vtk", f"{spec.bvp} {spec.pairing}")
        out.files["summary"] = d / "summary.json"
        write_summary(out.summary(), out.files["summary"])
    return out


def run_bvp1(spec: StudySpec, write_vtk: bool = True, config: dict | None = None) -> StudyResult:
    """Bimaterial rectangle; samples along y = 0.5."""
    if spec.bvp != BVP_RECT:
        spec = replace(spec, bvp=BVP_RECT)
    return _run(spec, inspection_points(spec.n_samples), "cartesian", write_vtk, config)


def run_bvp2(spec: StudySpec, write_vtk: bool = True, theta: float = 0.0, config: dict | None = None) -> StudyResult:
    """Annulus under rotation; polar samples along the ray at angle ``theta``."""
    if spec.bvp != BVP_ANNULUS:
        spec = replace(spec, bvp=BVP_ANNULUS)
    _, n_theta = annulus_resolution(spec.level)
    r_m = R_MID if spec.case == "B" else None
    return _run(spec, ray_points(n_theta, spec.n_samples, r_m, theta), "polar", write_vtk, config)


def run_study(spec: StudySpec, write_vtk: bool = True, config: dict | None = None) -> StudyResult:
    if spec.bvp == BVP_RECT:
        return run_bvp1(spec, write_vtk, config)
    return run_bvp2(spec, write_vtk, config=config)


def write_summary(summary: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------
KIND_SWEEP, KIND_MACRO, KIND_MICRO = 0, 1, 2
SWEEP_COLUMNS = ["kind", "Lc", "Pi", "elastic", "micro", "coupling", "curvature"]


@dataclass
class SweepResult:
    table: Table
    pi_macro: float
    pi_micro: float

    @property
    def lc(self) -> np.ndarray:
        rows = self.table.column("kind") == KIND_SWEEP
        return self.table.column("Lc")[rows]

    @property
    def pi(self) -> np.ndarray:
        rows = self.table.column("kind") == KIND_SWEEP
        return self.table.column("Pi")[rows]

    def monotone(self, rtol: float = 1e-9) -> bool:
        p = self.pi
        return bool(np.all(np.diff(p) >= -rtol * np.abs(p[1:])))

    def sandwiched(self, rtol: float = 1e-9) -> bool:
        p = self.pi
        return bool(np.all(p >= self.pi_macro * (1 - rtol)) and np.all(p <= self.pi_micro * (1 + rtol)))


def elasticity_oracles(spec: StudySpec) -> tuple[float, float]:
    """(Pi_macro, Pi_micro) from quadratic elasticity with C_macro and C_micro."""
    mesh = build_mesh(spec)
    mats = study_materials(spec)
    bcs = study_bcs(spec)
    out = []
    for attr in ("c_macro", "c_micro"):
        tensors = {r: getattr(m, attr) for r, m in mats.items()}
        res = linear_elasticity_solve(mesh, tensors, bcs, method=spec.solver, tolerance=spec.tolerance)
        out.append(total_potential(res.solution))
    return out[0], out[1]


def lc_sweep(spec: StudySpec) -> SweepResult:
    """Pi and energy split over ``spec.lc_values`` plus the two oracle rows."""
    values = list(spec.lc_values)
    if not values:
        raise ParameterError("empty Lc sweep")
    mesh = build_mesh(spec)
    bcs = study_bcs(spec)
    rows = []
    for lc in values:
        mats = study_materials(replace(spec, lc=float(lc)))
        res = solve_problem(mesh, spec.formulation, mats, bcs, spec.solver, spec.tolerance, spec.quadrature_degree)
        e = energy_split(res.solution, spec.quadrature_degree)
        rows.append([KIND_SWEEP, float(lc), sum(e.values()), e["elastic"], e["micro"], e["coupling"], e["curvature"]])
    pi_macro, pi_micro = elasticity_oracles(spec)
    nan = float("nan")
    rows.append([KIND_MACRO, nan, pi_macro, nan, nan, nan, nan])
    rows.append([KIND_MICRO, nan, pi_micro, nan, nan, nan, nan])
    meta = {"bvp": spec.bvp, "case": spec.case, "element": spec.pairing, "level": spec.level,
            "cells": mesh.n_cells, "kind": "0 sweep, 1 C_macro oracle, 2 C_micro oracle"}
    return SweepResult(Table(list(SWEEP_COLUMNS), np.array(rows, dtype=float), meta), pi_macro, pi_micro)


def convergence_points(n: int = 400) -> np.ndarray:
    """Inspection-line points that never coincide with a vertical grid line."""
    x = (np.arange(n) + 0.3) * RECT_LENGTH / n
    return np.column_stack([x, np.full_like(x, INSPECTION_Y)])


def sample_component(solution: SolutionFields, points, quantity: str = "P", component: str = "21") -> np.ndarray:
    """One value per point; points on shared edges use the mean of the one-sided values."""
    t = sample_line(solution, points, [quantity])
    v = t.column(f"{quantity}_{component}")
    pid = t.column("point").astype(np.int64)
    return np.bincount(pid, weights=v, minlength=len(points)) / np.bincount(pid, minlength=len(points))


@dataclass
class ConvergenceResult:
    table: Table  # one row per (pairing, level pair)
    samples: dict  # pairing -> list of sampled arrays per level

    def differences(self, pairing_name: str) -> np.ndarray:
        names = self.table.metadata["pairings"].split(",")
        idx = names.index(pairing_name)
        rows = self.table.column("pairing") == idx
        return self.table.column("rel_l2_diff")[rows]


def mesh_convergence(spec: StudySpec, levels: Sequence[int], pairings: Sequence[str] | None = None) -> ConvergenceResult:
    """Relative L2 differences of P21 on the inspection line between levels."""
    levels = list(levels)
    if len(levels) < 2:
        raise ParameterError("mesh convergence needs at least two levels")
    pairings = list(pairings or [spec.pairing])
    pts = convergence_points() if spec.bvp == BVP_RECT else ray_points(ANNULUS_THETA[0], 200)
    quantity, comp = ("P", "21") if spec.bvp == BVP_RECT else ("P", "12")
    rows, samples = [], {}
    for ip, name in enumerate(pairings):
        vals = []
        for lv in levels:
            s = replace(spec, pairing=name, level=lv, out_dir=None)
            res = solve_problem(build_mesh(s), s.formulation, study_materials(s), study_bcs(s), s.solver, s.tolerance)
            vals.append(sample_component(res.solution, pts, quantity, comp))
        samples[name] = vals
        for a, b, la, lb in zip(vals[:-1], vals[1:], levels[:-1], levels[1:]):
            rows.append([ip, la, lb, float(np.linalg.norm(b - a) / np.linalg.norm(b))])
    meta = {"bvp": spec.bvp, "quantity": f"{quantity}_{comp}", "pairings": ",".join(pairings)}
    return ConvergenceResult(Table(["pairing", "level_a", "level_b", "rel_l2_diff"], np.array(rows), meta), samples)


def transition_width(x, values, reference, jump: float, threshold: float = 0.1, window: float = 0.5) -> float:
    """Largest |x - 1| within ``window`` where values deviate from the reference by > threshold * jump."""
    x = np.asarray(x)
    near = np.abs(x - RECT_INTERFACE) < window
    bad = near & (np.abs(np.asarray(values) - np.asarray(reference)) > threshold * abs(jump))
    return float(np.max(np.abs(x[bad] - RECT_INTERFACE))) if np.any(bad) else 0.0


def interface_jump(solution: SolutionFields, quantity: str = "P", component: str = "21", delta: float = 1e-9) -> float:
    """One-sided jump across x = 1 on the inspection line (right minus left)."""
    pts = np.array([[RECT_INTERFACE - delta, INSPECTION_Y], [RECT_INTERFACE + delta, INSPECTION_Y]])
    v = sample_component(solution, pts, quantity, component)
    return float(v[1] - v[0])


def check_pairing_for_mesh(name: str, mesh: Mesh2D) -> None:
    """Named pairings fix the cell kind (the elasticity oracle accepts any)."""
    pairing(name)
    kind = PAIRINGS[name][0]
    if name != "T2-elastic" and set(mesh.cell_kinds) != {kind}:
        raise ParameterError(f"{name} needs a mesh of {kind} cells only")
