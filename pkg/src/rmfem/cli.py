"""Command-line entry point.

Commands: solve, sweep-lc, converge, verify-elements, export-mesh.

Exit codes
    0  success
    1  element verification failed
    2  configuration or usage error
    3  solver failure (singular/indefinite system, no convergence, constraints)
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .errors import ConfigError, ConstraintError, ParameterError, RMFemError, SolverError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run config or bundled preset name")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
    common.add_argument("--threads", metavar="N", type=int, help="BLAS/OpenMP thread count")
    common.add_argument("--strict-tol", action="store_true", help="verification tolerance 1e-15")

    p = _Parser(prog="rmfem", description="Relaxed micromorphic finite element solver.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve one boundary-value problem")
    sub.add_parser("sweep-lc", parents=[common], help="characteristic-length sweep with oracles")
    sub.add_parser("converge", parents=[common], help="mesh convergence of sampled P")
    v = sub.add_parser("verify-elements", parents=[common], help="Nedelec element verification suite")
    v.add_argument("--negate-basis", metavar="ELEM:I", action="append", default=[],
                   help="fault injection: flip the sign of reference basis I (1-based) of ELEM")
    v.add_argument("--cells", type=int, default=50, help="random distorted cells per element")
    sub.add_parser("export-mesh", parents=[common], help="write the configured mesh (mm-mesh v1)")
    sub.add_parser("presets", help="list bundled config presets")
    return p


def _out_dir(args, cfg) -> Path:
    d = args.out or cfg["out_dir"] or "."
    return Path(d)


def _load(args):
    if not args.config:
        raise ConfigError("--config PATH is required for this command")
    return cfgmod.load(args.config)


def _echo(cfg, out: Path) -> dict:
    d = cfg.to_dict()
    d["out_dir"] = str(out)
    return d


def cmd_solve(args) -> int:
    from .studies import run_study

    cfg = _load(args)
    out = _out_dir(args, cfg)
    spec = cfg.study_spec(out_dir=str(out))
    res = run_study(spec, write_vtk=cfg["write_vtk"], config=_echo(cfg, out))
    print(f"{spec.bvp} {spec.pairing} level {spec.level}: Pi = {res.potential:.12g}, "
          f"{res.result.report.n_unknowns} unknowns, residual {res.result.report.residual:.2e}")
    for k, v in res.files.items():
        print(f"  {k}: {v}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .postprocess import export_csv
    from .studies import lc_sweep, write_summary

    cfg = _load(args)
    if not cfg["lc_values"]:
        raise ConfigError("field 'lc_values': empty sweep list")
    out = _out_dir(args, cfg)
    spec = cfg.study_spec(out_dir=None)
    sweep = lc_sweep(spec)
    out.mkdir(parents=True, exist_ok=True)
    export_csv(sweep.table, out / "sweep.csv")
    checks = {"monotone": sweep.monotone(), "sandwiched": sweep.sandwiched()}
    write_summary({"config": _echo(cfg, out), "pi_macro": sweep.pi_macro, "pi_micro": sweep.pi_micro,
                   "lc": sweep.lc, "pi": sweep.pi, "checks": checks}, out / "summary.json")
    print(f"{'Lc':>12} {'Pi':>20}")
    for lc, pi in zip(sweep.lc, sweep.pi):
        print(f"{lc:12.4g} {pi:20.12g}")
    print(f"{'C_macro':>12} {sweep.pi_macro:20.12g}\n{'C_micro':>12} {sweep.pi_micro:20.12g}")
    for k, v in checks.items():
        print(f"{k}: {'PASS' if v else 'FAIL'}")
    return EXIT_OK


def cmd_converge(args) -> int:
    import numpy as np

    from .postprocess import export_csv
    from .studies import mesh_convergence, write_summary

    cfg = _load(args)
    levels = cfg["levels"]
    if len(levels) < 2:
        raise ConfigError("field 'levels': at least two mesh levels are required")
    out = _out_dir(args, cfg)
    spec = cfg.study_spec(out_dir=None)
    res = mesh_convergence(spec, levels, cfg["pairings"])
    out.mkdir(parents=True, exist_ok=True)
    export_csv(res.table, out / "convergence.csv")
    names = res.table.metadata["pairings"].split(",")
    report = {}
    for name in names:
        d = res.differences(name)
        report[name] = {"differences": d, "decreasing": bool(np.all(np.diff(d) < 0))}
        print(f"{name:>10}: " + " ".join(f"{x:.3e}" for x in d) + ("  decreasing" if report[name]["decreasing"] else ""))
    write_summary({"config": _echo(cfg, out), "levels": levels, "pairings": report}, out / "summary.json")
    return EXIT_OK


def _parse_negations(items) -> dict:
    from .verification import ELEMENTS

    out = {}
    for item in items:
        name, _, idx = item.partition(":")
        if name not in ELEMENTS or not idx.isdigit() or int(idx) < 1:
            raise ConfigError(f"--negate-basis expects ELEM:I with ELEM in {list(ELEMENTS)}, got {item!r}")
        out[name] = int(idx) - 1
    return out


def cmd_verify(args) -> int:
    from .verification import STRICT_TOL, format_matrix, verify_elements

    seed = cfgmod.load(args.config)["seed"] if args.config else 0
    tol = STRICT_TOL if args.strict_tol else None
    results = verify_elements(tol=tol, negate=_parse_negations(args.negate_basis), n_cells=args.cells, seed=seed)
    print(format_matrix(results, strict=args.strict_tol))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_export_mesh(args) -> int:
    from .mesh import write_mesh
    from .studies import build_mesh

    cfg = _load(args)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    mesh = build_mesh(cfg.study_spec())
    path = out / "mesh.txt"
    write_mesh(mesh, path)
    print(f"{mesh.n_cells} cells, {mesh.n_nodes} nodes -> {path}")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in cfgmod.preset_names():
        print(name)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep-lc": cmd_sweep,
    "converge": cmd_converge,
    "verify-elements": cmd_verify,
    "export-mesh": cmd_export_mesh,
    "presets": cmd_presets,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            print("rmfem: error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        # only effective before numpy is first imported in this process
        for var in THREAD_VARS:
            os.environ[var] = str(args.threads)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"rmfem: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ConstraintError) as exc:
        print(f"rmfem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"rmfem: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RMFemError as exc:
        print(f"rmfem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
