"""Batch front-end: scenario configs in, solved graphs and check reports out.

Usage:
    aniso solve  --config scenario.json --out outdir
    aniso verify --config scenario.json --out outdir
    aniso sweep  --config scenario.json --axis theta --values 0.5,1.0,1.5 --out outdir

Scenario files are plain JSON: an integrand descriptor, a domain descriptor,
a Dirichlet-data spec, solver settings, and a list of checks with optional
parameter overrides.  Reports are JSON lines plus tidy CSV; all numbers are
written with 17 significant digits and no timestamps, so repeated runs of
the same scenario and seed are byte-identical (timestamps go to a sidecar
log).  Exit codes: 0 all pass/fail checks passed, 2 malformed config,
3 solver non-convergence, 1 check failures.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import verify
from .boundary_data import evaluate_data_spec
from .domain import HalfDomain, Mesh, build_mesh
from .geometry import GraphGeometry, compute_geometry
from .integrand import EllipticIntegrand
from .solver import GraphFunction, SolveConfig, SolveReport, solve
from .verify import CheckReport

__all__ = [
    "ConfigError",
    "Scenario",
    "load_scenario",
    "scenario_from_dict",
    "run_scenario",
    "run",
    "sweep",
    "bundled_scenario_path",
    "main",
]

_KNOWN_CHECKS = (
    "boundary_tangency",
    "wall_condition",
    "interior_minimality",
    "wall_principal_direction",
    "first_variation",
    "area_element_identity",
    "subharmonicity",
    "area_growth",
    "mean_value",
    "functional_inequalities",
    "gradient_estimate",
    "liouville",
)

_SWEEP_AXES = ("theta", "resolution", "domain_size")


class ConfigError(ValueError):
    """Malformed scenario or sweep configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str
    integrand: EllipticIntegrand
    domain: HalfDomain
    dirichlet: dict
    solver: SolveConfig
    checks: tuple = ()
    seed: int = 0


def scenario_from_dict(raw: dict) -> Scenario:
    """Build and validate a Scenario from parsed JSON."""
    try:
        if not isinstance(raw, dict):
            raise ValueError("scenario must be a JSON object")
        integrand = EllipticIntegrand.from_descriptor(raw["integrand"])
        dom_raw = dict(raw["domain"])
        domain = HalfDomain(
            n=int(dom_raw.get("n", 2)),
            depth=float(dom_raw["depth"]),
            width=float(dom_raw["width"]) if "width" in dom_raw else None,
            resolution=float(dom_raw["resolution"]),
        )
        if integrand.dim != domain.n + 1:
            raise ValueError(
                f"integrand dim {integrand.dim} does not match domain n+1={domain.n + 1}"
            )
        dirichlet = raw.get("dirichlet", {"type": "affine", "a": [0.0] * domain.n, "b": 0.0})
        solver_raw = dict(raw.get("solver", {}))
        solver = SolveConfig(
            tol_residual=float(solver_raw.get("tol_residual", 1e-10)),
            max_iter=int(solver_raw.get("max_iter", 50)),
            ls_shrink=float(solver_raw.get("ls_shrink", 0.5)),
            ls_decrease=float(solver_raw.get("ls_decrease", 1e-4)),
            linear_solver_tol=float(solver_raw.get("linear_solver_tol", 1e-8)),
        )
        checks = []
        for item in raw.get("checks", []):
            if isinstance(item, str):
                item = {"name": item}
            if not isinstance(item, dict) or "name" not in item:
                raise ValueError("each check must be a name or an object with a 'name'")
            if item["name"] not in _KNOWN_CHECKS:
                raise ValueError(f"unknown check {item['name']!r}")
            checks.append(dict(item))
        return Scenario(
            name=str(raw.get("name", "scenario")),
            integrand=integrand,
            domain=domain,
            dirichlet=dirichlet,
            solver=solver,
            checks=tuple(checks),
            seed=int(raw.get("seed", 0)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(raw)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. 'capillary_flat')."""
    here = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not here.exists():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return here


@dataclass
class RunResult:
    scenario: Scenario
    mesh: Mesh
    solution: GraphFunction
    solve_report: SolveReport
    geometry: Optional[GraphGeometry]
    reports: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.status != "fail" for r in self.reports)


def _default_probe_point(domain: HalfDomain) -> list[float]:
    if domain.n == 1:
        return [0.25 * domain.depth]
    return [0.25 * domain.depth, 0.0]


def _default_radii(domain: HalfDomain) -> list[float]:
    scale = min(domain.extents())
    return [0.15 * scale, 0.25 * scale, 0.35 * scale, 0.5 * scale]


def _run_check(name: str, params: dict, result: RunResult) -> CheckReport:
    geom = result.geometry
    sc = result.scenario
    if name == "boundary_tangency":
        return verify.check_boundary_tangency(geom, params.get("coef"))
    if name == "wall_condition":
        return verify.check_wall_condition(geom, params.get("coef"))
    if name == "interior_minimality":
        return verify.check_interior_minimality(geom, params.get("coef"))
    if name == "wall_principal_direction":
        return verify.check_wall_principal_direction(geom, params.get("coef"))
    if name == "first_variation":
        return verify.check_first_variation(geom, params.get("coef"), params.get("margin"))
    if name == "area_element_identity":
        return verify.check_area_element_identity(geom)
    if name == "subharmonicity":
        return verify.check_subharmonicity(geom, params.get("coef"))
    if name == "area_growth":
        x0 = params.get("x0", _default_probe_point(sc.domain))
        radii = params.get("radii", _default_radii(sc.domain))
        return verify.area_growth_check(geom, x0, radii, params.get("slope_tol", 0.2))
    if name == "mean_value":
        x0 = params.get("x0", _default_probe_point(sc.domain))
        r = params.get("r", 0.5 * min(sc.domain.extents()))
        return verify.mean_value_probe(geom, x0, r)
    if name == "functional_inequalities":
        return verify.functional_inequality_diagnostics(
            geom, seed=sc.seed, bank_size=int(params.get("bank_size", 60))
        )
    if name == "gradient_estimate":
        x0_list = params.get("x0_list", [_default_probe_point(sc.domain), [0.0] * sc.domain.n])
        r_list = params.get("r_list", _default_radii(sc.domain))
        _, _, report = verify.gradient_estimate_probe(geom, x0_list, r_list)
        return report
    if name == "liouville":
        slope = params.get("slope")
        if slope is None:
            slope = [sc.integrand.flat_slope(), 0.0]
        return verify.liouville_probe(
            sc.integrand,
            beta=float(params.get("beta", 2.0)),
            r_sizes=params.get("sizes", [4.0, 8.0, 16.0]),
            slope=slope,
            bump_height=float(params.get("bump_height", 1.0)),
            bump_radius=float(params.get("bump_radius", 1.0)),
            resolution=float(params.get("resolution", 0.25)),
            config=sc.solver,
            tol_flat=params.get("tol_flat"),
        )
    raise ConfigError(f"unknown check {name!r}")


def _resolve_dirichlet(spec: dict, scenario: Scenario) -> dict:
    """Expand 'flat_profile' terms into the integrand's wall-compatible affine."""
    if not isinstance(spec, dict):
        return spec
    if spec.get("type") == "flat_profile":
        a = [0.0] * scenario.domain.n
        a[0] = scenario.integrand.flat_slope()
        return {"type": "affine", "a": a, "b": float(spec.get("b", 0.0))}
    if spec.get("type") == "sum":
        return {"type": "sum",
                "terms": [_resolve_dirichlet(t, scenario) for t in spec.get("terms", [])]}
    return spec


def run_scenario(scenario: Scenario) -> RunResult:
    """Solve a scenario and run its checks in memory."""
    mesh = build_mesh(scenario.domain)
    data = evaluate_data_spec(_resolve_dirichlet(scenario.dirichlet, scenario), mesh.vertices)
    solution, solve_report = solve(scenario.integrand, mesh, data, scenario.solver)
    result = RunResult(scenario, mesh, solution, solve_report, None)
    if not solve_report.converged:
        return result
    needs_geom = any(c["name"] != "liouville" for c in scenario.checks)
    if needs_geom or not scenario.checks:
        result = dataclasses.replace(
            result, geometry=compute_geometry(scenario.integrand, solution)
        )
    for check in scenario.checks:
        params = {k: v for k, v in check.items() if k != "name"}
        result.reports.append(_run_check(check["name"], params, result))
    return result


# -- output writers -------------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_solution_csv(path, result: RunResult) -> None:
    mesh = result.mesh
    coords = [f"x{i + 1}" for i in range(mesh.n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *coords, "u"])
        for i in range(mesh.num_vertices):
            w.writerow([i, *map(_fmt, mesh.vertices[i]), _fmt(result.solution.values[i])])


def _write_geometry_csv(path, wall_path, result: RunResult) -> None:
    geom = result.geometry
    if geom is None:
        return
    mesh = result.mesh
    coords = [f"x{i + 1}" for i in range(mesh.n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *coords, "u", "W", "W_f", "H_F", "h_sq"])
        for i in range(mesh.num_vertices):
            w.writerow(
                [
                    i,
                    *map(_fmt, mesh.vertices[i]),
                    _fmt(result.solution.values[i]),
                    _fmt(geom.vertex_W[i]),
                    _fmt(geom.vertex_Wf[i]),
                    _fmt(geom.mean_curvature_aniso[i]),
                    _fmt(geom.h_sq[i]),
                ]
            )
    with open(wall_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["facet", "nuF_e1", "muF_e1", "measure"])
        for k in range(geom.wall_facets.size):
            w.writerow(
                [
                    int(geom.wall_facets[k]),
                    _fmt(geom.wall_nuF_e1[k]),
                    _fmt(geom.wall_muF_e1[k]),
                    _fmt(geom.wall_measure[k]),
                ]
            )


def _write_reports(out_dir: Path, result: RunResult) -> None:
    with open(out_dir / "report.jsonl", "w") as fh:
        for rep in result.reports:
            fh.write(json.dumps(rep.to_json_dict(), sort_keys=True) + "\n")
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "status", "residual", "rate"])
        for rep in result.reports:
            w.writerow(
                [
                    rep.check_name,
                    rep.status,
                    _fmt(rep.worst_residual),
                    "" if rep.refinement_rate is None else _fmt(rep.refinement_rate),
                ]
            )


def _write_solve_report(path, report: SolveReport) -> None:
    payload = {
        "iterations": report.iterations,
        "final_residual_norm": report.final_residual_norm,
        "energy_trace": report.energy_trace,
        "free_bc_residual": report.free_bc_residual,
        "converged": report.converged,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def run(scenario_path, out_dir) -> int:
    """Full pipeline: solve, geometry, checks, reports.  Returns exit code."""
    t0 = time.perf_counter()
    try:
        scenario = load_scenario(scenario_path)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = run_scenario(scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if caught:
        with open(out / "run.log", "a") as fh:
            for w in caught:
                fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} warning: {w.message}\n")
    _write_solution_csv(out / "solution.csv", result)
    _write_solve_report(out / "solve_report.json", result.solve_report)
    if not result.solve_report.converged:
        _write_reports(out, result)
        with open(out / "run.log", "a") as fh:
            fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} non-convergence "
                     f"after {result.solve_report.iterations} iterations\n")
        print("solver failed to converge", file=sys.stderr)
        return 3
    _write_geometry_csv(out / "geometry.csv", out / "geometry_wall.csv", result)
    _write_reports(out, result)
    with open(out / "run.log", "a") as fh:
        fh.write(
            f"{time.strftime('%Y-%m-%dT%H:%M:%S')} scenario={scenario.name} "
            f"elapsed={time.perf_counter() - t0:.3f}s "
            f"iters={result.solve_report.iterations}\n"
        )
    return 0 if result.all_passed else 1


# -- parameter sweeps -------------------------------------------------------------


def _apply_axis(raw: dict, axis: str, value: float) -> dict:
    out = json.loads(json.dumps(raw))
    if axis == "theta":
        if out.get("integrand", {}).get("kind") != "capillary":
            raise ConfigError("theta sweep needs a capillary integrand")
        out["integrand"]["theta"] = value
    elif axis == "resolution":
        out["domain"]["resolution"] = value
    elif axis == "domain_size":
        out["domain"]["depth"] = value
        if out["domain"].get("n", 2) == 2:
            out["domain"]["width"] = value
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    out["name"] = f"{out.get('name', 'scenario')}_{axis}={value:.6g}"
    return out


def _max_workers(n_jobs: int) -> int:
    cap = os.environ.get("ANISO_THREADS")
    if cap is not None:
        try:
            cap_val = max(1, int(cap))
        except ValueError as exc:
            raise ConfigError("ANISO_THREADS must be an integer") from exc
        return min(n_jobs, cap_val)
    return min(n_jobs, os.cpu_count() or 1, 4)


def sweep(scenario_path, axis: str, values, out_dir) -> int:
    """Run the base scenario once per axis value; one CSV row per value."""
    try:
        if axis not in _SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r}; use one of {_SWEEP_AXES}")
        with open(scenario_path) as fh:
            raw = json.load(fh)
        variants = [scenario_from_dict(_apply_axis(raw, axis, v)) for v in values]
        workers = _max_workers(len(variants))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    def quiet_run(sc: Scenario) -> RunResult:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return run_scenario(sc)

    results: list[Optional[RunResult]] = [None] * len(variants)
    with concurrent.futures.ThreadPoolExecutor(workers) as pool:
        futures = {pool.submit(quiet_run, sc): i for i, sc in enumerate(variants)}
        for fut in concurrent.futures.as_completed(futures):
            results[futures[fut]] = fut.result()

    check_names = sorted({rep.check_name for res in results for rep in res.reports})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = [axis, "h", "converged", "iterations", "free_bc_residual"]
    for name in check_names:
        header += [f"{name}_residual", f"{name}_status"]
        if axis == "resolution":
            header.append(f"{name}_rate")
    header += ["gradient_c1", "gradient_c2"]
    rows = []
    prev_res: dict[str, float] = {}
    for value, res in zip(values, results):
        row: dict = {
            axis: _fmt(value),
            "h": _fmt(res.mesh.h),
            "converged": res.solve_report.converged,
            "iterations": res.solve_report.iterations,
            "free_bc_residual": _fmt(res.solve_report.free_bc_residual),
        }
        by_name = {rep.check_name: rep for rep in res.reports}
        for name in check_names:
            rep = by_name.get(name)
            if rep is None:
                row[f"{name}_residual"] = ""
                row[f"{name}_status"] = ""
                if axis == "resolution":
                    row[f"{name}_rate"] = ""
                continue
            row[f"{name}_residual"] = _fmt(rep.worst_residual)
            row[f"{name}_status"] = rep.status
            if axis == "resolution":
                rate = ""
                if name in prev_res and rep.worst_residual > 0.0:
                    rate = _fmt(math.log2(prev_res[name] / rep.worst_residual))
                row[f"{name}_rate"] = rate
                prev_res[name] = rep.worst_residual
        grad = by_name.get("gradient_estimate")
        row["gradient_c1"] = _fmt(grad.metadata["c1"]) if grad and "c1" in grad.metadata else ""
        row["gradient_c2"] = _fmt(grad.metadata["c2"]) if grad and "c2" in grad.metadata else ""
        rows.append(row)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header)
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aniso", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a scenario and dump the solution")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", required=True)

    p_verify = sub.add_parser("verify", help="solve a scenario and run its checks")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="re-run a scenario along one parameter axis")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "solve":
        try:
            scenario = load_scenario(args.config)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            mesh = build_mesh(scenario.domain)
            data = evaluate_data_spec(_resolve_dirichlet(scenario.dirichlet, scenario),
                                      mesh.vertices)
            solution, report = solve(scenario.integrand, mesh, data, scenario.solver)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        result = RunResult(scenario, mesh, solution, report, None)
        _write_solution_csv(out / "solution.csv", result)
        _write_solve_report(out / "solve_report.json", report)
        return 0 if report.converged else 3
    if args.command == "verify":
        return run(args.config, args.out)
    if args.command == "sweep":
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("empty sweep value list")
        except ValueError:
            print("config error: sweep values must be numbers", file=sys.stderr)
            return 2
        return sweep(args.config, args.axis, values, args.out)
    return 2


if __name__ == "__main__":
    sys.exit(main())
