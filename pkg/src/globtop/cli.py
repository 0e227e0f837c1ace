"""Command line interface.

Subcommands mirror the library layers: geometry, deflect, plan, study,
anova, optimize, fem.  Exit codes: 0 success, 1 invalid input or usage,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .doe import default_plan, plan_to_csv, read_responses_csv
from .errors import (
    ConfigError,
    GlobtopError,
    InputDomainError,
    MeshError,
    StageError,
)
from .fem import converge, mesh_cap, solve_case
from .geometry import REFERENCE_GEOMETRY, from_radius_angle, solve_cap
from .materials import default_library, load_library_file
from .report import parse_config_file, run_study
from .screening import ScreeningCriteria, classify, min_thickness, screen
from .shell_model import ShellCase, apex_deflection, profile
from .stats import anova_table, effect_tests, effects_to_csv_text, effects_to_json, fit_screening_model
from .units import ATM_PA, atm_to_pa


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        self.parser = parser
        self.message = message
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise _UsageError(self, message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="globtop", description=__doc__)
    parser.add_argument("--version", action="version", version=f"globtop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, materials=True):
        if materials:
            p.add_argument("--materials", help="material library JSON (default: bundled)")
            p.add_argument("--material", help="material name from the library")
        p.add_argument("--atm-pa", type=float, default=ATM_PA,
                       help="pascals per atmosphere (default 101325)")
        p.add_argument("--radius-um", type=float, help="cap sphere radius, um")
        p.add_argument("--angle-deg", type=float, help="cap base angle, degrees")
        p.add_argument("--b-um", type=float, help="cap base half-width, um")
        p.add_argument("--h-um", type=float, help="cap apex rise, um")

    p_geo = sub.add_parser("geometry", help="solve the cap geometry")
    p_geo.add_argument("--b-um", type=float, help="base half-width, um")
    p_geo.add_argument("--h-um", type=float, help="apex rise, um")
    p_geo.add_argument("--radius-um", type=float)
    p_geo.add_argument("--angle-deg", type=float)
    p_geo.add_argument("--format", choices=("text", "json"), default="text")

    p_def = sub.add_parser("deflect", help="closed-form deflection of one case")
    add_common(p_def)
    p_def.add_argument("--thickness-um", type=float, required=True)
    p_def.add_argument("--pressure-atm", type=float, required=True)
    p_def.add_argument("--profile-points", type=int, default=0,
                       help="if > 1, write a (phi, v, w) profile CSV to --out")
    p_def.add_argument("--out", help="output file for the profile CSV")
    p_def.add_argument("--format", choices=("text", "json"), default="text")

    p_plan = sub.add_parser("plan", help="emit the 9-run screening plan")
    p_plan.add_argument("--materials", help="material library JSON (default: bundled)")
    p_plan.add_argument("--thickness-levels-um", type=float, nargs=3,
                        default=[150.0, 200.0, 250.0], metavar="T")
    p_plan.add_argument("--pressure-levels-atm", type=float, nargs=3,
                        default=[80.0, 90.0, 100.0], metavar="P")
    p_plan.add_argument("--out", help="write CSV here instead of stdout")

    p_study = sub.add_parser("study", help="run the full screening study")
    p_study.add_argument("--config", required=True, help="study config JSON")
    p_study.add_argument("--out", required=True, help="output directory")

    p_anova = sub.add_parser("anova", help="variance decomposition of a response CSV")
    p_anova.add_argument("--responses", required=True, help="responses CSV path")
    p_anova.add_argument("--format", choices=("text", "csv", "json"), default="text")

    p_opt = sub.add_parser("optimize", help="minimum feasible thickness per material")
    add_common(p_opt)
    p_opt.add_argument("--limit-um", type=float, default=5.0,
                       help="apex deflection limit, um (default 5)")
    p_opt.add_argument("--max-pressure-atm", type=float, default=100.0)
    p_opt.add_argument("--max-thickness-um", type=float, default=250.0)
    p_opt.add_argument("--format", choices=("text", "json"), default="text")

    p_fem = sub.add_parser("fem", help="finite element solve of one case")
    add_common(p_fem)
    p_fem.add_argument("--thickness-um", type=float, required=True)
    p_fem.add_argument("--pressure-atm", type=float, required=True)
    p_fem.add_argument("--n-elements", type=int, default=256)
    p_fem.add_argument("--bc", choices=("clamped", "pinned"), default="clamped")
    p_fem.add_argument("--converge", action="store_true",
                       help="run a mesh refinement ladder instead of one solve")
    p_fem.add_argument("--out", help="output file for the nodal solution CSV")

    return parser


def _geometry_from(args) -> object:
    given_polar = args.radius_um is not None or args.angle_deg is not None
    given_chord = args.b_um is not None or args.h_um is not None
    if given_polar and given_chord:
        raise InputDomainError("give either --b-um/--h-um or --radius-um/--angle-deg, not both")
    if given_chord:
        if args.b_um is None or args.h_um is None:
            raise InputDomainError("--b-um and --h-um must be given together")
        return solve_cap(args.b_um, args.h_um)
    if given_polar:
        if args.radius_um is None or args.angle_deg is None:
            raise InputDomainError("--radius-um and --angle-deg must be given together")
        return from_radius_angle(args.radius_um, args.angle_deg)
    return REFERENCE_GEOMETRY


def _library_from(args):
    if getattr(args, "materials", None):
        return load_library_file(args.materials)
    return default_library()


def _material_from(args):
    library = _library_from(args)
    if not args.material:
        raise InputDomainError("--material is required for this command")
    try:
        return library.get(args.material)
    except KeyError as exc:
        raise InputDomainError(str(exc.args[0])) from exc


def _cmd_geometry(args) -> int:
    geom = _geometry_from(args)
    if args.format == "json":
        print(json.dumps(geom.as_dict(), indent=2, sort_keys=True))
    else:
        print(f"base_half_width_um = {geom.base_half_width_um:.6f}")
        print(f"rise_um            = {geom.rise_um:.6f}")
        print(f"radius_um          = {geom.radius_um:.6f}")
        print(f"base_angle_deg     = {geom.base_angle_deg:.6f}")
    return 0


def _cmd_deflect(args) -> int:
    geom = _geometry_from(args)
    material = _material_from(args)
    case = ShellCase(
        geometry=geom,
        thickness_um=args.thickness_um,
        material=material,
        pressure_pa=atm_to_pa(args.pressure_atm, args.atm_pa),
    )
    apex = apex_deflection(case)
    if args.profile_points > 1:
        if not args.out:
            raise InputDomainError("--profile-points needs --out for the CSV")
        profile(case, args.profile_points).write_csv(args.out)
    if args.format == "json":
        print(json.dumps({
            "material": material.name,
            "thickness_um": case.thickness_um,
            "pressure_atm": args.pressure_atm,
            "apex_deflection_um": apex,
        }, indent=2, sort_keys=True))
    else:
        print(f"{material.name}: t = {case.thickness_um:g} um, "
              f"P = {args.pressure_atm:g} atm -> apex deflection {apex:.4f} um")
    return 0


def _cmd_plan(args) -> int:
    library = _library_from(args)
    plan = default_plan(library, args.thickness_levels_um, args.pressure_levels_atm)
    if args.out:
        plan_to_csv(plan, args.out)
    else:
        plan_to_csv(plan, sys.stdout)
    return 0


def _cmd_study(args) -> int:
    config = parse_config_file(args.config)
    report = run_study(config, args.out)
    out = Path(args.out)
    print(f"study complete: {len(report.analyses)} source(s), "
          f"artifacts in {out}")
    print(f"config hash: {config.config_hash}")
    for analysis in report.analyses:
        best = analysis.verdicts[0]
        print(f"[{analysis.source}] best material: {best.material_name} "
              f"({best.classification}, t_min = {best.min_feasible_thickness_um:.1f} um)")
    return 0


def _cmd_anova(args) -> int:
    results = read_responses_csv(args.responses)
    fit = fit_screening_model(results)
    table = anova_table(fit)
    effects = effect_tests(fit)
    if args.format == "json":
        print(json.dumps({
            "fit": fit.to_json_dict(),
            "anova": table.to_json_dict(),
            "effects": effects_to_json(effects),
        }, indent=2, sort_keys=True))
    elif args.format == "csv":
        sys.stdout.write(table.to_csv_text())
        sys.stdout.write(effects_to_csv_text(effects))
    else:
        print(f"grand mean: {fit.grand_mean:.4f} um")
        for name, mean in zip(fit.material_names, fit.material_means):
            print(f"  mean[{name}] = {mean:.4f} um")
        print(f"thickness slope: {fit.thickness_slope_per_um:.6f} um/um")
        print(f"pressure slope:  {fit.pressure_slope_per_atm:.6f} um/atm")
        print()
        print("source        df          ss          ms           f        p")
        for row in table.rows:
            ms = f"{row.ms:12.4f}" if row.ms is not None else " " * 12
            f_val = f"{row.f:12.4f}" if row.f is not None else " " * 12
            p_val = f"{row.p:8.4f}" if row.p is not None else " " * 8
            print(f"{row.source:<12}{row.df:>4}{row.ss:>12.4f}{ms}{f_val}{p_val}")
        print()
        print("effect          df          ss           f        p")
        for e in effects:
            print(f"{e.source:<14}{e.df:>4}{e.ss:>12.4f}{e.f:>12.4f}{e.p:>9.4f}")
    return 0


def _cmd_optimize(args) -> int:
    geom = _geometry_from(args)
    library = _library_from(args)
    criteria = ScreeningCriteria(
        deflection_limit_um=args.limit_um,
        max_pressure_atm=args.max_pressure_atm,
        max_thickness_um=args.max_thickness_um,
    )
    if args.material:
        materials = [_material_from(args)]
    else:
        materials = list(library)
    p_pa = atm_to_pa(criteria.max_pressure_atm, args.atm_pa)
    rows = []
    for mat in materials:
        t_min = min_thickness(mat, geom, p_pa, criteria.deflection_limit_um)
        rows.append((mat.name, t_min, classify(t_min, criteria)))
    rows.sort(key=lambda r: (r[1], r[0]))
    if args.format == "json":
        print(json.dumps([
            {"material": name, "min_feasible_thickness_um": t, "classification": c}
            for name, t, c in rows
        ], indent=2, sort_keys=True))
    else:
        for name, t, c in rows:
            print(f"{name}: t_min = {t:.4f} um ({c}, cap {criteria.max_thickness_um:g} um)")
    return 0


def _cmd_fem(args) -> int:
    geom = _geometry_from(args)
    material = _material_from(args)
    p_pa = atm_to_pa(args.pressure_atm, args.atm_pa)
    if args.converge:
        report = converge(
            geom, args.thickness_um, material, p_pa, bc=args.bc, n_start=max(4, args.n_elements // 8)
        )
        for n, apex in zip(report.levels, report.apex_um):
            print(f"n = {n:5d}: apex = {apex:.6f} um")
        order = report.observed_order
        print(f"observed order: {order:.2f}" if order is not None else "observed order: n/a")
        print(f"extrapolated apex: {report.extrapolated_um:.6f} um")
        if not report.contraction:
            print("warning: ladder is not contracting monotonically", file=sys.stderr)
        return 0
    mesh = mesh_cap(geom, args.n_elements)
    sol = solve_case(mesh, args.thickness_um, material, p_pa, args.bc)
    print(f"{material.name}: t = {args.thickness_um:g} um, P = {args.pressure_atm:g} atm, "
          f"{args.bc} rim, {args.n_elements} elements")
    print(f"apex deflection   = {sol.apex_deflection_um:.6f} um")
    print(f"rim reaction      = {sol.rim_reaction_vertical_n:.6e} N "
          f"(applied {sol.applied_vertical_load_n:.6e} N, "
          f"residual {sol.equilibrium_residual:.2e})")
    print(f"condition estimate = {sol.condition_estimate:.2e}")
    if args.out:
        sol.write_csv(args.out)
    return 0


_HANDLERS = {
    "geometry": _cmd_geometry,
    "deflect": _cmd_deflect,
    "plan": _cmd_plan,
    "study": _cmd_study,
    "anova": _cmd_anova,
    "optimize": _cmd_optimize,
    "fem": _cmd_fem,
}


def _exit_code(exc: GlobtopError) -> int:
    if isinstance(exc, StageError):
        inner = exc.original
        if isinstance(inner, GlobtopError):
            return _exit_code(inner)
        return 2
    if isinstance(exc, (ConfigError, InputDomainError, MeshError)):
        return 1
    return 2


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc.message}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except GlobtopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    raise SystemExit(main())
