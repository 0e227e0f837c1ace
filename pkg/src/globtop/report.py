"""Study configuration, the end-to-end pipeline, and report artifacts.

A study runs the screening plan against one or more response sources,
compares simulated against calculated columns, decomposes the variance per
source, screens the materials, and writes every artifact into one output
directory.  Outputs are deterministic: identical resolved configs give
byte-identical files, and report.json embeds the sha256 hash of the
resolved config so a report can be tied back to its inputs.

If a stage fails, a STALE marker naming the stage is left in the output
directory so partially written artifacts are never mistaken for a complete
study.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .doe import (
    ExperimentPlan,
    RunResult,
    default_plan,
    plan_to_csv,
    realize_responses,
    results_to_csv,
)
from .errors import ConfigError, GlobtopError, StageError
from .fem import mesh_cap, solve_case
from .geometry import CapGeometry, cap_from_config
from .materials import MaterialLibrary, default_library, load_library, load_library_file
from .screening import (
    ScreeningCriteria,
    SOURCES,
    Verdict,
    screen,
    thickness_profile,
)
from .shell_model import apex_deflection
from .stats import (
    AnovaTable,
    EffectTest,
    ScreeningFit,
    anova_table,
    effect_tests,
    effects_to_csv_text,
    effects_to_json,
    fit_screening_model,
)
from .units import ATM_PA

_DEFAULT_GEOMETRY = {"radius_um": 3010.0, "base_angle_deg": 23.5}
_DEFAULT_THICKNESS = (150.0, 200.0, 250.0)
_DEFAULT_PRESSURE = (80.0, 90.0, 100.0)


@dataclass(frozen=True)
class StudyConfig:
    """Fully resolved study inputs plus the hash of their canonical form."""

    geometry: CapGeometry
    library: MaterialLibrary
    thickness_levels_um: tuple[float, float, float]
    pressure_levels_atm: tuple[float, float, float]
    criteria: ScreeningCriteria
    sources: tuple[str, ...]
    external_simulated_um: tuple[float, ...] | None
    external_calculated_um: tuple[float, ...] | None
    fem_elements: int
    fem_bc: str
    atm_pa: float
    profile_points: int
    config_hash: str


def _levels(raw, name: str) -> tuple[float, float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise ConfigError(f"{name} must be a list of 3 values")
    try:
        vals = tuple(float(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{name} must be finite")
    if not vals[0] < vals[1] < vals[2]:
        raise ConfigError(f"{name} must be strictly increasing")
    return vals


def _column(raw, name: str) -> tuple[float, ...]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 9:
        raise ConfigError(f"{name} must be a list of 9 values in run order")
    vals = tuple(float(v) for v in raw)
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{name} must be finite")
    return vals


def parse_config(doc: Mapping, base_dir: Path | None = None) -> StudyConfig:
    """Validate and resolve a config mapping into a StudyConfig."""
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a JSON object")
    known = {
        "geometry",
        "materials",
        "thickness_levels_um",
        "pressure_levels_atm",
        "criteria",
        "sources",
        "external",
        "fem",
        "atm_pa",
        "profile_points",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"config has unknown keys: {sorted(unknown)}")

    geometry_block = dict(doc.get("geometry", _DEFAULT_GEOMETRY))
    geometry = cap_from_config(geometry_block)

    materials_raw = doc.get("materials")
    if materials_raw is None:
        library = default_library()
    elif isinstance(materials_raw, str):
        path = Path(materials_raw)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        library = load_library_file(path)
    elif isinstance(materials_raw, Mapping):
        library = load_library(json.dumps(materials_raw))
    else:
        raise ConfigError("materials must be a path or an inline library object")

    t_levels = _levels(doc.get("thickness_levels_um", _DEFAULT_THICKNESS), "thickness_levels_um")
    p_levels = _levels(doc.get("pressure_levels_atm", _DEFAULT_PRESSURE), "pressure_levels_atm")

    crit_block = doc.get("criteria", {})
    if not isinstance(crit_block, Mapping):
        raise ConfigError("criteria must be an object")
    crit_known = {
        "deflection_limit_um",
        "max_pressure_atm",
        "max_thickness_um",
        "thickness_range_um",
        "pressure_range_atm",
        "marginal_band",
    }
    crit_unknown = set(crit_block) - crit_known
    if crit_unknown:
        raise ConfigError(f"criteria has unknown keys: {sorted(crit_unknown)}")
    crit_kwargs = dict(crit_block)
    for key in ("thickness_range_um", "pressure_range_atm"):
        if key in crit_kwargs:
            pair = crit_kwargs[key]
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ConfigError(f"criteria.{key} must be a pair")
            crit_kwargs[key] = tuple(float(v) for v in pair)
    try:
        criteria = ScreeningCriteria(**crit_kwargs)
    except GlobtopError as exc:
        raise ConfigError(f"criteria: {exc}") from exc

    sources_raw = doc.get("sources", ["analytical"])
    if not isinstance(sources_raw, (list, tuple)) or not sources_raw:
        raise ConfigError("sources must be a non-empty list")
    sources = tuple(sources_raw)
    for s in sources:
        if s not in SOURCES:
            raise ConfigError(f"unknown source {s!r}; valid sources are {SOURCES}")
    if len(set(sources)) != len(sources):
        raise ConfigError("sources must not repeat")

    external_block = doc.get("external", {})
    if not isinstance(external_block, Mapping):
        raise ConfigError("external must be an object")
    ext_unknown = set(external_block) - {"simulated_um", "calculated_um"}
    if ext_unknown:
        raise ConfigError(f"external has unknown keys: {sorted(ext_unknown)}")
    simulated = calculated = None
    if "simulated_um" in external_block:
        simulated = _column(external_block["simulated_um"], "external.simulated_um")
    if "calculated_um" in external_block:
        calculated = _column(external_block["calculated_um"], "external.calculated_um")
    if "external" in sources and simulated is None:
        raise ConfigError('source "external" requires external.simulated_um')

    fem_block = doc.get("fem", {})
    if not isinstance(fem_block, Mapping):
        raise ConfigError("fem must be an object")
    fem_unknown = set(fem_block) - {"n_elements", "bc"}
    if fem_unknown:
        raise ConfigError(f"fem has unknown keys: {sorted(fem_unknown)}")
    fem_elements = int(fem_block.get("n_elements", 256))
    if fem_elements < 4:
        raise ConfigError(f"fem.n_elements must be at least 4, got {fem_elements}")
    fem_bc = fem_block.get("bc", "clamped")
    if fem_bc not in ("clamped", "pinned"):
        raise ConfigError(f"fem.bc must be clamped or pinned, got {fem_bc!r}")

    atm_pa = float(doc.get("atm_pa", ATM_PA))
    if not math.isfinite(atm_pa) or atm_pa <= 0.0:
        raise ConfigError(f"atm_pa must be finite and positive, got {atm_pa!r}")

    profile_points = int(doc.get("profile_points", 101))
    if profile_points < 2:
        raise ConfigError(f"profile_points must be at least 2, got {profile_points}")

    resolved = {
        "geometry": geometry.as_dict(),
        "materials": [m.as_dict() for m in library],
        "thickness_levels_um": list(t_levels),
        "pressure_levels_atm": list(p_levels),
        "criteria": {
            "deflection_limit_um": criteria.deflection_limit_um,
            "max_pressure_atm": criteria.max_pressure_atm,
            "max_thickness_um": criteria.max_thickness_um,
            "thickness_range_um": list(criteria.thickness_range_um),
            "pressure_range_atm": list(criteria.pressure_range_atm),
            "marginal_band": criteria.marginal_band,
        },
        "sources": list(sources),
        "external": {
            "simulated_um": list(simulated) if simulated else None,
            "calculated_um": list(calculated) if calculated else None,
        },
        "fem": {"n_elements": fem_elements, "bc": fem_bc},
        "atm_pa": atm_pa,
        "profile_points": profile_points,
    }
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    config_hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    return StudyConfig(
        geometry=geometry,
        library=library,
        thickness_levels_um=t_levels,
        pressure_levels_atm=p_levels,
        criteria=criteria,
        sources=sources,
        external_simulated_um=simulated,
        external_calculated_um=calculated,
        fem_elements=fem_elements,
        fem_bc=fem_bc,
        atm_pa=atm_pa,
        profile_points=profile_points,
        config_hash=config_hash,
    )


def parse_config_file(path: str | Path) -> StudyConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(doc, base_dir=path.parent)


@dataclass(frozen=True)
class ComparisonRow:
    run: int
    simulated_um: float
    calculated_um: float
    ratio: float
    error_pct: float


def compare_columns(
    simulated: Sequence[float], calculated: Sequence[float]
) -> tuple[ComparisonRow, ...]:
    """Row-wise comparison of a calculated column against a simulated one.

    The percent error is (calculated / simulated - 1) * 100, so a positive
    error means the calculation overshoots the simulation.
    """
    if len(simulated) != len(calculated):
        raise ConfigError("comparison columns must have equal length")
    rows = []
    for i, (w_s, w_c) in enumerate(zip(simulated, calculated), start=1):
        if w_s == 0.0:
            raise ConfigError(f"run {i}: simulated response is zero, ratio undefined")
        ratio = w_c / w_s
        rows.append(
            ComparisonRow(
                run=i,
                simulated_um=float(w_s),
                calculated_um=float(w_c),
                ratio=float(ratio),
                error_pct=float((ratio - 1.0) * 100.0),
            )
        )
    return tuple(rows)


@dataclass(frozen=True)
class SourceAnalysis:
    source: str
    results: tuple[RunResult, ...]
    fit: ScreeningFit
    anova: AnovaTable
    effects: tuple[EffectTest, ...]
    verdicts: tuple[Verdict, ...]


@dataclass(frozen=True)
class StudyReport:
    """Everything a study produced, before serialization."""

    config: StudyConfig
    plan: ExperimentPlan
    analyses: tuple[SourceAnalysis, ...]
    comparison: tuple[ComparisonRow, ...] | None
    comparison_sources: tuple[str, str] | None

    def analysis(self, source: str) -> SourceAnalysis:
        for a in self.analyses:
            if a.source == source:
                return a
        raise KeyError(source)


def _slug(name: str) -> str:
    out = "".join(c if c.isalnum() else "_" for c in name.lower())
    while "__" in out:
        out = out.replace("__", "_")
    return out.strip("_")


def _responses(config: StudyConfig, plan: ExperimentPlan, source: str):
    if source == "analytical":
        return realize_responses(
            plan,
            apex_deflection,
            geometry=config.geometry,
            atm_pa=config.atm_pa,
            source="analytical",
        )
    if source == "fem":
        mesh = mesh_cap(config.geometry, config.fem_elements)

        def fem_apex(case) -> float:
            sol = solve_case(
                mesh, case.thickness_um, case.material, case.pressure_pa, config.fem_bc
            )
            return sol.apex_deflection_um

        return realize_responses(
            plan, fem_apex, geometry=config.geometry, atm_pa=config.atm_pa, source="fem"
        )
    return realize_responses(plan, config.external_simulated_um, source="external")


def run_study(config: StudyConfig, out_dir: str | Path) -> StudyReport:
    """Run every stage and write all artifacts into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stale = out / "STALE"

    def stage(name: str, fn):
        try:
            return fn()
        except Exception as exc:
            stale.write_text(f"incomplete study: stage {name} failed\n", encoding="utf-8")
            raise StageError(name, exc) from exc

    stale.unlink(missing_ok=True)

    plan = stage("plan", lambda: default_plan(
        config.library, config.thickness_levels_um, config.pressure_levels_atm
    ))
    stage("plan", lambda: plan_to_csv(plan, out / "plan.csv"))

    responses: dict[str, tuple[RunResult, ...]] = {}
    for source in config.sources:
        responses[source] = stage(
            f"responses:{source}", lambda s=source: _responses(config, plan, s)
        )
        stage(
            f"responses:{source}",
            lambda s=source: results_to_csv(responses[s], out / f"responses_{s}.csv"),
        )

    comparison = None
    comparison_sources = None
    simulated = calculated = None
    sim_name = calc_name = ""
    if config.external_simulated_um is not None:
        simulated, sim_name = config.external_simulated_um, "external"
    elif "fem" in responses:
        simulated = tuple(r.response_um for r in responses["fem"])
        sim_name = "fem"
    if config.external_calculated_um is not None:
        calculated, calc_name = config.external_calculated_um, "external_calculated"
    elif "analytical" in responses:
        calculated = tuple(r.response_um for r in responses["analytical"])
        calc_name = "analytical"
    if simulated is not None and calculated is not None:
        comparison = stage(
            "comparison", lambda: compare_columns(simulated, calculated)
        )
        comparison_sources = (sim_name, calc_name)
        stage("comparison", lambda: _write_comparison(comparison, out / "comparison.csv"))

    analyses = []
    for source in config.sources:
        fit = stage(f"stats:{source}", lambda s=source: fit_screening_model(responses[s]))
        table = stage(f"stats:{source}", lambda f=fit: anova_table(f))
        effects = stage(f"stats:{source}", lambda f=fit: effect_tests(f))
        verdicts = stage(
            f"screening:{source}",
            lambda s=source, f=fit: screen(
                config.library,
                config.geometry,
                config.criteria,
                s,
                fit=f,
                atm_pa=config.atm_pa,
                fem_bc=config.fem_bc,
                fem_elements=config.fem_elements,
            ),
        )
        analyses.append(
            SourceAnalysis(
                source=source,
                results=responses[source],
                fit=fit,
                anova=table,
                effects=effects,
                verdicts=verdicts,
            )
        )
        stage(
            f"stats:{source}",
            lambda s=source, t=table, e=effects: _write_stats(out, s, t, e),
        )

    stage("screening", lambda: _write_verdicts(out, analyses))

    stage("profiles", lambda: _write_profiles(out, config))

    report = StudyReport(
        config=config,
        plan=plan,
        analyses=tuple(analyses),
        comparison=comparison,
        comparison_sources=comparison_sources,
    )
    stage("report", lambda: _write_report_json(out / "report.json", report))
    return report


def _write_comparison(rows: Sequence[ComparisonRow], path: Path) -> None:
    lines = ["run,simulated_um,calculated_um,ratio,error_pct\n"]
    lines += [
        f"{r.run},{r.simulated_um:.2f},{r.calculated_um:.2f},{r.ratio:.4f},{r.error_pct:.2f}\n"
        for r in rows
    ]
    path.write_text("".join(lines), encoding="utf-8")


def _write_stats(
    out: Path, source: str, table: AnovaTable, effects: Sequence[EffectTest]
) -> None:
    (out / f"anova_{source}.csv").write_text(table.to_csv_text(), encoding="utf-8")
    _dump_json(out / f"anova_{source}.json", table.to_json_dict())
    (out / f"effects_{source}.csv").write_text(
        effects_to_csv_text(effects), encoding="utf-8"
    )
    _dump_json(out / f"effects_{source}.json", effects_to_json(effects))


def _write_verdicts(out: Path, analyses: Sequence[SourceAnalysis]) -> None:
    lines = ["material,source,min_feasible_thickness_um,worst_case_deflection_um,classification\n"]
    doc = {}
    for analysis in analyses:
        doc[analysis.source] = [v.as_dict() for v in analysis.verdicts]
        for v in analysis.verdicts:
            t_min = "inf" if math.isinf(v.min_feasible_thickness_um) else f"{v.min_feasible_thickness_um:.4f}"
            lines.append(
                f"{v.material_name},{v.source},{t_min},"
                f"{v.worst_case_deflection_um:.2f},{v.classification}\n"
            )
    (out / "verdicts.csv").write_text("".join(lines), encoding="utf-8")
    _dump_json(out / "verdicts.json", doc)


def _write_profiles(out: Path, config: StudyConfig) -> None:
    from .svgplot import Series, line_plot

    for mat in config.library:
        prof = thickness_profile(
            mat,
            config.geometry,
            config.criteria,
            n_points=config.profile_points,
            atm_pa=config.atm_pa,
        )
        slug = _slug(mat.name)
        (out / f"profile_{slug}.csv").write_text(prof.to_csv_text(), encoding="utf-8")
        svg = line_plot(
            [Series(label=mat.name, x=prof.thickness_um, y=prof.deflection_um)],
            title=f"Apex deflection vs thickness, {mat.name}, {prof.pressure_atm:g} atm",
            x_label="thickness (um)",
            y_label="apex deflection (um)",
            h_line=config.criteria.deflection_limit_um
            if math.isfinite(config.criteria.deflection_limit_um)
            else None,
            h_line_label="limit",
        )
        (out / f"profile_{slug}.svg").write_text(svg, encoding="utf-8")


def _dump_json(path: Path, doc) -> None:
    path.write_text(
        json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n",
        encoding="utf-8",
    )


def _write_report_json(path: Path, report: StudyReport) -> None:
    config = report.config
    doc = {
        "provenance": {
            "package_version": __version__,
            "config_hash": config.config_hash,
        },
        "geometry": config.geometry.as_dict(),
        "criteria": {
            "deflection_limit_um": config.criteria.deflection_limit_um,
            "max_pressure_atm": config.criteria.max_pressure_atm,
            "max_thickness_um": config.criteria.max_thickness_um,
            "marginal_band": config.criteria.marginal_band,
        },
        "plan": [
            {
                "run": r.run,
                "material": r.material.name,
                "thickness_um": r.thickness_um,
                "pressure_atm": r.pressure_atm,
                "codes": list(r.codes),
            }
            for r in report.plan.runs
        ],
        "responses": {
            a.source: [
                {"run": r.run, "response_um": r.response_um} for r in a.results
            ]
            for a in report.analyses
        },
        "stats": {
            a.source: {
                "fit": a.fit.to_json_dict(),
                "anova": a.anova.to_json_dict(),
                "effects": effects_to_json(a.effects),
            }
            for a in report.analyses
        },
        "verdicts": {
            a.source: [v.as_dict() for v in a.verdicts] for a in report.analyses
        },
        "comparison": None
        if report.comparison is None
        else {
            "simulated_source": report.comparison_sources[0],
            "calculated_source": report.comparison_sources[1],
            "rows": [
                {
                    "run": r.run,
                    "simulated_um": r.simulated_um,
                    "calculated_um": r.calculated_um,
                    "ratio": r.ratio,
                    "error_pct": r.error_pct,
                }
                for r in report.comparison
            ],
        },
    }
    _dump_json(path, doc)
