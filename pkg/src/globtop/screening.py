"""Material verdicts and minimum encapsulant thickness under a deflection cap.

The screening question is: for each candidate material, how thick must the
glob top be so that the worst-case apex deflection stays below the allowed
limit, and does that thickness fit the package?  Because the closed-form apex
deflection is a**2 P K / (E t), the minimum feasible thickness at the worst
pressure is explicit:

    t_min = a**2 P_max K(nu, alpha) / (E * limit)

A material passes when t_min fits within the dispensable thickness cap,
fails when it clearly does not, and is marginal inside a +/-5 percent band
around the cap, where process scatter decides.

Three response sources are supported: the closed-form model, the shell FEM
(t_min found by root bracketing on the solved apex deflection), and a fitted
screening model from an external response column (t_min from inverting the
linear fit).  Keeping the sources separate in the output is deliberate: the
gap between an analytical t_min and a fitted one is part of the answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from scipy.optimize import brentq

from .errors import ConfigError, InputDomainError, SolverError
from .fem import mesh_cap, solve_case
from .geometry import CapGeometry
from .materials import Material, MaterialLibrary
from .shell_model import ShellCase, apex_coefficient, apex_deflection
from .stats import ScreeningFit
from .units import ATM_PA, atm_to_pa

SOURCES = ("analytical", "fem", "external")

_CLASSES = {"pass": 0, "marginal": 1, "fail": 2}


@dataclass(frozen=True)
class ScreeningCriteria:
    """Feasibility thresholds for the package under study."""

    deflection_limit_um: float = 5.0
    max_pressure_atm: float = 100.0
    max_thickness_um: float = 250.0
    thickness_range_um: tuple[float, float] = (150.0, 250.0)
    pressure_range_atm: tuple[float, float] = (80.0, 100.0)
    marginal_band: float = 0.05

    def __post_init__(self) -> None:
        limit = float(self.deflection_limit_um)
        if math.isnan(limit) or limit <= 0.0:
            raise InputDomainError(
                f"deflection_limit_um must be positive (inf allowed), got {limit!r}"
            )
        for name in ("max_pressure_atm", "max_thickness_um"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0.0:
                raise InputDomainError(f"{name} must be finite and positive, got {v!r}")
        for name in ("thickness_range_um", "pressure_range_atm"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo < hi):
                raise InputDomainError(f"{name} must be an increasing positive pair")
        band = float(self.marginal_band)
        if not 0.0 <= band < 1.0:
            raise InputDomainError(f"marginal_band must lie in [0, 1), got {band!r}")


def min_thickness(
    material: Material,
    geometry: CapGeometry,
    pressure_pa: float,
    deflection_limit_um: float,
) -> float:
    """Closed-form minimum thickness, um, holding the apex at the limit.

    Zero pressure needs no encapsulant stiffness at all, so 0.0 is returned;
    an infinite limit likewise.
    """
    p = float(pressure_pa)
    if not math.isfinite(p) or p < 0.0:
        raise InputDomainError(f"pressure_pa must be finite and non-negative, got {p!r}")
    limit = float(deflection_limit_um)
    if math.isnan(limit) or limit <= 0.0:
        raise InputDomainError(f"deflection_limit_um must be positive, got {limit!r}")
    if p == 0.0 or math.isinf(limit):
        return 0.0
    a = geometry.radius_um
    k = apex_coefficient(material.poisson_ratio, geometry.base_angle_rad)
    return a * a * p * k / (material.youngs_modulus_pa * limit)


def desirability(
    deflection_um: float, lower_target_um: float = 0.0, upper_bound_um: float = 5.0
) -> float:
    """Smaller-is-better score in [0, 1], linear between target and bound."""
    lo = float(lower_target_um)
    hi = float(upper_bound_um)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise InputDomainError(
            f"need lower_target_um < upper_bound_um, got {lo!r}, {hi!r}"
        )
    w = float(deflection_um)
    if math.isnan(w):
        raise InputDomainError("deflection_um is NaN")
    if w <= lo:
        return 1.0
    if w >= hi:
        return 0.0
    return (hi - w) / (hi - lo)


@dataclass(frozen=True)
class Verdict:
    """Feasibility verdict for one material under one response source."""

    material_name: str
    source: str
    min_feasible_thickness_um: float
    worst_case_deflection_um: float
    classification: str

    def as_dict(self) -> dict:
        t_min = self.min_feasible_thickness_um
        return {
            "material": self.material_name,
            "source": self.source,
            # JSON has no Infinity literal, so an unbounded thickness is
            # serialized as the string "inf".
            "min_feasible_thickness_um": t_min if math.isfinite(t_min) else "inf",
            "worst_case_deflection_um": self.worst_case_deflection_um,
            "classification": self.classification,
        }


def classify(t_min_um: float, criteria: ScreeningCriteria) -> str:
    """pass / marginal / fail against the thickness cap with the +/- band."""
    cap = criteria.max_thickness_um
    band = criteria.marginal_band
    if t_min_um <= cap * (1.0 - band):
        return "pass"
    if t_min_um <= cap * (1.0 + band):
        return "marginal"
    return "fail"


def _fem_min_thickness(
    material: Material,
    geometry: CapGeometry,
    pressure_pa: float,
    limit_um: float,
    bc: str,
    n_elements: int,
) -> float:
    if pressure_pa == 0.0 or math.isinf(limit_um):
        return 0.0

    def excess(t_um: float) -> float:
        mesh = mesh_cap(geometry, n_elements)
        sol = solve_case(mesh, t_um, material, pressure_pa, bc)
        return sol.apex_deflection_um - limit_um

    lo, hi = 1.0, 5000.0
    f_lo = excess(lo)
    f_hi = excess(hi)
    if f_lo <= 0.0:
        return lo
    if f_hi > 0.0:
        raise SolverError(
            f"{material.name}: no feasible thickness up to {hi} um at this pressure"
        )
    return float(brentq(excess, lo, hi, xtol=1e-6, rtol=1e-10))


def _fit_min_thickness(fit: ScreeningFit, name: str, criteria: ScreeningCriteria) -> float:
    """Invert the fitted linear model for the thickness hitting the limit.

    The fit is linear, so the answer is exact; a non-negative thickness
    slope means thickness does not reduce deflection in the fitted model,
    in which case the result is 0 if even the thinnest setting is feasible
    and infinity otherwise.
    """
    limit = criteria.deflection_limit_um
    slope = fit.thickness_slope_per_um
    if slope >= 0.0:
        w_thinnest = fit.predict(name, 0.0, criteria.max_pressure_atm)
        return 0.0 if w_thinnest <= limit else math.inf
    t_min = fit.thickness_mean_um + (
        limit
        - fit.material_mean(name)
        - fit.pressure_slope_per_atm * (criteria.max_pressure_atm - fit.pressure_mean_atm)
    ) / slope
    return max(t_min, 0.0)


def screen(
    library: MaterialLibrary,
    geometry: CapGeometry,
    criteria: ScreeningCriteria,
    source: str = "analytical",
    *,
    fit: ScreeningFit | None = None,
    atm_pa: float = ATM_PA,
    fem_bc: str = "clamped",
    fem_elements: int = 96,
) -> tuple[Verdict, ...]:
    """Screen every library material under one response source.

    Verdicts are sorted by minimum feasible thickness, best material first,
    with the material name breaking exact ties deterministically.  The
    external source needs the ``fit`` of the external response column.
    """
    if source not in SOURCES:
        raise ConfigError(f"source must be one of {SOURCES}, got {source!r}")
    if source == "external" and fit is None:
        raise ConfigError("external screening requires a fitted screening model")
    p_max = atm_to_pa(criteria.max_pressure_atm, atm_pa)
    limit = criteria.deflection_limit_um
    verdicts = []
    for mat in library:
        if source == "analytical":
            t_min = min_thickness(mat, geometry, p_max, limit)
            worst = apex_deflection(
                ShellCase(geometry, criteria.max_thickness_um, mat, p_max)
            )
        elif source == "fem":
            t_min = _fem_min_thickness(mat, geometry, p_max, limit, fem_bc, fem_elements)
            worst = solve_case(
                mesh_cap(geometry, fem_elements),
                criteria.max_thickness_um,
                mat,
                p_max,
                fem_bc,
            ).apex_deflection_um
        else:
            t_min = _fit_min_thickness(fit, mat.name, criteria)
            worst = fit.predict(
                mat.name, criteria.max_thickness_um, criteria.max_pressure_atm
            )
        verdicts.append(
            Verdict(
                material_name=mat.name,
                source=source,
                min_feasible_thickness_um=t_min,
                worst_case_deflection_um=worst,
                classification=classify(t_min, criteria),
            )
        )
    verdicts.sort(key=lambda v: (v.min_feasible_thickness_um, v.material_name))
    return tuple(verdicts)


@dataclass(frozen=True)
class ThicknessProfile:
    """Deflection and desirability versus thickness for one material."""

    material_name: str
    pressure_atm: float
    thickness_um: tuple[float, ...]
    deflection_um: tuple[float, ...]
    desirability: tuple[float, ...] = field(repr=False)

    def rows(self):
        return zip(self.thickness_um, self.deflection_um, self.desirability)

    def to_csv_text(self) -> str:
        lines = ["thickness_um,deflection_um,desirability\n"]
        lines += [f"{t:.12g},{w:.12g},{d:.12g}\n" for t, w, d in self.rows()]
        return "".join(lines)


def thickness_profile(
    material: Material,
    geometry: CapGeometry,
    criteria: ScreeningCriteria,
    n_points: int = 101,
    pressure_atm: float | None = None,
    atm_pa: float = ATM_PA,
) -> ThicknessProfile:
    """Sweep the closed-form apex deflection over the thickness range."""
    n = int(n_points)
    if n < 2:
        raise InputDomainError(f"n_points must be at least 2, got {n_points!r}")
    p_atm = criteria.max_pressure_atm if pressure_atm is None else float(pressure_atm)
    p_pa = atm_to_pa(p_atm, atm_pa)
    lo, hi = criteria.thickness_range_um
    ts = tuple(lo + (hi - lo) * i / (n - 1) for i in range(n))
    ws = tuple(
        apex_deflection(ShellCase(geometry, t, material, p_pa)) for t in ts
    )
    ds = tuple(
        desirability(w, 0.0, criteria.deflection_limit_um) for w in ws
    )
    return ThicknessProfile(
        material_name=material.name,
        pressure_atm=p_atm,
        thickness_um=ts,
        deflection_um=ws,
        desirability=ds,
    )
