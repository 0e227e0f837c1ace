"""Axisymmetric shell finite elements for the pressurized cap.

The meridian is discretized into straight conical frustum elements with two
nodes.  Each node carries three degrees of freedom in the global frame: the
radial displacement Ur, the axial displacement Uz, and the meridional
rotation beta.  Inside an element the displacement is interpolated in the
local tangent/normal frame, linear for the tangential component u and cubic
Hermite for the normal component w, so the rotation dof is beta = dw/ds and
w is C1 across element joins.

Strain measures for a shell of revolution with meridional tangent T and
outward normal N, in the local frame with arc coordinate s and radius r(s):

    membrane   e_s = u'                e_t = (u Tr + w Nr) / r
    bending    k_s = -w''              k_t = -w' Tr / r

The element stiffness is the usual thin-shell quadratic form with membrane
rigidity E t / (1 - nu^2) and bending rigidity E t^3 / (12 (1 - nu^2)),
integrated with 4-point Gauss quadrature including the 2 pi r measure.  The
consistent load vector applies a uniform normal pressure P acting against
the outward normal.

Sign conventions follow the mesh orientation, apex to rim: w and the normal
N point outward, so an external pressure gives negative w.  Units are um for
lengths and Pa for pressures and moduli; a force-like quantity assembled
from Pa times um^2 is 1e-12 N, and reactions are reported in newtons.

The global system is symmetric positive definite after boundary conditions
and has half-bandwidth 5, so it is stored in banded form and solved with a
banded Cholesky factorization.  Supports: the apex node is held on the axis
(Ur = 0, beta = 0 by symmetry); the rim is either clamped (Ur = Uz = 0,
beta = 0) or pinned (Ur = Uz = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .errors import InputDomainError, MeshError, SolverError
from .geometry import CapGeometry
from .materials import Material

HALF_BANDWIDTH = 5
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)
_N_TO_PA_UM2 = 1.0e-12  # 1 Pa * um^2 in newtons

BOUNDARY_CONDITIONS = ("clamped", "pinned")


@dataclass(frozen=True, eq=False)
class ShellMesh:
    """Meridian nodes of a shell of revolution, apex first.

    ``r_um`` must start at the axis and increase strictly; ``z_um`` is the
    axial coordinate.  ``phi_rad`` optionally carries the spherical meridian
    angle per node when the mesh samples a cap.  Arc length ``s_um`` is
    accumulated from the apex.
    """

    r_um: np.ndarray
    z_um: np.ndarray
    phi_rad: np.ndarray | None = None

    def __post_init__(self) -> None:
        r = np.asarray(self.r_um, dtype=float)
        z = np.asarray(self.z_um, dtype=float)
        object.__setattr__(self, "r_um", r)
        object.__setattr__(self, "z_um", z)
        if r.ndim != 1 or z.shape != r.shape:
            raise MeshError("r_um and z_um must be 1-D arrays of equal length")
        if r.size < 5:
            raise MeshError(
                f"mesh needs at least 4 elements (5 nodes), got {r.size - 1} elements"
            )
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(z))):
            raise MeshError("mesh coordinates must be finite")
        scale = float(np.max(np.abs(r)) + np.max(np.abs(z)))
        if abs(r[0]) > 1e-9 * scale:
            raise MeshError(f"first node must sit on the axis, r[0]={r[0]!r}")
        if np.any(np.diff(r) <= 0.0):
            raise MeshError("node radii must increase strictly from apex to rim")
        seg = np.hypot(np.diff(r), np.diff(z))
        if np.any(seg <= 0.0):
            raise MeshError("mesh contains a zero-length element")
        s = np.concatenate([[0.0], np.cumsum(seg)])
        object.__setattr__(self, "_s_um", s)
        if self.phi_rad is not None:
            phi = np.asarray(self.phi_rad, dtype=float)
            object.__setattr__(self, "phi_rad", phi)
            if phi.shape != r.shape:
                raise MeshError("phi_rad must match the node arrays")
            if abs(phi[0]) > 1e-15 or np.any(np.diff(phi) <= 0.0):
                raise MeshError("phi_rad must start at 0 and increase strictly")

    @property
    def s_um(self) -> np.ndarray:
        return self._s_um

    @property
    def n_nodes(self) -> int:
        return int(self.r_um.size)

    @property
    def n_elements(self) -> int:
        return self.n_nodes - 1

    @property
    def n_dof(self) -> int:
        return 3 * self.n_nodes

    def node_frames(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-node unit tangent (Tr, Tz) toward the rim and outward normal.

        Uses the stored meridian angles when present, otherwise averaged
        element directions.
        """
        if self.phi_rad is not None:
            t = np.column_stack([np.cos(self.phi_rad), -np.sin(self.phi_rad)])
        else:
            dr = np.diff(self.r_um)
            dz = np.diff(self.z_um)
            seg = np.hypot(dr, dz)
            et = np.column_stack([dr / seg, dz / seg])
            t = np.empty((self.n_nodes, 2))
            t[0] = et[0]
            t[-1] = et[-1]
            mid = et[:-1] + et[1:]
            mid /= np.linalg.norm(mid, axis=1, keepdims=True)
            t[1:-1] = mid
        n = np.column_stack([-t[:, 1], t[:, 0]])
        return t, n


def mesh_cap(geometry: CapGeometry, n_elements: int) -> ShellMesh:
    """Uniform-angle mesh of a spherical cap, apex to rim."""
    n = int(n_elements)
    if n < 4:
        raise MeshError(f"n_elements must be at least 4, got {n_elements!r}")
    a = geometry.radius_um
    alpha = geometry.base_angle_rad
    phi = np.linspace(0.0, alpha, n + 1)
    r = a * np.sin(phi)
    z = a * (np.cos(phi) - math.cos(alpha))
    return ShellMesh(r_um=r, z_um=z, phi_rad=phi)


def _check_solve_args(thickness_um: float, pressure_pa: float, bc: str) -> None:
    t = float(thickness_um)
    if not math.isfinite(t) or t <= 0.0:
        raise InputDomainError(f"thickness_um must be finite and positive, got {t!r}")
    p = float(pressure_pa)
    if not math.isfinite(p) or p < 0.0:
        raise InputDomainError(f"pressure_pa must be finite and non-negative, got {p!r}")
    if bc not in BOUNDARY_CONDITIONS:
        raise InputDomainError(f"bc must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")


def _element_matrices(
    mesh: ShellMesh, thickness_um: float, material: Material, pressure_pa: float
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked global-frame element stiffnesses (n_el, 6, 6) and loads (n_el, 6)."""
    r = mesh.r_um
    z = mesh.z_um
    r1, r2 = r[:-1], r[1:]
    z1, z2 = z[:-1], z[1:]
    dr = r2 - r1
    dz = z2 - z1
    length = np.hypot(dr, dz)
    tr = dr / length
    tz = dz / length
    nr = -tz
    nz = tr

    e_mod = material.youngs_modulus_pa
    nu = material.poisson_ratio
    t = float(thickness_um)
    c_m = e_mod * t / (1.0 - nu * nu)
    d_b = e_mod * t**3 / (12.0 * (1.0 - nu * nu))
    dhat = np.array([[1.0, nu], [nu, 1.0]])

    n_el = mesh.n_elements
    xi = 0.5 * (_GAUSS_X + 1.0)  # (4,)
    jac = length / 2.0  # (n_el,)
    # Radius at each Gauss point, (n_el, 4).
    r_g = r1[:, None] + (xi[None, :] * length[:, None]) * tr[:, None]

    ell = length[:, None]
    h = np.stack(
        [
            np.broadcast_to(1.0 - 3.0 * xi**2 + 2.0 * xi**3, (n_el, 4)),
            ell * (xi - 2.0 * xi**2 + xi**3),
            np.broadcast_to(3.0 * xi**2 - 2.0 * xi**3, (n_el, 4)),
            ell * (-(xi**2) + xi**3),
        ],
        axis=-1,
    )  # (n_el, 4, 4): gauss x Hermite shape
    dh = (
        np.stack(
            [
                np.broadcast_to(-6.0 * xi + 6.0 * xi**2, (n_el, 4)),
                ell * (1.0 - 4.0 * xi + 3.0 * xi**2),
                np.broadcast_to(6.0 * xi - 6.0 * xi**2, (n_el, 4)),
                ell * (-2.0 * xi + 3.0 * xi**2),
            ],
            axis=-1,
        )
        / ell[..., None]
    )
    d2h = (
        np.stack(
            [
                np.broadcast_to(-6.0 + 12.0 * xi, (n_el, 4)),
                ell * (-4.0 + 6.0 * xi),
                np.broadcast_to(6.0 - 12.0 * xi, (n_el, 4)),
                ell * (-2.0 + 6.0 * xi),
            ],
            axis=-1,
        )
        / ell[..., None] ** 2
    )

    w_slots = [1, 2, 4, 5]
    bm = np.zeros((n_el, 4, 2, 6))
    bb = np.zeros((n_el, 4, 2, 6))
    inv_l = 1.0 / length
    bm[:, :, 0, 0] = -inv_l[:, None]
    bm[:, :, 0, 3] = inv_l[:, None]
    bm[:, :, 1, 0] = (1.0 - xi)[None, :] * tr[:, None] / r_g
    bm[:, :, 1, 3] = xi[None, :] * tr[:, None] / r_g
    bm[:, :, 1, w_slots] = h * (nr[:, None] / r_g)[..., None]
    bb[:, :, 0, w_slots] = -d2h
    bb[:, :, 1, w_slots] = -dh * (tr[:, None] / r_g)[..., None]

    # 2 pi r weight per Gauss point.
    wgt = 2.0 * math.pi * _GAUSS_W[None, :] * jac[:, None] * r_g  # (n_el, 4)
    km = np.einsum("egai,ab,egbj,eg->eij", bm, dhat, bm, wgt, optimize=True)
    kb = np.einsum("egai,ab,egbj,eg->eij", bb, dhat, bb, wgt, optimize=True)
    k_local = c_m * km + d_b * kb

    f_local = np.zeros((n_el, 6))
    fw = np.einsum("ega,eg->ea", h, wgt)
    f_local[:, w_slots] = -float(pressure_pa) * fw

    # Rotate nodal (u, w, beta) local dofs to global (Ur, Uz, beta).
    lam = np.zeros((n_el, 6, 6))
    for base in (0, 3):
        lam[:, base + 0, base + 0] = tr
        lam[:, base + 0, base + 1] = tz
        lam[:, base + 1, base + 0] = nr
        lam[:, base + 1, base + 1] = nz
        lam[:, base + 2, base + 2] = 1.0
    k_global = np.einsum("eai,eab,ebj->eij", lam, k_local, lam, optimize=True)
    f_global = np.einsum("ea,eaj->ej", f_local, lam)

    bad = ~np.isfinite(k_global).all(axis=(1, 2))
    if np.any(bad):
        raise SolverError(
            f"element {int(np.argmax(bad))} produced a non-finite stiffness"
        )
    return k_global, f_global


_TRIU_A, _TRIU_B = np.triu_indices(6)


def assemble_system(
    mesh: ShellMesh, thickness_um: float, material: Material, pressure_pa: float
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the unconstrained banded stiffness (upper form) and load.

    The banded layout is scipy's: ab[HALF_BANDWIDTH + i - j, j] = K[i, j]
    for i <= j.
    """
    k_el, f_el = _element_matrices(mesh, thickness_um, material, pressure_pa)
    n_dof = mesh.n_dof
    ab = np.zeros((HALF_BANDWIDTH + 1, n_dof))
    base = 3 * np.arange(mesh.n_elements)
    rows = HALF_BANDWIDTH + _TRIU_A - _TRIU_B  # (21,)
    cols = base[:, None] + _TRIU_B[None, :]  # (n_el, 21)
    vals = k_el[:, _TRIU_A, _TRIU_B]
    np.add.at(ab, (np.broadcast_to(rows, cols.shape), cols), vals)

    f = np.zeros(n_dof)
    np.add.at(f, base[:, None] + np.arange(6)[None, :], f_el)
    return ab, f


def band_to_dense(ab: np.ndarray) -> np.ndarray:
    """Expand a symmetric upper-banded matrix to dense form (for checks)."""
    hb = ab.shape[0] - 1
    n = ab.shape[1]
    dense = np.zeros((n, n))
    for off in range(hb + 1):
        vals = ab[hb - off, off:]
        idx = np.arange(n - off)
        dense[idx, idx + off] = vals
        dense[idx + off, idx] = vals
    return dense


def _band_matvec(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    hb = ab.shape[0] - 1
    y = ab[hb] * x
    for off in range(1, hb + 1):
        vals = ab[hb - off, off:]
        y[:-off] += vals * x[off:]
        y[off:] += vals * x[:-off]
    return y


def fixed_dofs(n_nodes: int, bc: str) -> tuple[int, ...]:
    """Constrained global dofs: axis symmetry at the apex plus the rim support."""
    rim = 3 * (n_nodes - 1)
    fixed = [0, 2, rim, rim + 1]
    if bc == "clamped":
        fixed.append(rim + 2)
    return tuple(sorted(fixed))


def _apply_bc(ab: np.ndarray, f: np.ndarray, fixed: tuple[int, ...]) -> float:
    """Zero rows/columns of the fixed dofs in place; returns the diagonal scale."""
    hb = ab.shape[0] - 1
    n = ab.shape[1]
    scale = float(np.mean(np.abs(ab[hb])))
    if scale == 0.0:
        scale = 1.0
    for k in fixed:
        ab[:hb, k] = 0.0
        for off in range(1, hb + 1):
            if k + off < n:
                ab[hb - off, k + off] = 0.0
        ab[hb, k] = scale
        f[k] = 0.0
    return scale


@dataclass(frozen=True, eq=False)
class FemSolution:
    """Nodal solution of one load case plus solve diagnostics."""

    mesh: ShellMesh
    thickness_um: float
    material: Material
    pressure_pa: float
    bc: str
    u_r_um: np.ndarray
    u_z_um: np.ndarray
    rotation_rad: np.ndarray
    apex_deflection_um: float
    rim_reaction_vertical_n: float
    applied_vertical_load_n: float
    equilibrium_residual: float
    condition_estimate: float

    def local_components(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-node meridional u and outward-normal w displacements in um."""
        t, n = self.mesh.node_frames()
        u = self.u_r_um * t[:, 0] + self.u_z_um * t[:, 1]
        w = self.u_r_um * n[:, 0] + self.u_z_um * n[:, 1]
        return u, w

    def write_csv(self, target: str | Path | IO[str]) -> None:
        """Write phi_deg, u_um, w_um, rotation_rad per node."""
        if self.mesh.phi_rad is not None:
            phi_deg = np.degrees(self.mesh.phi_rad)
        else:
            t, _ = self.mesh.node_frames()
            phi_deg = np.degrees(np.arctan2(-t[:, 1], t[:, 0]))
        u, w = self.local_components()
        lines = ["phi_deg,u_um,w_um,rotation_rad\n"]
        lines += [
            f"{p:.12g},{ui:.12g},{wi:.12g},{bi:.12g}\n"
            for p, ui, wi, bi in zip(phi_deg, u, w, self.rotation_rad)
        ]
        text = "".join(lines)
        if hasattr(target, "write"):
            target.write(text)
        else:
            Path(target).write_text(text, encoding="utf-8")


def solve_case(
    mesh: ShellMesh,
    thickness_um: float,
    material: Material,
    pressure_pa: float,
    bc: str = "clamped",
) -> FemSolution:
    """Solve one static load case on a given mesh.

    Raises SolverError if the constrained system is not positive definite
    (which signals a modelling defect, not a load regime).
    """
    _check_solve_args(thickness_um, pressure_pa, bc)
    ab0, f0 = assemble_system(mesh, thickness_um, material, pressure_pa)
    ab = ab0.copy()
    f = f0.copy()
    fixed = fixed_dofs(mesh.n_nodes, bc)
    _apply_bc(ab, f, fixed)
    try:
        factor = cholesky_banded(ab, lower=False)
    except LinAlgError as exc:
        raise SolverError(f"stiffness factorization failed: {exc}") from exc
    cdiag = factor[-1]
    condition = float((cdiag.max() / cdiag.min()) ** 2)
    d = cho_solve_banded((factor, False), f)
    if not np.all(np.isfinite(d)):
        raise SolverError("solver produced non-finite displacements")

    # Reactions from the unconstrained operator: R = K0 d - f0 at supports.
    reactions = _band_matvec(ab0, d) - f0
    rim_uz = 3 * (mesh.n_nodes - 1) + 1
    rim_vertical_n = float(reactions[rim_uz]) * _N_TO_PA_UM2
    # Axial resultant of uniform normal pressure is P times the projected
    # area pi b^2 regardless of the meridian shape; the rim support carries
    # all of it, which is the global equilibrium statement checked here.
    b = float(mesh.r_um[-1])
    applied_n = float(pressure_pa) * math.pi * b * b * _N_TO_PA_UM2
    if applied_n != 0.0:
        residual = abs(rim_vertical_n - applied_n) / abs(applied_n)
    else:
        residual = 0.0

    u_r = d[0::3]
    u_z = d[1::3]
    beta = d[2::3]
    return FemSolution(
        mesh=mesh,
        thickness_um=float(thickness_um),
        material=material,
        pressure_pa=float(pressure_pa),
        bc=bc,
        u_r_um=u_r,
        u_z_um=u_z,
        rotation_rad=beta,
        apex_deflection_um=float(abs(u_z[0])),
        rim_reaction_vertical_n=rim_vertical_n,
        applied_vertical_load_n=applied_n,
        equilibrium_residual=residual,
        condition_estimate=condition,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Apex deflection across a mesh refinement ladder."""

    bc: str
    levels: tuple[int, ...]
    apex_um: tuple[float, ...]
    diffs_um: tuple[float, ...]
    observed_orders: tuple[float, ...]
    extrapolated_um: float
    contraction: bool

    @property
    def observed_order(self) -> float | None:
        return self.observed_orders[-1] if self.observed_orders else None

    @property
    def final_relative_change(self) -> float:
        if not self.diffs_um or self.apex_um[-1] == 0.0:
            return 0.0
        return abs(self.diffs_um[-1]) / abs(self.apex_um[-1])

    def to_json_dict(self) -> dict:
        return {
            "bc": self.bc,
            "levels": list(self.levels),
            "apex_um": list(self.apex_um),
            "diffs_um": list(self.diffs_um),
            "observed_orders": list(self.observed_orders),
            "observed_order": self.observed_order,
            "extrapolated_um": self.extrapolated_um,
            "final_relative_change": self.final_relative_change,
            "contraction": self.contraction,
        }


def converge(
    geometry: CapGeometry,
    thickness_um: float,
    material: Material,
    pressure_pa: float,
    bc: str = "clamped",
    n_levels: int = 4,
    n_start: int = 32,
) -> ConvergenceReport:
    """Run a doubling refinement ladder and Richardson-extrapolate the apex.

    Non-monotone behaviour across levels is reported through the
    ``contraction`` flag rather than raised, since a ladder that has hit
    roundoff still carries useful information.
    """
    if int(n_levels) < 3:
        raise InputDomainError(f"n_levels must be at least 3, got {n_levels!r}")
    if int(n_start) < 4:
        raise InputDomainError(f"n_start must be at least 4, got {n_start!r}")
    levels = tuple(int(n_start) * 2**k for k in range(int(n_levels)))
    apex = []
    for n in levels:
        sol = solve_case(mesh_cap(geometry, n), thickness_um, material, pressure_pa, bc)
        apex.append(sol.apex_deflection_um)
    diffs = tuple(b - a for a, b in zip(apex, apex[1:]))
    orders = []
    for d_prev, d_next in zip(diffs, diffs[1:]):
        if d_next != 0.0 and d_prev != 0.0 and abs(d_next) < abs(d_prev):
            orders.append(math.log2(abs(d_prev) / abs(d_next)))
    contraction = all(
        abs(d_next) <= abs(d_prev) for d_prev, d_next in zip(diffs, diffs[1:])
    )
    if orders and diffs[-1] != 0.0:
        rate = 2.0 ** orders[-1]
        extrapolated = apex[-1] + diffs[-1] / (rate - 1.0)
    else:
        extrapolated = apex[-1]
    return ConvergenceReport(
        bc=bc,
        levels=levels,
        apex_um=tuple(apex),
        diffs_um=diffs,
        observed_orders=tuple(orders),
        extrapolated_um=float(extrapolated),
        contraction=contraction,
    )
