import io
import math

import numpy as np
import pytest

import globtop as gt
from globtop import fem
from globtop.errors import InputDomainError, MeshError

# Frozen apex deflections for the stiffest material at 150 um / 100 atm on
# the preset geometry, 256 elements.  These pin regressions; the physics
# checks below are the plate benchmark, equilibrium, and the mesh ladder.
APEX_CLAMPED_256 = 4.312941887711637
APEX_PINNED_256 = 4.376790433550487


@pytest.fixture(scope="module")
def cap_mesh(reference_cap):
    return fem.mesh_cap(reference_cap, 256)


@pytest.fixture(scope="module")
def coarse_mesh(reference_cap):
    return fem.mesh_cap(reference_cap, 8)


@pytest.fixture(scope="module")
def clamped_256(cap_mesh, cer):
    return fem.solve_case(cap_mesh, 150.0, cer, gt.atm_to_pa(100.0), bc="clamped")


def flat_mesh(radius_um: float, n_elements: int) -> fem.ShellMesh:
    r = np.linspace(0.0, radius_um, n_elements + 1)
    return fem.ShellMesh(r_um=r, z_um=np.zeros(n_elements + 1))


class TestMeshValidation:
    def test_too_few_nodes(self):
        with pytest.raises(MeshError, match="at least 4 elements"):
            fem.ShellMesh(r_um=np.array([0.0, 1.0, 2.0]), z_um=np.zeros(3))

    def test_first_node_off_axis(self):
        r = np.linspace(10.0, 100.0, 6)
        with pytest.raises(MeshError, match="axis"):
            fem.ShellMesh(r_um=r, z_um=np.zeros(6))

    def test_radii_must_increase(self):
        r = np.array([0.0, 2.0, 1.5, 3.0, 4.0, 5.0])
        with pytest.raises(MeshError, match="increase"):
            fem.ShellMesh(r_um=r, z_um=np.zeros(6))

    def test_non_finite_coordinates(self):
        r = np.linspace(0.0, 5.0, 6)
        z = np.zeros(6)
        z[3] = np.nan
        with pytest.raises(MeshError, match="finite"):
            fem.ShellMesh(r_um=r, z_um=z)

    def test_shape_mismatch(self):
        with pytest.raises(MeshError):
            fem.ShellMesh(r_um=np.linspace(0.0, 5.0, 6), z_um=np.zeros(7))

    def test_phi_shape_and_monotonicity(self):
        r = np.linspace(0.0, 5.0, 6)
        with pytest.raises(MeshError, match="phi_rad"):
            fem.ShellMesh(r_um=r, z_um=np.zeros(6), phi_rad=np.zeros(5))
        bad_phi = np.array([0.0, 0.2, 0.1, 0.3, 0.4, 0.5])
        with pytest.raises(MeshError, match="increase"):
            fem.ShellMesh(r_um=r, z_um=np.zeros(6), phi_rad=bad_phi)


class TestMeshCap:
    def test_node_layout(self, reference_cap):
        mesh = fem.mesh_cap(reference_cap, 64)
        a = reference_cap.radius_um
        alpha = reference_cap.base_angle_rad
        assert mesh.n_nodes == 65
        assert mesh.n_elements == 64
        assert mesh.n_dof == 195
        assert mesh.phi_rad[0] == 0.0
        assert mesh.phi_rad[-1] == alpha
        assert mesh.r_um[0] == 0.0
        assert mesh.r_um[-1] == pytest.approx(a * math.sin(alpha), rel=1e-14)
        assert mesh.z_um[-1] == pytest.approx(0.0, abs=1e-9 * a)
        assert mesh.z_um[0] == pytest.approx(reference_cap.rise_um, rel=1e-9)

    def test_arc_length_accumulates(self, coarse_mesh, reference_cap):
        s = coarse_mesh.s_um
        assert s[0] == 0.0
        assert np.all(np.diff(s) > 0.0)
        # Chord length of a uniformly subdivided arc approaches a*alpha.
        arc = reference_cap.radius_um * reference_cap.base_angle_rad
        assert s[-1] == pytest.approx(arc, rel=1e-3)

    def test_too_few_elements(self, reference_cap):
        with pytest.raises(MeshError):
            fem.mesh_cap(reference_cap, 3)


class TestNodeFrames:
    def test_cap_frames_are_analytic(self, coarse_mesh):
        t, n = coarse_mesh.node_frames()
        phi = coarse_mesh.phi_rad
        assert np.allclose(t[:, 0], np.cos(phi), atol=1e-15)
        assert np.allclose(t[:, 1], -np.sin(phi), atol=1e-15)
        assert np.allclose(np.einsum("ij,ij->i", t, n), 0.0, atol=1e-16)
        assert np.allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-15)

    def test_flat_frames_from_segments(self):
        mesh = flat_mesh(100.0, 8)
        t, n = mesh.node_frames()
        assert np.array_equal(t, np.tile([1.0, 0.0], (9, 1)))
        assert np.array_equal(n, np.tile([0.0, 1.0], (9, 1)))


class TestAssembly:
    def test_stiffness_is_symmetric(self, coarse_mesh, cer):
        ab, _ = fem.assemble_system(coarse_mesh, 150.0, cer, 1.0e6)
        dense = fem.band_to_dense(ab)
        assert np.array_equal(dense, dense.T)

    def test_band_matvec_matches_dense(self, coarse_mesh, cer):
        ab, _ = fem.assemble_system(coarse_mesh, 150.0, cer, 1.0e6)
        dense = fem.band_to_dense(ab)
        rng = np.random.default_rng(7)
        x = rng.standard_normal(ab.shape[1])
        got = fem._band_matvec(ab, x)
        want = dense @ x
        assert np.allclose(got, want, rtol=1e-13, atol=1e-6 * np.max(np.abs(want)))

    def test_load_vector_shape_and_direction(self, coarse_mesh, cer):
        _, f = fem.assemble_system(coarse_mesh, 150.0, cer, 1.0e6)
        assert f.shape == (coarse_mesh.n_dof,)
        # Net axial load must be downward (negative z) for positive pressure.
        assert float(f[1::3].sum()) < 0.0

    def test_fixed_dofs(self):
        assert fem.fixed_dofs(65, "clamped") == (0, 2, 192, 193, 194)
        assert fem.fixed_dofs(65, "pinned") == (0, 2, 192, 193)


class TestPlateBenchmark:
    """Flat-disk limit against classical thin-plate bending closed forms."""

    R = 1000.0
    T = 10.0
    Q = 1000.0
    NU = 0.3

    @pytest.fixture(scope="class")
    @staticmethod
    def plate_material():
        return gt.Material("plate probe", 70.0, TestPlateBenchmark.NU)

    def center_theory(self, bc: str) -> float:
        e_pa = 70.0e9
        d = e_pa * self.T**3 / (12.0 * (1.0 - self.NU**2))
        w = self.Q * self.R**4 / (64.0 * d)
        if bc == "pinned":
            w *= (5.0 + self.NU) / (1.0 + self.NU)
        return w

    @pytest.mark.parametrize("bc", ["clamped", "pinned"])
    def test_center_deflection(self, plate_material, bc):
        mesh = flat_mesh(self.R, 64)
        sol = fem.solve_case(mesh, self.T, plate_material, self.Q, bc=bc)
        assert sol.u_z_um[0] < 0.0
        assert abs(sol.u_z_um[0]) == pytest.approx(self.center_theory(bc), rel=1e-7)

    def test_support_ratio(self, plate_material):
        mesh = flat_mesh(self.R, 64)
        w_cl = fem.solve_case(mesh, self.T, plate_material, self.Q, "clamped")
        w_ss = fem.solve_case(mesh, self.T, plate_material, self.Q, "pinned")
        ratio = w_ss.apex_deflection_um / w_cl.apex_deflection_um
        assert ratio == pytest.approx((5.0 + self.NU) / (1.0 + self.NU), rel=1e-7)


class TestCapSolution:
    def test_frozen_apex_values(self, clamped_256, cap_mesh, cer):
        assert clamped_256.apex_deflection_um == pytest.approx(
            APEX_CLAMPED_256, rel=1e-10
        )
        pinned = fem.solve_case(cap_mesh, 150.0, cer, gt.atm_to_pa(100.0), "pinned")
        assert pinned.apex_deflection_um == pytest.approx(APEX_PINNED_256, rel=1e-10)
        assert pinned.apex_deflection_um > clamped_256.apex_deflection_um

    def test_rim_carries_the_whole_axial_load(self, clamped_256, reference_cap):
        b = reference_cap.radius_um * math.sin(reference_cap.base_angle_rad)
        expected_n = gt.atm_to_pa(100.0) * math.pi * b * b * 1e-12
        assert clamped_256.applied_vertical_load_n == pytest.approx(
            expected_n, rel=1e-12
        )
        assert clamped_256.rim_reaction_vertical_n == pytest.approx(
            expected_n, rel=1e-6
        )
        assert clamped_256.equilibrium_residual < 1e-6

    def test_solution_diagnostics(self, clamped_256):
        assert math.isfinite(clamped_256.condition_estimate)
        assert clamped_256.condition_estimate > 1.0
        assert np.all(np.isfinite(clamped_256.u_r_um))
        assert clamped_256.apex_deflection_um == abs(clamped_256.u_z_um[0])

    def test_apex_boundary_conditions_hold(self, clamped_256):
        assert clamped_256.u_r_um[0] == 0.0
        assert clamped_256.rotation_rad[0] == 0.0
        assert clamped_256.u_r_um[-1] == 0.0
        assert clamped_256.u_z_um[-1] == 0.0
        assert clamped_256.rotation_rad[-1] == 0.0

    def test_pinned_rim_can_rotate(self, cap_mesh, cer):
        pinned = fem.solve_case(cap_mesh, 150.0, cer, gt.atm_to_pa(100.0), "pinned")
        assert pinned.u_r_um[-1] == 0.0
        assert pinned.u_z_um[-1] == 0.0
        assert pinned.rotation_rad[-1] != 0.0


class TestLinearityAndLimits:
    def test_doubling_pressure_scales_exactly(self, cap_mesh, cer):
        s1 = fem.solve_case(cap_mesh, 150.0, cer, 1.0e6)
        s2 = fem.solve_case(cap_mesh, 150.0, cer, 2.0e6)
        assert np.array_equal(s2.u_z_um, 2.0 * s1.u_z_um)
        assert np.array_equal(s2.u_r_um, 2.0 * s1.u_r_um)

    def test_general_pressure_scaling(self, cap_mesh, cer):
        s1 = fem.solve_case(cap_mesh, 150.0, cer, 1.0e6)
        s3 = fem.solve_case(cap_mesh, 150.0, cer, 3.7e6)
        scale = np.max(np.abs(s1.u_z_um))
        assert np.max(np.abs(s3.u_z_um - 3.7 * s1.u_z_um)) <= 1e-10 * 3.7 * scale

    def test_zero_pressure_is_identically_zero(self, cap_mesh, cer):
        s0 = fem.solve_case(cap_mesh, 150.0, cer, 0.0)
        assert not np.any(s0.u_r_um)
        assert not np.any(s0.u_z_um)
        assert not np.any(s0.rotation_rad)
        assert s0.apex_deflection_um == 0.0
        assert s0.equilibrium_residual == 0.0


class TestSolveArguments:
    def test_unknown_support(self, coarse_mesh, cer):
        with pytest.raises(InputDomainError, match="bc"):
            fem.solve_case(coarse_mesh, 150.0, cer, 1.0e6, bc="welded")

    @pytest.mark.parametrize("t", [0.0, -1.0, float("nan")])
    def test_bad_thickness(self, coarse_mesh, cer, t):
        with pytest.raises(InputDomainError):
            fem.solve_case(coarse_mesh, t, cer, 1.0e6)

    @pytest.mark.parametrize("p", [-1.0, float("inf"), float("nan")])
    def test_bad_pressure(self, coarse_mesh, cer, p):
        with pytest.raises(InputDomainError):
            fem.solve_case(coarse_mesh, 150.0, cer, p)


class TestAgainstDenseSolve:
    def test_banded_path_matches_reduced_dense_system(self, coarse_mesh, cer):
        p = gt.atm_to_pa(100.0)
        ab, f = fem.assemble_system(coarse_mesh, 150.0, cer, p)
        dense = fem.band_to_dense(ab)
        fixed = fem.fixed_dofs(coarse_mesh.n_nodes, "clamped")
        keep = np.setdiff1d(np.arange(coarse_mesh.n_dof), fixed)
        d_red = np.linalg.solve(dense[np.ix_(keep, keep)], f[keep])
        full = np.zeros(coarse_mesh.n_dof)
        full[keep] = d_red
        sol = fem.solve_case(coarse_mesh, 150.0, cer, p, "clamped")
        assert abs(full[1]) == pytest.approx(sol.apex_deflection_um, rel=1e-9)
        assert np.allclose(full[1::3], sol.u_z_um, rtol=1e-9, atol=1e-12)


class TestConvergenceLadder:
    def test_default_ladder(self, reference_cap, cer):
        report = gt.converge(reference_cap, 150.0, cer, gt.atm_to_pa(100.0))
        assert report.levels == (32, 64, 128, 256)
        assert report.contraction
        assert 1.7 <= report.observed_order <= 2.3
        assert report.final_relative_change < 1e-4
        assert report.extrapolated_um == pytest.approx(
            report.apex_um[-1], rel=1e-5
        )
        # Each refinement moves the apex toward the extrapolated limit.
        gaps = [abs(a - report.extrapolated_um) for a in report.apex_um]
        assert all(hi > lo for hi, lo in zip(gaps, gaps[1:]))

    def test_json_shape(self, reference_cap, cer):
        report = gt.converge(
            reference_cap, 150.0, cer, gt.atm_to_pa(100.0), n_levels=3, n_start=8
        )
        doc = report.to_json_dict()
        assert doc["levels"] == [8, 16, 32]
        assert len(doc["apex_um"]) == 3
        assert len(doc["diffs_um"]) == 2
        assert doc["contraction"] in (True, False)
        assert set(doc) == {
            "bc",
            "levels",
            "apex_um",
            "diffs_um",
            "observed_orders",
            "observed_order",
            "extrapolated_um",
            "final_relative_change",
            "contraction",
        }

    def test_ladder_argument_validation(self, reference_cap, cer):
        with pytest.raises(InputDomainError):
            gt.converge(reference_cap, 150.0, cer, 1.0e6, n_levels=2)
        with pytest.raises(InputDomainError):
            gt.converge(reference_cap, 150.0, cer, 1.0e6, n_start=2)


class TestSolutionCsv:
    def test_cap_csv(self, clamped_256):
        buf = io.StringIO()
        clamped_256.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "phi_deg,u_um,w_um,rotation_rad"
        assert len(lines) == clamped_256.mesh.n_nodes + 1
        first = [float(v) for v in lines[1].split(",")]
        assert first[0] == 0.0

    def test_local_components_at_apex(self, clamped_256):
        u, w = clamped_256.local_components()
        # At the apex the meridian tangent is radial and the normal axial.
        assert u[0] == pytest.approx(clamped_256.u_r_um[0], abs=1e-15)
        assert abs(w[0]) == pytest.approx(clamped_256.apex_deflection_um, rel=1e-15)
