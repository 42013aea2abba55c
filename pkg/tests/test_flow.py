import math

import numpy as np
import pytest

from pipemc import flow as fl
from pipemc.errors import ConvergenceError, DivergenceError, ValidationError
from pipemc.flow import (FlowBC, FluidProps, SolverSettings, TurbulenceConstants, eddy_viscosity,
                         inlet_turbulence, load_flow, reynolds_number, save_flow,
                         solve_steady_flow, two_state_fields)
from pipemc.geometry import INLET1, INLET2, OUTLET, build_duct_mesh

# oracle constants evaluated by hand from the closed forms
EPS_INLET_1MS = 0.09 ** 0.75 * 0.00375 ** 1.5 / (0.07 * 0.15)      # 4.8092e-4
MU_T_INLET_1MS = 1.225 * 0.09 * 0.00375 ** 2 / EPS_INLET_1MS


def test_props_defaults():
    p = FluidProps()
    assert (p.rho_air, p.rho_voc, p.mu_air, p.mu_voc, p.mu_mix) == (1.225, 2.0, 1.7894e-5, 33.1e-5, 1.72e-5)
    assert (p.D_voc_air, p.MW_voc, p.MW_air, p.p_op) == (1.2e-5, 58.08, 28.96, 101325.0)
    c = TurbulenceConstants()
    assert (c.C_mu, c.C1_eps, c.C2_eps, c.C3_eps, c.sigma_k, c.sigma_eps) == (0.09, 1.44, 1.92, 0.0, 1.0, 1.3)


def test_props_reject_nonpositive():
    with pytest.raises(ValidationError, match="rho_air"):
        FluidProps(rho_air=0.0)


@pytest.mark.parametrize("u, expected", [(1.0, 10683), (5.0, 53415), (0.0, 0)])
def test_reynolds_number(u, expected):
    # "within integer rounding": 53,415.6 is quoted as 53,415
    assert abs(reynolds_number(FluidProps(), u, 0.15) - expected) < 1.0


def test_inlet_turbulence():
    k, eps = inlet_turbulence(0.05, 1.0, 0.15)
    assert math.isclose(k, 0.00375, rel_tol=1e-14)
    assert math.isclose(eps, EPS_INLET_1MS, rel_tol=1e-14)
    assert inlet_turbulence(0.05, 0.0, 0.15) == (fl.K_FLOOR, fl.EPS_FLOOR)


def test_eddy_viscosity():
    assert math.isclose(eddy_viscosity(1.225, 0.01, 0.01), 1.1025e-3, rel_tol=1e-14)
    assert eddy_viscosity(1.225, 0.0, 0.01) == 0.0
    assert math.isclose(eddy_viscosity(1.225, 0.00375, EPS_INLET_1MS), MU_T_INLET_1MS, rel_tol=1e-14)
    # non-positive eps falls back to the floor rather than dividing by zero
    assert math.isfinite(eddy_viscosity(1.225, 0.01, 0.0))


@pytest.mark.parametrize("kw", [dict(V1=0.0), dict(V1=1.0, V2_on=-1.0), dict(V1=1.0, intensity=1.0)])
def test_flowbc_rejects(kw):
    with pytest.raises(ValidationError):
        FlowBC(**kw)


@pytest.fixture(scope="module")
def duct():
    return build_duct_mesh(0.15, 1.0, 0.03)


@pytest.fixture(scope="module")
def duct_flow(duct):
    return solve_steady_flow(duct, FlowBC(V1=1.0))


def test_duct_outlet_speed_and_profile(duct, duct_flow):
    f = duct_flow
    assert abs(f.outlet_mean_speed() - 1.0) <= 1e-6
    out = duct.boundary_faces(OUTLET)
    cells = duct.bface_cell[out]
    centre = np.argmin(np.linalg.norm(duct.bface_center[out, :2] - 0.075, axis=1))
    assert f.u[cells[centre], 2] > f.outlet_mean_speed()


def test_duct_mass_balance_and_floors(duct_flow):
    f = duct_flow
    assert f.mass_imbalance() <= 1e-6
    assert -f.boundary_flux(INLET1) == pytest.approx(1.225 * 0.15 ** 2 * 1.0, rel=1e-12)
    assert np.all(f.k >= fl.K_FLOOR) and np.all(f.eps >= fl.EPS_FLOOR) and np.all(f.mu_t >= 0)
    assert max(f.residuals.values()) < 1e-6


def test_duct_mirror_symmetry(duct, duct_flow):
    f = duct_flow
    nx, ny, nz = duct.shape
    idx = duct.cell_index
    w = f.u[:, 2]
    for mirror in (idx[::-1, :, :], idx[:, ::-1, :]):
        diff = np.abs(w[idx.ravel()] - w[mirror.ravel()]).max()
        assert diff <= 1e-4 * np.abs(w).max()


def test_deterministic(duct, duct_flow):
    again = solve_steady_flow(duct, FlowBC(V1=1.0))
    for name in ("u", "p", "k", "eps", "face_flux", "bface_flux"):
        assert np.array_equal(getattr(again, name), getattr(duct_flow, name))


def test_field_is_frozen(duct_flow):
    with pytest.raises(ValueError):
        duct_flow.u[0, 0] = 1.0


def test_save_load_roundtrip(tmp_path, duct, duct_flow):
    path = tmp_path / "f.npz"
    save_flow(path, duct_flow)
    back = load_flow(path, duct)
    assert np.array_equal(back.face_flux, duct_flow.face_flux)
    assert back.rho == duct_flow.rho and back.inlet2_open == duct_flow.inlet2_open
    with pytest.raises(ValidationError):
        load_flow(path, build_duct_mesh(0.15, 0.6, 0.03))


def test_two_state_identical_without_branch_flow(duct):
    on, off = two_state_fields(duct, FlowBC(V1=1.0))
    assert np.array_equal(on.u, off.u)


def test_nonconvergence_carries_residuals(duct):
    with pytest.raises(ConvergenceError) as info:
        solve_steady_flow(duct, FlowBC(V1=1.0), settings=SolverSettings(max_iter=12))
    assert set(info.value.residuals) >= {"continuity", "x-velocity", "k", "epsilon"}


def test_divergence_names_equation(duct, monkeypatch):
    def broken(A, b, **kw):
        return np.full_like(b, np.nan), 0
    monkeypatch.setattr(fl, "bicgstab", broken)
    with pytest.raises(DivergenceError) as info:
        solve_steady_flow(duct, FlowBC(V1=1.0))
    assert info.value.equation == "momentum"


def test_branch_state_fluxes(flows):
    on, off = flows(5.0, 5.0)
    assert -on.boundary_flux(INLET2) == pytest.approx(2.0 * 0.15 ** 2 * 5.0, rel=1e-6)
    inflow = -(on.boundary_flux(INLET1) + on.boundary_flux(INLET2))
    assert on.boundary_flux(OUTLET) == pytest.approx(inflow, rel=1e-6)
    assert off.boundary_flux(INLET2) == 0.0
    assert off.mass_imbalance() <= 1e-6 and on.mass_imbalance() <= 1e-6
