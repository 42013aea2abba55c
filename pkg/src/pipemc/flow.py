"""
Steady incompressible RANS flow (standard k-epsilon, log-law wall functions)
on the structured duct mesh.

Discretization: cell-centred finite volumes with collocated variables,
first-order upwind convection, SIMPLE pressure-velocity coupling with
Rhie-Chow face fluxes.  Gravity, body forces and volumetric sources are
switched off; the branch emission enters only through the inlet-2 boundary.
"""

from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, bicgstab, cg
import pyamg

from .errors import ConvergenceError, DivergenceError, ValidationError
from .geometry import INLET1, INLET2, OUTLET, WALL

log = logging.getLogger(__name__)

__all__ = [
    "FluidProps", "TurbulenceConstants", "FlowBC", "FlowField", "SolverSettings",
    "reynolds_number", "inlet_turbulence", "eddy_viscosity",
    "solve_steady_flow", "two_state_fields", "write_field_csv", "save_flow", "load_flow", "plug_flow",
    "K_FLOOR", "EPS_FLOOR",
]

K_FLOOR = 1e-10
EPS_FLOOR = 1e-10
KAPPA = 0.4187
E_WALL = 9.793
Y_STAR_LAM = 11.225
MAX_VISCOSITY_RATIO = 1e5


@dataclass(frozen=True)
class FluidProps:
    rho_air: float = 1.225
    rho_voc: float = 2.0
    mu_air: float = 1.7894e-5
    mu_voc: float = 33.1e-5
    mu_mix: float = 1.72e-5
    D_voc_air: float = 1.2e-5
    MW_voc: float = 58.08
    MW_air: float = 28.96
    p_op: float = 101325.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"FluidProps.{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class TurbulenceConstants:
    C_mu: float = 0.09
    C1_eps: float = 1.44
    C2_eps: float = 1.92
    C3_eps: float = 0.0
    sigma_k: float = 1.0
    sigma_eps: float = 1.3


@dataclass(frozen=True)
class FlowBC:
    V1: float
    V2_on: float = 0.0
    intensity: float = 0.05
    Dh_inlet1: float = 0.15
    Dh_inlet2: float = 0.15
    p_outlet: float = 0.0
    p_initial_abs: float = 101325.0

    def __post_init__(self):
        if not self.V1 > 0:
            raise ValidationError(f"V1 must be > 0, got {self.V1}")
        if not self.V2_on >= 0:
            raise ValidationError(f"V2_on must be >= 0, got {self.V2_on}")
        if not 0 < self.intensity < 1:
            raise ValidationError(f"turbulent intensity must lie in (0, 1), got {self.intensity}")


@dataclass(frozen=True)
class SolverSettings:
    alpha_u: float = 0.7
    alpha_p: float = 0.3
    alpha_k: float = 0.5
    tol: float = 1e-6
    max_iter: int = 5000
    min_iter: int = 10


@dataclass(eq=False)
class FlowField:
    """Converged flow state; arrays are frozen after the solve."""
    mesh: object
    u: np.ndarray          # (n, 3) m/s
    p: np.ndarray          # gauge Pa
    k: np.ndarray
    eps: np.ndarray
    mu_t: np.ndarray
    face_flux: np.ndarray  # interior faces, kg/s, owner -> neighbour
    bface_flux: np.ndarray # boundary faces, kg/s, positive outward
    rho: float
    inlet2_open: bool
    iterations: int = 0
    residuals: dict = field(default_factory=dict)
    clip_count: int = 0

    def boundary_flux(self, tag):
        return float(self.bface_flux[self.mesh.bface_tag == tag].sum())

    def mass_imbalance(self):
        """|sum of boundary fluxes| relative to the inflow."""
        inflow = -self.bface_flux[self.bface_flux < 0].sum()
        return abs(self.bface_flux.sum()) / max(inflow, 1e-300)

    def outlet_mean_speed(self):
        idx = self.mesh.boundary_faces(OUTLET)
        return float(self.bface_flux[idx].sum() / (self.rho * self.mesh.bface_area[idx].sum()))

    def freeze(self):
        for name in ("u", "p", "k", "eps", "mu_t", "face_flux", "bface_flux"):
            getattr(self, name).flags.writeable = False
        return self


def reynolds_number(props, u, D):
    """Re = rho_air * u * D / mu_mix."""
    if u < 0 or not D > 0:
        raise ValidationError("reynolds_number needs u >= 0 and D > 0")
    return props.rho_air * u * D / props.mu_mix


def inlet_turbulence(I, U, D_h, consts=TurbulenceConstants()):
    """Inlet k and epsilon from intensity and hydraulic diameter (length scale 0.07 D_h)."""
    if not U > 0:
        return K_FLOOR, EPS_FLOOR
    k = 1.5 * (I * U) ** 2
    eps = consts.C_mu ** 0.75 * k ** 1.5 / (0.07 * D_h)
    return k, eps


def eddy_viscosity(rho, k, eps, consts=TurbulenceConstants()):
    k = np.asarray(k, dtype=float)
    eps = np.maximum(np.asarray(eps, dtype=float), EPS_FLOOR)
    mu_t = rho * consts.C_mu * k ** 2 / eps
    return float(mu_t) if mu_t.ndim == 0 else mu_t


class _Discretization:
    """Geometry-derived arrays reused every iteration."""

    def __init__(self, mesh, bc, props, inlet2_open):
        self.mesh = mesh
        self.n = mesh.n_cells
        self.P = mesh.owner
        self.N = mesh.neighbour
        self.ax = mesh.face_axis
        self.A = mesh.face_area
        self.d = mesh.face_dist
        self.w = mesh.face_weight
        self.V = mesh.volumes

        tag = mesh.bface_tag.copy()
        if not inlet2_open:
            tag[tag == INLET2] = WALL
        self.btag = tag
        self.bc_cell = mesh.bface_cell
        self.b_ax = mesh.bface_axis
        self.b_sign = mesh.bface_sign
        self.bA = mesh.bface_area
        self.bd = mesh.bface_dist

        self.inl = np.flatnonzero((tag == INLET1) | (tag == INLET2))
        self.out = np.flatnonzero(tag == OUTLET)
        self.wall = np.flatnonzero(tag == WALL)

        # inlet values
        nb = len(tag)
        self.b_u = np.zeros((nb, 3))
        self.b_rho = np.full(nb, props.rho_air)
        self.b_k = np.zeros(nb)
        self.b_eps = np.zeros(nb)
        i1 = np.flatnonzero(tag == INLET1)
        i2 = np.flatnonzero(tag == INLET2)
        k1, e1 = inlet_turbulence(bc.intensity, bc.V1, bc.Dh_inlet1)
        k2, e2 = inlet_turbulence(bc.intensity, bc.V2_on, bc.Dh_inlet2)
        for idx, speed, k, e, rho in ((i1, bc.V1, k1, e1, props.rho_air),
                                      (i2, bc.V2_on, k2, e2, props.rho_voc)):
            # inflow velocity points against the outward normal
            self.b_u[idx, self.b_ax[idx]] = -self.b_sign[idx] * speed
            self.b_k[idx] = k
            self.b_eps[idx] = e
            self.b_rho[idx] = rho
        self.b_flux_inlet = -self.b_rho[self.inl] * self.bA[self.inl] * np.abs(
            self.b_u[self.inl, self.b_ax[self.inl]])

        wc = self.bc_cell[self.wall]
        self.wall_cells, self.wall_face_count = np.unique(wc, return_counts=True)
        self.wall_count = np.zeros(self.n)
        self.wall_count[self.wall_cells] = self.wall_face_count

        # sparse pattern: diagonal, then (P,N) and (N,P) off-diagonals
        rows = np.concatenate([np.arange(self.n), self.P, self.N])
        cols = np.concatenate([np.arange(self.n), self.N, self.P])
        pattern = sp.csr_matrix((np.arange(len(rows), dtype=float) + 1, (rows, cols)),
                                shape=(self.n, self.n))
        pattern.sort_indices()
        self._order = pattern.data.astype(np.int64) - 1
        self._indptr = pattern.indptr
        self._indices = pattern.indices

    def matrix(self, diag, off_pn, off_np):
        """CSR matrix from the diagonal and the two off-diagonal face arrays."""
        data = np.concatenate([diag, off_pn, off_np])[self._order]
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(self.n, self.n))

    # ---- interpolation and gradients ---------------------------------
    def face_interp(self, phi):
        return self.w * phi[self.P] + (1.0 - self.w) * phi[self.N]

    def gauss_grad(self, phi, phi_b):
        """Cell gradient of a scalar given boundary face values."""
        g = np.zeros((self.n, 3))
        phi_f = self.face_interp(phi)
        contrib = phi_f * self.A
        np.add.at(g, (self.P, self.ax), contrib)
        np.add.at(g, (self.N, self.ax), -contrib)
        np.add.at(g, (self.bc_cell, self.b_ax), self.b_sign * self.bA * phi_b)
        return g / self.V[:, None]


def _solve(A, b, name, x0, rtol=1e-3):
    """Jacobi-preconditioned BiCGSTAB on the correction to ``x0``.

    The tolerance is relative to the initial residual, so every outer
    iteration makes progress however small the remaining imbalance is.
    """
    r0 = b - A @ x0
    norm = np.linalg.norm(r0)
    if norm == 0.0:
        return x0.copy()
    inv_diag = 1.0 / A.diagonal()
    M = LinearOperator(A.shape, matvec=lambda r: inv_diag * r)
    dx, info = bicgstab(A, r0, rtol=rtol, atol=0.0, maxiter=2000, M=M)
    x = x0 + dx
    if info != 0 or not np.all(np.isfinite(x)):
        raise DivergenceError(f"linear solve failed in {name} equation (info={info})", name)
    return x


def _solve_pressure(A, b, rtol=1e-10):
    # 'local' (Gershgorin) prolongation weighting: the default weighting seeds
    # a spectral-radius estimate from np.random, which breaks bit-for-bit
    # reproducibility of the flow solve.
    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric", max_coarse=200,
                                           smooth=("jacobi", {"weighting": "local"}))
    x, info = cg(A, b, rtol=rtol, atol=0.0, maxiter=500, M=ml.aspreconditioner())
    if info != 0 or not np.all(np.isfinite(x)):
        raise DivergenceError(f"pressure-correction solve failed (info={info})", "continuity")
    return x


def _operator(disc, F, Fb, gamma_f, gamma_cell):
    """Upwind convection + central diffusion with inlet and outlet rows.

    The diagonal is the sum of the neighbour coefficients (continuity
    subtracted), which keeps the matrix an M-matrix while the fluxes are
    not yet conservative.  Returns diag, off_pn, off_np and the inlet
    coefficient that multiplies the imposed inlet value in the source.
    """
    D = gamma_f * disc.A / disc.d
    a_pn = D + np.maximum(-F, 0.0)
    a_np = D + np.maximum(F, 0.0)
    diag = np.bincount(disc.P, a_pn, disc.n) + np.bincount(disc.N, a_np, disc.n)
    i = disc.inl
    ci = disc.bc_cell[i]
    a_in = gamma_cell[ci] * disc.bA[i] / disc.bd[i] + np.maximum(-Fb[i], 0.0)
    diag += np.bincount(ci, a_in, disc.n)
    # outlet: zero gradient, the outflow term cancels against continuity
    return diag, -a_pn, -a_np, a_in


def _wall_functions(disc, u, k, rho, mu, consts):
    """Per wall face: effective wall viscosity, k production and epsilon.

    Returns arrays over ``disc.wall``.
    """
    f = disc.wall
    c = disc.bc_cell[f]
    y = disc.bd[f]
    ax = disc.b_ax[f]
    ut_vec = u[c].copy()
    ut_vec[np.arange(len(f)), ax] = 0.0
    Ut = np.linalg.norm(ut_vec, axis=1)
    kp = np.maximum(k[c], K_FLOOR)
    cmu4 = consts.C_mu ** 0.25
    ystar = rho * cmu4 * np.sqrt(kp) * y / mu
    log_region = ystar > Y_STAR_LAM
    mu_w = np.where(log_region,
                    rho * cmu4 * np.sqrt(kp) * KAPPA * y / np.log(E_WALL * np.maximum(ystar, 1.0)),
                    mu)
    tau_w = mu_w * Ut / y
    # Production and dissipation use the equilibrium expressions on both sides
    # of the switch; mu_w is continuous there, so these are too.  Switching them
    # off in the sublayer makes near-threshold cells toggle and stalls SIMPLE.
    Gk = tau_w ** 2 / (KAPPA * rho * cmu4 * np.sqrt(kp) * y)
    eps_w = consts.C_mu ** 0.75 * kp ** 1.5 / (KAPPA * y)
    return mu_w, Gk, eps_w, ystar


def solve_steady_flow(mesh, bc, props=FluidProps(), consts=TurbulenceConstants(),
                      settings=SolverSettings(), inlet2_open=True):
    """SIMPLE iteration to steady state.

    Raises ConvergenceError (with the final scaled residuals) if the residuals
    do not all drop below ``settings.tol`` within ``settings.max_iter`` sweeps,
    and DivergenceError naming the first equation that produced NaN/Inf.
    """
    if not isinstance(bc, FlowBC):
        raise ValidationError("solve_steady_flow expects a FlowBC")
    open2 = inlet2_open and bc.V2_on > 0
    disc = _Discretization(mesh, bc, props, open2)
    n = disc.n
    rho = props.rho_air
    mu = props.mu_mix
    au, ap, ak = settings.alpha_u, settings.alpha_p, settings.alpha_k

    k0, e0 = inlet_turbulence(bc.intensity, bc.V1, bc.Dh_inlet1, consts)
    u = np.zeros((n, 3))
    p = np.zeros(n)
    k = np.full(n, k0)
    eps = np.full(n, e0)
    mu_t = eddy_viscosity(rho, k, eps, consts)
    F = np.zeros(mesh.n_faces)
    Fb = np.zeros(len(disc.btag))
    Fb[disc.inl] = disc.b_flux_inlet
    inflow = -disc.b_flux_inlet.sum()

    cont_ref = None
    clips = 0
    res = {}
    for it in range(1, settings.max_iter + 1):
        # ---- momentum predictor ----------------------------------------
        mu_eff = mu + mu_t
        gam_f = disc.face_interp(mu_eff)
        diag, off_pn, off_np, a_in = _operator(disc, F, Fb, gam_f, mu_eff)
        b = np.zeros((n, 3))
        i = disc.inl
        for c in range(3):
            b[:, c] = np.bincount(disc.bc_cell[i], a_in * disc.b_u[i, c], n)
        o = disc.out
        # walls: log-law shear
        mu_w, Gk_w, eps_w, ystar = _wall_functions(disc, u, k, rho, mu, consts)
        wc = disc.bc_cell[disc.wall]
        np.add.at(diag, wc, mu_w * disc.bA[disc.wall] / disc.bd[disc.wall])

        p_b = p[disc.bc_cell].copy()
        p_b[o] = bc.p_outlet
        gp = disc.gauss_grad(p, p_b)
        b_mom = b - gp * disc.V[:, None]

        A_unrel = disc.matrix(diag, off_pn, off_np)
        res_u = _scaled_residual(A_unrel, u, b_mom)
        diag_r = diag / au
        A_mom = disc.matrix(diag_r, off_pn, off_np)
        rhs = b_mom + ((1.0 - au) * diag_r)[:, None] * u
        u_star = np.column_stack([_solve(A_mom, rhs[:, c], "momentum", u[:, c])
                                  for c in range(3)])

        # ---- Rhie-Chow face fluxes ---------------------------------------
        Dp = disc.V / diag_r
        P_, N_, ax = disc.P, disc.N, disc.ax
        Df = disc.face_interp(Dp)
        uf = disc.w * u_star[P_, ax] + (1 - disc.w) * u_star[N_, ax]
        gpf = disc.w * gp[P_, ax] + (1 - disc.w) * gp[N_, ax]
        uf -= Df * ((p[N_] - p[P_]) / disc.d - gpf)
        F = rho * disc.A * uf
        co = disc.bc_cell[o]
        sgn = disc.b_sign[o]
        oax = disc.b_ax[o]
        un = sgn * u_star[co, oax] - Dp[co] * ((bc.p_outlet - p[co]) / disc.bd[o] - sgn * gp[co, oax])
        Fb[o] = rho * disc.bA[o] * un

        # ---- pressure correction -----------------------------------------
        imbalance = np.zeros(n)
        np.add.at(imbalance, P_, F)
        np.add.at(imbalance, N_, -F)
        np.add.at(imbalance, disc.bc_cell, Fb)
        cont = np.abs(imbalance).sum()
        if cont_ref is None or it <= 5:
            cont_ref = max(cont_ref or 0.0, cont, 1e-300)
        res_c = cont / cont_ref

        cf = rho * disc.A * Df / disc.d
        cb = rho * disc.bA[o] * Dp[co] / disc.bd[o]
        pdiag = np.zeros(n)
        np.add.at(pdiag, P_, cf)
        np.add.at(pdiag, N_, cf)
        np.add.at(pdiag, co, cb)
        Ap = disc.matrix(pdiag, -cf, -cf)
        pc = _solve_pressure(Ap, -imbalance)

        F = F - cf * (pc[N_] - pc[P_])
        Fb[o] = Fb[o] + cb * pc[co]
        pc_b = pc[disc.bc_cell].copy()
        pc_b[o] = 0.0
        gpc = disc.gauss_grad(pc, pc_b)
        u = u_star - Dp[:, None] * gpc
        p = p + ap * pc

        # ---- k-epsilon ---------------------------------------------------
        ub = disc.b_u.copy()
        ub[o] = u[disc.bc_cell[o]]
        grad = np.stack([disc.gauss_grad(u[:, c], ub[:, c]) for c in range(3)], axis=1)
        sym = grad + np.transpose(grad, (0, 2, 1))
        S2 = 0.5 * np.einsum("nij,nij->n", sym, sym)
        Gk = mu_t * S2
        mu_w, Gk_w, eps_w, ystar = _wall_functions(disc, u, k, rho, mu, consts)
        wcnt = disc.wall_count
        Gk_wall = np.zeros(n)
        eps_wall = np.zeros(n)
        np.add.at(Gk_wall, wc, Gk_w)
        np.add.at(eps_wall, wc, eps_w)
        is_wall = wcnt > 0
        Gk[is_wall] = Gk_wall[is_wall] / wcnt[is_wall]
        eps_wall[is_wall] /= wcnt[is_wall]

        k_new, res_k = _scalar_equation(
            disc, F, Fb, mu + disc.face_interp(mu_t) / consts.sigma_k, mu + mu_t / consts.sigma_k,
            k, disc.b_k, src=disc.V * Gk, sink=disc.V * rho * eps / np.maximum(k, K_FLOOR),
            alpha=ak, name="k")
        src_e = disc.V * consts.C1_eps * eps / np.maximum(k, K_FLOOR) * Gk
        sink_e = disc.V * consts.C2_eps * rho * eps / np.maximum(k, K_FLOOR)
        eps_new, res_e = _scalar_equation(
            disc, F, Fb, mu + disc.face_interp(mu_t) / consts.sigma_eps, mu + mu_t / consts.sigma_eps,
            eps, disc.b_eps, src=src_e, sink=sink_e, alpha=ak, name="epsilon",
            fixed=(is_wall, eps_wall))
        clips += int(np.sum(k_new < K_FLOOR) + np.sum(eps_new < EPS_FLOOR))
        k = np.maximum(k_new, K_FLOOR)
        eps = np.maximum(eps_new, EPS_FLOOR)
        mu_t = np.minimum(eddy_viscosity(rho, k, eps, consts), MAX_VISCOSITY_RATIO * mu)

        res = {"continuity": res_c, "x-velocity": res_u[0], "y-velocity": res_u[1],
               "z-velocity": res_u[2], "k": res_k, "epsilon": res_e}
        for name, value in res.items():
            if not math.isfinite(value):
                raise DivergenceError(f"non-finite {name} residual at iteration {it}", name)
        if res_c > 1e8:
            raise DivergenceError(f"continuity residual diverged ({res_c:.3g}) at iteration {it}",
                                  "continuity")
        if it % 50 == 0:
            log.debug("iter %d %s clips=%d", it, " ".join(f"{k_}={v:.2e}" for k_, v in res.items()), clips)
        if it >= settings.min_iter and max(res.values()) < settings.tol:
            break
    else:
        raise ConvergenceError(
            f"flow did not converge in {settings.max_iter} iterations "
            f"(max residual {max(res.values()):.3g})", res)

    # exact global balance of the corrected fluxes
    field_ = FlowField(mesh=mesh, u=u, p=p, k=k, eps=eps, mu_t=mu_t, face_flux=F,
                       bface_flux=Fb.copy(), rho=rho, inlet2_open=open2,
                       iterations=it, residuals=res, clip_count=clips)
    log.info("flow converged in %d iterations (V1=%g, V2=%g, inlet2 %s), imbalance %.2e",
             it, bc.V1, bc.V2_on if open2 else 0.0, "open" if open2 else "closed",
             field_.mass_imbalance())
    return field_.freeze()


def _scaled_residual(A, x, b):
    """Scaled residual sum|b - A x| / sum|diag * x| per column."""
    x2 = x if x.ndim == 2 else x[:, None]
    b2 = b if b.ndim == 2 else b[:, None]
    r = np.abs(b2 - A @ x2).sum(axis=0)
    scale = np.abs(A.diagonal()[:, None] * x2).sum(axis=0)
    out = r / np.maximum(scale, 1e-300)
    return out if x.ndim == 2 else float(out[0])


def _scalar_equation(disc, F, Fb, gamma_f, gamma_cell, phi, phi_b, src, sink, alpha, name,
                     fixed=None):
    diag, off_pn, off_np, a_in = _operator(disc, F, Fb, gamma_f, gamma_cell)
    diag = diag + sink
    b = src + np.bincount(disc.bc_cell[disc.inl], a_in * phi_b[disc.inl], disc.n)
    free = np.ones(disc.n, dtype=bool)
    if fixed is not None:
        mask, values = fixed
        free = ~mask
        # identity rows for cells whose value is imposed by the wall function
        diag = np.where(mask, 1.0, diag)
        b = np.where(mask, values, b)
        off_pn = np.where(mask[disc.P], 0.0, off_pn)
        off_np = np.where(mask[disc.N], 0.0, off_np)
    A = disc.matrix(diag, off_pn, off_np)
    r = np.abs(b - A @ phi)[free].sum()
    scale = np.abs(diag * phi)[free].sum()
    res = r / max(scale, 1e-300)
    diag_r = np.where(free, diag / alpha, diag)
    rhs = b + np.where(free, (1 - alpha) * diag_r * phi, 0.0)
    x = _solve(disc.matrix(diag_r, off_pn, off_np), rhs, name, phi)
    return x, res


def two_state_fields(mesh, bc, props=FluidProps(), consts=TurbulenceConstants(),
                     settings=SolverSettings()):
    """(field with inlet 2 blowing at V2_on, field with inlet 2 closed)."""
    on = solve_steady_flow(mesh, bc, props, consts, settings, inlet2_open=True)
    if bc.V2_on == 0:
        return on, on
    off = solve_steady_flow(mesh, replace(bc, V2_on=0.0), props, consts, settings,
                            inlet2_open=False)
    return on, off


def write_field_csv(path, flow):
    c = flow.mesh.centers
    data = np.column_stack([c, flow.u, flow.p, flow.k, flow.eps, flow.mu_t])
    header = "x,y,z,u,v,w,p,k,eps,mu_t"
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.10e")


_SAVED = ("u", "p", "k", "eps", "mu_t", "face_flux", "bface_flux")


def save_flow(path, flow):
    """Store a converged field as .npz (the mesh is rebuilt by the caller)."""
    np.savez(path, rho=flow.rho, inlet2_open=flow.inlet2_open, iterations=flow.iterations,
             n_cells=flow.mesh.n_cells, **{k: getattr(flow, k) for k in _SAVED})


def load_flow(path, mesh):
    with np.load(path) as z:
        if int(z["n_cells"]) != mesh.n_cells or len(z["face_flux"]) != mesh.n_faces:
            raise ValidationError(f"{path}: stored field does not match the mesh")
        f = FlowField(mesh=mesh, rho=float(z["rho"]), inlet2_open=bool(z["inlet2_open"]),
                      iterations=int(z["iterations"]), **{k: z[k].copy() for k in _SAVED})
    return f.freeze()


def plug_flow(mesh, speed, rho=1.225):
    """Uniform flow along +z on a straight duct mesh, with no turbulence.

    A prescribed field for transport verification; not a solution of the
    momentum equations.
    """
    if not speed > 0:
        raise ValidationError("plug flow speed must be > 0")
    n = mesh.n_cells
    u = np.zeros((n, 3))
    u[:, 2] = speed
    F = np.where(mesh.face_axis == 2, rho * speed * mesh.face_area, 0.0)
    Fb = np.where(mesh.bface_axis == 2, mesh.bface_sign * rho * speed * mesh.bface_area, 0.0)
    f = FlowField(mesh=mesh, u=u, p=np.zeros(n), k=np.zeros(n), eps=np.zeros(n),
                  mu_t=np.zeros(n), face_flux=F, bface_flux=Fb, rho=rho,
                  inlet2_open=bool(np.any(mesh.bface_tag == INLET2)))
    return f.freeze()
