"""
Transient VOC mass-fraction transport over frozen flow states.

Implicit Euler in time, finite volumes in space.  Advection uses the face
mass fluxes of the converged FlowField (first-order upwind by default, or
a van Leer limited correction applied explicitly); diffusion uses the
molecular plus eddy diffusivity.  Inflow faces carry Y by advection only,
the outlet is zero-gradient and walls are impermeable.
"""

from dataclasses import dataclass, field
import logging
import math
import weakref

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NumericalError, ValidationError
from .flow import reynolds_number
from .geometry import INLET2, probe_cell
from .link import is_emitting

log = logging.getLogger(__name__)

__all__ = [
    "TransportParams", "SpeciesField", "RxTrace", "MassLedger", "MassAudit",
    "effective_diffusivity", "inlet2_species_bc", "TransportOperator",
    "step_transport", "run_transmission", "mass_audit", "dimensionless_checks",
    "SPEED_OF_SOUND", "write_trace_csv", "read_trace_csv", "write_snapshot_csv",
]

SPEED_OF_SOUND = 340.0
BOUND_TOL = 1e-12


@dataclass(frozen=True)
class TransportParams:
    dt: float = 0.01
    Sc_t: float = 0.7
    scheme: str = "upwind"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.Sc_t > 0:
            raise ValidationError(f"Sc_t must be > 0, got {self.Sc_t}")
        if self.scheme not in ("upwind", "limited"):
            raise ValidationError(f"unknown advection scheme {self.scheme!r}")


@dataclass
class SpeciesField:
    Y: np.ndarray
    t: float = 0.0


@dataclass
class RxTrace:
    """Probe time series.  ``conc`` is rho_mix * Y in kg/m^3."""
    times: np.ndarray
    Y: np.ndarray
    conc: np.ndarray
    meta: dict = field(default_factory=dict)
    audit: object = None

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else float("nan")

    def peak(self):
        i = int(np.argmax(self.conc))
        return float(self.times[i]), float(self.conc[i])


@dataclass
class MassLedger:
    injected: float = 0.0
    outflowed: float = 0.0
    resident: float = 0.0


@dataclass(frozen=True)
class MassAudit:
    injected: float
    resident: float
    outflowed: float
    rel_error: float

    def __iter__(self):
        return iter((self.injected, self.resident, self.outflowed, self.rel_error))


def effective_diffusivity(props, mu_t, Sc_t=0.7):
    """Molecular plus eddy diffusivity, m^2/s."""
    return props.D_voc_air + np.asarray(mu_t) / (props.rho_air * Sc_t)


def inlet2_species_bc(schedule, t):
    """(inlet-2 speed, inlet-2 mass fraction); pure VOC enters during a pulse."""
    if is_emitting(schedule, t):
        return schedule.V2, 1.0
    return 0.0, 0.0


def _van_leer(r):
    return (r + np.abs(r)) / (1.0 + np.abs(r))


class TransportOperator:
    """Factorized implicit step for one flow state and time step."""

    def __init__(self, flow, props, params):
        mesh = flow.mesh
        self.flow = flow
        self.params = params
        self.rho = flow.rho
        n = mesh.n_cells
        dt = params.dt
        F = np.asarray(flow.face_flux)
        Fb = np.asarray(flow.bface_flux)
        P, N = mesh.owner, mesh.neighbour

        gamma = self.rho * effective_diffusivity(props, flow.mu_t, params.Sc_t)
        gf = (mesh.face_weight * gamma[P] + (1 - mesh.face_weight) * gamma[N]) * mesh.face_area / mesh.face_dist
        self.storage = self.rho * mesh.volumes / dt
        diag = self.storage.copy()
        diag += np.bincount(P, gf + np.maximum(F, 0.0), n)
        diag += np.bincount(N, gf + np.maximum(-F, 0.0), n)
        out = Fb > 0
        diag += np.bincount(mesh.bface_cell[out], Fb[out], n)
        rows = np.concatenate([np.arange(n), P, N])
        cols = np.concatenate([np.arange(n), N, P])
        data = np.concatenate([diag, -(gf + np.maximum(-F, 0.0)), -(gf + np.maximum(F, 0.0))])
        self.matrix = sp.csc_matrix((data, (rows, cols)), shape=(n, n))
        self._lu = splu(self.matrix)

        inflow2 = (mesh.bface_tag == INLET2) & (Fb < 0)
        self.in2_cells = mesh.bface_cell[inflow2]
        self.in2_rate = -Fb[inflow2]          # kg/s of mixture per face
        self.in2_total = float(self.in2_rate.sum())
        self.out_cells = mesh.bface_cell[out]
        self.out_rate = Fb[out]
        self._inflow_vec = np.bincount(self.in2_cells, self.in2_rate, n)

        if params.scheme == "limited":
            ax = mesh.face_axis
            self._F = F
            self._P, self._N = P, N
            self._PP = mesh.neighbors[P, 2 * ax]       # upstream of owner
            self._NN = mesh.neighbors[N, 2 * ax + 1]   # downstream of neighbour

    def _limited_correction(self, Y):
        """Explicit flux correction from upwind to the van Leer face value."""
        F, P, N = self._F, self._P, self._N
        fwd = F >= 0
        U = np.where(fwd, P, N)
        D = np.where(fwd, N, P)
        UU = np.where(fwd, self._PP, self._NN)
        valid = UU >= 0
        yU, yD = Y[U], Y[D]
        yUU = np.where(valid, Y[np.maximum(UU, 0)], yU)
        denom = yD - yU
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(np.abs(denom) > 1e-300, (yU - yUU) / denom, 0.0)
        psi = np.where(valid, _van_leer(r), 0.0)
        corr = F * 0.5 * psi * denom
        n = len(Y)
        return -np.bincount(P, corr, n) + np.bincount(N, corr, n)

    def step(self, Y, y_in2):
        rhs = self.storage * Y
        if y_in2:
            rhs = rhs + self._inflow_vec * y_in2
        if self.params.scheme == "limited":
            rhs = rhs + self._limited_correction(Y)
        Y_new = self._lu.solve(rhs)
        if not np.all(np.isfinite(Y_new)):
            raise NumericalError("species solve produced non-finite values")
        lo, hi = Y_new.min(), Y_new.max()
        if lo < -BOUND_TOL or hi > 1.0 + BOUND_TOL:
            raise NumericalError(
                f"mass fraction left [0, 1] before clamping (min {lo:.3e}, max {hi:.3e})")
        return np.clip(Y_new, 0.0, 1.0)

    def outflow_rate(self, Y):
        return float(np.dot(self.out_rate, Y[self.out_cells]))


_operator_cache = weakref.WeakKeyDictionary()


def _operator(flow, props, params):
    per_flow = _operator_cache.setdefault(flow, {})
    key = (props, params)
    if key not in per_flow:
        per_flow[key] = TransportOperator(flow, props, params)
    return per_flow[key]


def step_transport(field_, flow, params, bc_state, props):
    """Advance the species field by one implicit step.

    ``bc_state`` is the (speed, Y) pair from ``inlet2_species_bc``; the speed
    only matters through ``flow``, which must be the state matching it.
    """
    op = _operator(flow, props, params)
    y_in = bc_state[1] if (bc_state[0] > 0 and flow.inlet2_open) else 0.0
    return SpeciesField(op.step(field_.Y, y_in), field_.t + params.dt)


def run_transmission(mesh, fields, schedule, probe, params, duration, props,
                     snapshot_every=None, on_snapshot=None):
    """March Y from zero through the whole frame, sampling the probe cell.

    ``fields`` is the (inlet-2 open, inlet-2 closed) flow pair.
    """
    field_on, field_off = fields
    frame = schedule.frame_duration
    if duration < frame - 1e-9:
        raise ValidationError(f"duration {duration} s is shorter than the bit frame {frame} s")
    cell = probe_cell(mesh, probe)
    op_on = _operator(field_on, props, params)
    op_off = _operator(field_off, props, params)
    dt = params.dt
    n_steps = int(round(duration / dt))
    times = np.arange(1, n_steps + 1) * dt
    Y = np.zeros(mesh.n_cells)
    samples = np.empty(n_steps)
    ledger = MassLedger()
    for i in range(n_steps):
        t = times[i]
        emitting = is_emitting(schedule, t) and field_on.inlet2_open
        op = op_on if emitting else op_off
        Y = op.step(Y, 1.0 if emitting else 0.0)
        if emitting:
            ledger.injected += dt * op.in2_total
        ledger.outflowed += dt * op.outflow_rate(Y)
        samples[i] = Y[cell]
        if snapshot_every and on_snapshot is not None and (i + 1) % snapshot_every == 0:
            on_snapshot(t, Y)
    ledger.resident = float(np.dot(field_on.rho * mesh.volumes, Y))
    audit = mass_audit(ledger)
    log.info("transmission done: %d steps, injected %.4g kg, audit error %.2e",
             n_steps, audit.injected, audit.rel_error)
    rho_mix = field_on.rho
    meta = {"V1": None, "V2": schedule.V2, "T_e": schedule.T_e, "T_b": schedule.T_b,
            "bits": "".join(map(str, schedule.bits)), "channel": "solver3d", "dt": dt}
    return RxTrace(times=times, Y=samples, conc=rho_mix * samples, meta=meta, audit=audit)


def mass_audit(ledger):
    """(injected, resident, outflowed, relative error) of a finished run."""
    inj, res, out = ledger.injected, ledger.resident, ledger.outflowed
    err = abs(inj - res - out) / max(inj, 1e-300)
    if inj == 0.0:
        err = 0.0 if res == 0.0 and out == 0.0 else math.inf
    return MassAudit(inj, res, out, err)


def dimensionless_checks(props, V1, V2, D1=0.15):
    """(Reynolds number of the main duct, Peclet number, Mach < 0.1)."""
    if not V1 > 0:
        raise ValidationError("V1 must be > 0")
    Re = reynolds_number(props, V1, D1)
    Pe = V1 * D1 / props.D_voc_air
    mach_ok = max(V1, V2) / SPEED_OF_SOUND < 0.1
    return Re, Pe, mach_ok


TRACE_COLUMNS = ("t", "Y_probe", "conc_kg_m3")


def write_trace_csv(path, trace, extra=None):
    """Write ``t,Y_probe,conc_kg_m3`` plus any ``extra`` (name -> array) columns.

    Values use 17 significant digits so a read-back is exact.
    """
    cols = [trace.times, trace.Y, trace.conc]
    names = list(TRACE_COLUMNS)
    for name, values in (extra or {}).items():
        names.append(name)
        cols.append(np.asarray(values, dtype=float))
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(names),
               comments="", fmt="%.17g")


def read_trace_csv(path):
    """Read a trace CSV back into (RxTrace, dict of extra columns)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if tuple(header[:3]) != TRACE_COLUMNS:
        raise ValidationError(f"{path}: expected header starting with {','.join(TRACE_COLUMNS)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] < 2:
        raise ValidationError(f"{path}: trace needs at least two samples")
    extra = {name: data[:, i] for i, name in enumerate(header) if i >= 3}
    return RxTrace(times=data[:, 0], Y=data[:, 1], conc=data[:, 2]), extra


def write_snapshot_csv(path, mesh, Y, rho):
    """One row per cell: centre and concentration, for contour plots."""
    data = np.column_stack([mesh.centers, Y, rho * Y])
    np.savetxt(path, data, delimiter=",", header="x,y,z,Y,conc_kg_m3", comments="", fmt="%.17g")
