"""
L-shaped duct geometry and its structured Cartesian discretization.

Coordinate frame: segment 1 runs along +z from inlet 1 (z = 0) to the elbow,
segment 2 runs along +x from the elbow to the outlet (x = L2), and the branch
stands on the roof (+y) of segment 1 with inlet 2 at its top.  The duct cross
sections are squares whose side equals the nominal pipe diameter, so the
hydraulic diameter is preserved.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ResolutionError, ValidationError

__all__ = [
    "PipeSpec", "Mesh", "Probe", "build_mesh", "build_duct_mesh",
    "probe_cell", "hydraulic_diameter", "mesh_report",
    "INTERIOR", "WALL", "INLET1", "INLET2", "OUTLET", "TAG_NAMES",
]

INTERIOR, WALL, INLET1, INLET2, OUTLET = 0, 1, 2, 3, 4
TAG_NAMES = {INTERIOR: "interior", WALL: "wall", INLET1: "inlet1",
             INLET2: "inlet2", OUTLET: "outlet"}

MIN_CELLS_ACROSS = 6
_EPS = 1e-9


@dataclass(frozen=True)
class PipeSpec:
    """Pipe dimensions in metres (defaults: the experimental testbed)."""
    D1: float = 0.15
    D2: float = 0.15
    L1: float = 1.15
    L2: float = 0.91
    L3: float = 0.10
    L4: float = 0.13
    L5: float = 0.07

    def __post_init__(self):
        for name in ("D1", "D2", "L1", "L2", "L3", "L4", "L5"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"PipeSpec.{name} must be a positive length, got {value!r}")
        if self.D2 > self.D1 + _EPS:
            raise ValidationError(f"branch width D2={self.D2} exceeds main duct width D1={self.D1}")
        if self.L3 + self.D2 > self.L1 + _EPS:
            raise ValidationError(
                f"branch footprint [L3, L3+D2] = [{self.L3}, {self.L3 + self.D2}] "
                f"does not fit on segment 1 (L1 = {self.L1})")
        if self.L5 >= self.L2:
            raise ValidationError(f"probe outside segment 2: L5={self.L5} must be < L2={self.L2}")
        if self.L2 - self.L5 < self.D1:
            raise ValidationError(
                f"probe at x = L2 - L5 = {self.L2 - self.L5} lies inside the elbow (x < D1 = {self.D1})")

    @property
    def path_length(self):
        """Centreline distance from inlet 1 to the outlet."""
        return (self.L1 - self.D1 / 2) + (self.L2 - self.D1 / 2)

    @property
    def fluid_volume(self):
        """Analytic volume of the union of the three duct boxes."""
        return self.D1 ** 2 * self.L1 + self.D1 ** 2 * (self.L2 - self.D1) + self.D2 ** 2 * self.L4

    def default_probe(self):
        return Probe((self.L2 - self.L5, self.D1 / 2, self.L1 - self.D1 / 2))


@dataclass(frozen=True)
class Probe:
    position: tuple

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        if len(self.position) != 3:
            raise ValidationError("probe position must be a 3-vector")


@dataclass(frozen=True, eq=False)
class Mesh:
    """Structured tensor-product grid with a fluid mask.

    Cells are indexed on the bounding box by (i, j, k); fluid cells also carry
    a compact index 0..n_cells-1 in C order of (i, j, k).  Face arrays:

    * interior faces: ``owner < neighbour``, normal along ``face_axis`` pointing
      from owner to neighbour.
    * boundary faces: ``bface_cell``, ``bface_axis``, ``bface_sign`` (+1 when the
      face is on the high side of the cell), ``bface_tag``.
    """
    h: float
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    fluid: np.ndarray            # (nx, ny, nz) bool, the cell kind
    cell_index: np.ndarray       # (nx, ny, nz) int, -1 for solid
    ijk: np.ndarray              # (n, 3)
    centers: np.ndarray          # (n, 3)
    widths: np.ndarray           # (n, 3)
    volumes: np.ndarray          # (n,)
    neighbors: np.ndarray        # (n, 6) order -x,+x,-y,+y,-z,+z; -1 at boundary
    owner: np.ndarray
    neighbour: np.ndarray
    face_axis: np.ndarray
    face_area: np.ndarray
    face_dist: np.ndarray        # centre-to-centre distance
    face_weight: np.ndarray      # phi_f = w*phi_owner + (1-w)*phi_neighbour
    bface_cell: np.ndarray
    bface_axis: np.ndarray
    bface_sign: np.ndarray
    bface_area: np.ndarray
    bface_dist: np.ndarray       # centre-to-face distance
    bface_center: np.ndarray
    bface_tag: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return len(self.volumes)

    @property
    def n_faces(self):
        return len(self.owner)

    @property
    def shape(self):
        return self.fluid.shape

    def boundary_faces(self, tag):
        return np.flatnonzero(self.bface_tag == tag)

    def boundary_area(self, tag):
        return float(self.bface_area[self.bface_tag == tag].sum())


def _axis_nodes(breaks, h):
    """Node coordinates honouring every geometric breakpoint.

    Each interval between consecutive breakpoints is split into
    ceil(length / h) equal cells, so no cell is larger than h.
    """
    breaks = sorted(set(round(b, 12) for b in breaks))
    nodes = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((b - a) / h - _EPS))
        nodes.extend(np.linspace(a, b, n + 1)[1:].tolist())
    return np.asarray(nodes, dtype=float)


def _check_resolution(width, h, min_cells=MIN_CELLS_ACROSS):
    if not (h > 0 and math.isfinite(h)):
        raise ResolutionError(f"cell size must be positive, got {h!r}")
    ratio = width / h
    if ratio < min_cells - _EPS:
        raise ResolutionError(
            f"cell size h={h} gives {ratio:.3g} cells across the {width} m duct; "
            f"at least {min_cells} are required")
    if abs(ratio - round(ratio)) > 1e-6 * ratio:
        raise ResolutionError(f"cell size h={h} does not divide the duct width {width}")


def build_mesh(spec, h=0.015):
    """Discretize the L-shaped duct with its branch."""
    if not isinstance(spec, PipeSpec):
        raise ValidationError("build_mesh expects a PipeSpec")
    _check_resolution(spec.D1, h)
    D1, D2 = spec.D1, spec.D2
    bx0, bx1 = (D1 - D2) / 2, (D1 + D2) / 2
    xs = _axis_nodes([0.0, bx0, bx1, D1, spec.L2], h)
    ys = _axis_nodes([0.0, D1, D1 + spec.L4], h)
    zs = _axis_nodes([0.0, spec.L3, spec.L3 + D2, spec.L1 - D1, spec.L1], h)

    xc, yc, zc = [0.5 * (n[1:] + n[:-1]) for n in (xs, ys, zs)]
    X, Y, Z = np.meshgrid(xc, yc, zc, indexing="ij")
    seg1 = (X < D1) & (Y < D1) & (Z < spec.L1)
    seg2 = (X < spec.L2) & (Y < D1) & (Z > spec.L1 - D1)
    branch = (X > bx0) & (X < bx1) & (Y > D1) & (Z > spec.L3) & (Z < spec.L3 + D2)
    fluid = seg1 | seg2 | branch

    def tagger(axis, sign, coord):
        if axis == 2 and sign < 0 and abs(coord) < _EPS:
            return INLET1
        if axis == 0 and sign > 0 and abs(coord - spec.L2) < _EPS:
            return OUTLET
        if axis == 1 and sign > 0 and abs(coord - (D1 + spec.L4)) < _EPS:
            return INLET2
        return WALL

    mesh = _assemble(h, xs, ys, zs, fluid, tagger)
    mesh.info.update(kind="lpipe", spec=spec)
    return mesh


def build_duct_mesh(width, length, h, inlet_tag=INLET1):
    """Straight square duct along +z: inlet at z = 0, outlet at z = length.

    Used for verification cases, so any h that divides the width is accepted.
    ``inlet_tag=INLET2`` makes the inlet the emitting boundary, which turns
    the duct into a transport test bench.
    """
    if inlet_tag not in (INLET1, INLET2):
        raise ValidationError("duct inlet must be tagged INLET1 or INLET2")
    _check_resolution(width, h, min_cells=1)
    if not length > 0:
        raise ValidationError(f"duct length must be positive, got {length}")
    xs = _axis_nodes([0.0, width], h)
    ys = _axis_nodes([0.0, width], h)
    zs = _axis_nodes([0.0, length], h)
    fluid = np.ones((len(xs) - 1, len(ys) - 1, len(zs) - 1), dtype=bool)

    def tagger(axis, sign, coord):
        if axis == 2 and sign < 0:
            return inlet_tag
        if axis == 2 and sign > 0:
            return OUTLET
        return WALL

    mesh = _assemble(h, xs, ys, zs, fluid, tagger)
    mesh.info.update(kind="duct", width=width, length=length)
    return mesh


def _assemble(h, xs, ys, zs, fluid, tagger):
    nodes = (xs, ys, zs)
    widths1d = [np.diff(n) for n in nodes]
    centers1d = [0.5 * (n[1:] + n[:-1]) for n in nodes]
    shape = fluid.shape

    cell_index = np.full(shape, -1, dtype=np.int64)
    ijk = np.argwhere(fluid)
    n = len(ijk)
    cell_index[tuple(ijk.T)] = np.arange(n)
    centers = np.column_stack([centers1d[a][ijk[:, a]] for a in range(3)])
    widths = np.column_stack([widths1d[a][ijk[:, a]] for a in range(3)])
    volumes = widths.prod(axis=1)

    neighbors = np.full((n, 6), -1, dtype=np.int64)
    owner, neigh, faxis, farea, fdist, fweight = [], [], [], [], [], []
    bcell, baxis, bsign, barea, bdist, bcenter, btag = [], [], [], [], [], [], []

    for a in range(3):
        other = [b for b in range(3) if b != a]
        area = widths[:, other[0]] * widths[:, other[1]]
        for sign in (-1, 1):
            nb_ijk = ijk.copy()
            nb_ijk[:, a] += sign
            inside = (nb_ijk[:, a] >= 0) & (nb_ijk[:, a] < shape[a])
            nb = np.full(n, -1, dtype=np.int64)
            nb[inside] = cell_index[tuple(nb_ijk[inside].T)]
            neighbors[:, 2 * a + (sign > 0)] = nb

            if sign > 0:
                m = nb >= 0
                own = np.flatnonzero(m)
                owner.append(own)
                neigh.append(nb[m])
                faxis.append(np.full(len(own), a))
                farea.append(area[m])
                d_own = 0.5 * widths[own, a]
                d_nb = 0.5 * widths[nb[m], a]
                fdist.append(d_own + d_nb)
                fweight.append(d_nb / (d_own + d_nb))

            bnd = np.flatnonzero(nb < 0)
            coord = centers[bnd, a] + sign * 0.5 * widths[bnd, a]
            fc = centers[bnd].copy()
            fc[:, a] = coord
            bcell.append(bnd)
            baxis.append(np.full(len(bnd), a))
            bsign.append(np.full(len(bnd), sign))
            barea.append(area[bnd])
            bdist.append(0.5 * widths[bnd, a])
            bcenter.append(fc)
            btag.append(np.array([tagger(a, sign, c) for c in coord], dtype=np.int64))

    cat = np.concatenate
    arrays = dict(
        owner=cat(owner), neighbour=cat(neigh), face_axis=cat(faxis),
        face_area=cat(farea), face_dist=cat(fdist), face_weight=cat(fweight),
        bface_cell=cat(bcell), bface_axis=cat(baxis), bface_sign=cat(bsign),
        bface_area=cat(barea), bface_dist=cat(bdist), bface_center=np.vstack(bcenter),
        bface_tag=cat(btag),
    )
    mesh = Mesh(h=float(h), xs=xs, ys=ys, zs=zs, fluid=fluid, cell_index=cell_index,
                ijk=ijk, centers=centers, widths=widths, volumes=volumes,
                neighbors=neighbors, **arrays)
    for value in vars(mesh).values():
        if isinstance(value, np.ndarray):
            value.flags.writeable = False
    return mesh


def probe_cell(mesh, probe):
    """Index of the fluid cell containing the probe.

    A point on a cell boundary belongs to every cell touching it; the lowest
    index wins.
    """
    pos = probe.position if isinstance(probe, Probe) else tuple(probe)
    candidates = []
    for a, nodes in enumerate((mesh.xs, mesh.ys, mesh.zs)):
        p = pos[a]
        if not nodes[0] <= p <= nodes[-1]:
            raise ValidationError(f"probe {pos} lies outside the mesh bounding box")
        hi = int(np.searchsorted(nodes, p, side="right")) - 1
        lo = int(np.searchsorted(nodes, p, side="left")) - 1
        idx = sorted({min(max(i, 0), len(nodes) - 2) for i in (lo, hi)})
        candidates.append(idx)
    found = [mesh.cell_index[i, j, k]
             for i in candidates[0] for j in candidates[1] for k in candidates[2]
             if mesh.cell_index[i, j, k] >= 0]
    if not found:
        raise ValidationError(f"probe {pos} is not inside a fluid cell")
    return int(min(found))


def hydraulic_diameter(spec, which="main"):
    # 4A/P of a square of side a is a
    if which == "main":
        return spec.D1
    if which == "branch":
        return spec.D2
    raise ValidationError(f"unknown duct {which!r}; expected 'main' or 'branch'")


def mesh_report(mesh):
    lines = [
        f"kind: {mesh.info.get('kind', 'custom')}",
        f"h: {mesh.h:.6g} m",
        f"grid: {mesh.shape[0]} x {mesh.shape[1]} x {mesh.shape[2]}",
        f"fluid cells: {mesh.n_cells}",
        f"interior faces: {mesh.n_faces}",
        f"fluid volume: {mesh.volumes.sum():.9g} m^3",
    ]
    for tag in (INLET1, INLET2, OUTLET, WALL):
        idx = mesh.boundary_faces(tag)
        lines.append(f"{TAG_NAMES[tag]}: {len(idx)} faces, area {mesh.bface_area[idx].sum():.9g} m^2")
    return "\n".join(lines) + "\n"
