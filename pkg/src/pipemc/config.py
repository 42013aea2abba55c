"""
Run configuration: an INI file with fixed sections, parsed by configparser.

Every key is optional; a missing key takes its default (the testbed values
for geometry and fluid properties).  Unknown sections or keys are rejected,
as are values that violate a bound, with the offending key named.  See the
README for the full key list.
"""

from dataclasses import dataclass, field, fields, replace
import configparser
import os

from .errors import ValidationError
from .flow import FluidProps, SolverSettings, TurbulenceConstants
from .geometry import PipeSpec, Probe
from .link import SensorModel, duct_area
from .transport import TransportParams

__all__ = ["LinkConfig", "SweepConfig", "RunConfig", "parse_config", "parse_config_string",
           "SCHEMA", "CHANNELS", "SWEEP_AXES"]

CHANNELS = ("solver3d", "reduced1d")
SWEEP_AXES = ("Te", "V2", "V1", "Tb")


@dataclass(frozen=True)
class LinkConfig:
    V1: float = 5.0
    V2: float = 2.5
    T_b: float = 2.0
    T_e: float = 1.0
    bits: tuple = None      # explicit message; None draws N random bits from seed
    seed: int = 0
    N: int = 1024
    tail: float = 4.0       # simulated time after the last bit slot, s
    threshold: float = 0.5
    t_peak: float = None    # None calibrates from a single-bit pilot run
    sensor: bool = True

    def __post_init__(self):
        for name in ("V1", "V2", "T_b", "T_e"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"[link] {name} must be > 0, got {getattr(self, name)}")
        if self.T_e > self.T_b:
            raise ValidationError(f"[link] T_e = {self.T_e} must be <= T_b = {self.T_b}")
        if not self.tail >= 0:
            raise ValidationError(f"[link] tail must be >= 0, got {self.tail}")
        if self.N < 1:
            raise ValidationError(f"[link] N must be >= 1, got {self.N}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"[link] seed must be an unsigned 64-bit integer, got {self.seed}")
        if not 0 < self.threshold < 1:
            raise ValidationError(f"[decoder] threshold must lie in (0, 1), got {self.threshold}")
        if self.t_peak is not None and not self.t_peak > 0:
            raise ValidationError(f"[decoder] t_peak must be > 0, got {self.t_peak}")
        if self.bits is not None and not self.bits:
            raise ValidationError("[link] bits must not be empty")


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "Te"
    values: tuple = (0.5, 1.0, 1.5, 2.0)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValidationError(f"[sweep] axis must be one of {', '.join(SWEEP_AXES)}, got {self.axis!r}")
        if not self.values or any(not v > 0 for v in self.values):
            raise ValidationError("[sweep] values must be a non-empty list of positive numbers")


@dataclass(frozen=True)
class RunConfig:
    spec: PipeSpec = field(default_factory=PipeSpec)
    h: float = 0.015
    cross_section: str = "circular"
    probe: Probe = None
    props: FluidProps = field(default_factory=FluidProps)
    consts: TurbulenceConstants = field(default_factory=TurbulenceConstants)
    intensity: float = 0.05
    settings: SolverSettings = field(default_factory=SolverSettings)
    transport: TransportParams = field(default_factory=TransportParams)
    link: LinkConfig = field(default_factory=LinkConfig)
    sensor: SensorModel = field(default_factory=SensorModel)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    channel: str = "solver3d"
    out_dir: str = "out"
    jobs: int = 0

    def __post_init__(self):
        if not self.h > 0:
            raise ValidationError(f"[geometry] h must be > 0, got {self.h}")
        duct_area(1.0, self.cross_section)
        if self.probe is None:
            object.__setattr__(self, "probe", self.spec.default_probe())
        if not 0 < self.intensity < 1:
            raise ValidationError(f"[turbulence] intensity must lie in (0, 1), got {self.intensity}")
        if self.channel not in CHANNELS:
            raise ValidationError(f"[run] channel must be one of {', '.join(CHANNELS)}, got {self.channel!r}")
        if self.jobs < 0:
            raise ValidationError(f"[run] jobs must be >= 0 (0 means all cores), got {self.jobs}")

    def with_overrides(self, **kw):
        """Copy with run-level or link-level fields replaced (used by CLI flags)."""
        link_kw = {k: kw.pop(k) for k in list(kw) if k in {f.name for f in fields(LinkConfig)}}
        cfg = replace(self, **kw)
        if link_kw:
            cfg = replace(cfg, link=replace(cfg.link, **link_kw))
        return cfg


def _float(s):
    return float(s)


def _int(s):
    return int(s, 0)


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _bits(s):
    s = "".join(s.split())
    if not s:
        return None
    if set(s) - {"0", "1"}:
        raise ValueError("bits must be a string of 0 and 1")
    return tuple(int(c) for c in s)


def _opt_float(s):
    return None if s.strip().lower() in ("", "auto", "none") else float(s)


def _probe(s):
    vals = _floats(s)
    if len(vals) != 3:
        raise ValueError("probe needs three coordinates x y z")
    return vals


# section -> key -> converter
SCHEMA = {
    "geometry": {**{k: _float for k in ("D1", "D2", "L1", "L2", "L3", "L4", "L5", "h")},
                 "cross_section": str, "probe": _probe},
    "fluid": {f.name: _float for f in fields(FluidProps)},
    "turbulence": {**{f.name: _float for f in fields(TurbulenceConstants)}, "intensity": _float},
    "solver": {"alpha_u": _float, "alpha_p": _float, "alpha_k": _float, "tol": _float,
               "max_iter": _int, "min_iter": _int},
    "transport": {"dt": _float, "Sc_t": _float, "scheme": str},
    "link": {"V1": _float, "V2": _float, "T_b": _float, "T_e": _float, "bits": _bits,
             "seed": _int, "N": _int, "tail": _float, "sensor": _bool},
    "sensor": {"tau_rise": _float, "tau_fall": _float, "gain": _float},
    "decoder": {"threshold": _float, "t_peak": _opt_float},
    "sweep": {"axis": str, "values": _floats},
    "run": {"channel": str, "out_dir": str, "jobs": _int},
}


def _line_of(text, section, key):
    """Line number of ``key`` inside ``[section]``, for error messages."""
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return no
    return None


def parse_config_string(text, source="<string>"):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str   # keys are case-sensitive (V1, T_b, ...)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValidationError(f"{source}: cannot parse config: {exc}") from exc

    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ValidationError(f"{source}: unknown section [{section}] "
                                  f"(expected one of {', '.join(SCHEMA)})")
        for key, raw in cp.items(section):
            where = f"{source}:{_line_of(text, section, key) or '?'}"
            conv = SCHEMA[section].get(key)
            if conv is None:
                raise ValidationError(f"{where}: unknown key {key!r} in [{section}]")
            try:
                values[section, key] = conv(raw)
            except ValueError as exc:
                raise ValidationError(f"{where}: bad value for [{section}] {key} = {raw!r}: {exc}") from exc
    return _build(values)


def parse_config(path):
    """Parse and validate a config file; a missing file is a validation error."""
    if not os.path.isfile(path):
        raise ValidationError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_config_string(fh.read(), source=str(path))


def _pick(values, section):
    return {k: v for (s, k), v in values.items() if s == section}


def _build(values):
    geo = _pick(values, "geometry")
    h = geo.pop("h", 0.015)
    cross = geo.pop("cross_section", "circular")
    probe = geo.pop("probe", None)
    spec = PipeSpec(**geo)
    turb = _pick(values, "turbulence")
    intensity = turb.pop("intensity", 0.05)
    link = _pick(values, "link")
    dec = _pick(values, "decoder")
    run = _pick(values, "run")
    return RunConfig(
        spec=spec, h=h, cross_section=cross,
        probe=Probe(probe) if probe is not None else None,
        props=FluidProps(**_pick(values, "fluid")),
        consts=TurbulenceConstants(**turb),
        intensity=intensity,
        settings=SolverSettings(**_pick(values, "solver")),
        transport=TransportParams(**_pick(values, "transport")),
        link=LinkConfig(**link, **dec),
        sensor=SensorModel(**_pick(values, "sensor")),
        sweep=SweepConfig(**_pick(values, "sweep")),
        **run,
    )
