"""
Link layer: OOK modulation, emission rates, sensor dynamics and the
peak-sampled threshold decoder.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ValidationError

__all__ = [
    "EmissionSchedule", "SensorModel", "DecoderConfig", "DecodedResult",
    "modulate", "is_emitting", "duct_area", "mass_flow_rate", "molar_flow_rate",
    "sensor_respond", "normalize", "calibrate_peak", "decode", "ber",
    "random_bits", "dilution_factor",
]

# absorbs floating-point noise when sample times are compared to window edges
_TIME_TOL = 1e-9


@dataclass(frozen=True)
class EmissionSchedule:
    bits: tuple
    T_b: float
    T_e: float
    V2: float

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)
        if not self.T_b > 0:
            raise ValidationError(f"T_b must be > 0, got {self.T_b}")
        if not 0 < self.T_e <= self.T_b:
            raise ValidationError(f"emission duration T_e={self.T_e} must satisfy 0 < T_e <= T_b={self.T_b}")
        if not self.V2 > 0:
            raise ValidationError(f"V2 must be > 0, got {self.V2}")

    @property
    def windows(self):
        """Half-open emission windows (start, end] of the 1-bits, in order."""
        return [(n * self.T_b, n * self.T_b + self.T_e) for n, b in enumerate(self.bits) if b]

    @property
    def frame_duration(self):
        return len(self.bits) * self.T_b


def modulate(bits, T_b, T_e, V2):
    return EmissionSchedule(tuple(bits), float(T_b), float(T_e), float(V2))


def is_emitting(schedule, t):
    """True when n*T_b < t <= n*T_b + T_e for some transmitted 1-bit n."""
    if t <= _TIME_TOL:
        return False
    n = math.ceil(t / schedule.T_b - _TIME_TOL) - 1
    for m in (n, n + 1):
        if 0 <= m < len(schedule.bits) and schedule.bits[m]:
            start = m * schedule.T_b
            if start + _TIME_TOL < t <= start + schedule.T_e + _TIME_TOL:
                return True
    return False


def duct_area(D, mode="circular"):
    if mode == "circular":
        return math.pi * (D / 2.0) ** 2
    if mode == "square":
        return D * D
    raise ValidationError(f"unknown cross-section mode {mode!r}; expected 'circular' or 'square'")


def mass_flow_rate(schedule, t, props, A_branch):
    """VOC mass flow through inlet 2 in kg/s."""
    return props.rho_voc * A_branch * schedule.V2 if is_emitting(schedule, t) else 0.0


def molar_flow_rate(schedule, t, props, A_branch):
    """VOC molar flow in mol/s (kg/s converted to g/s, then over g/mol)."""
    return mass_flow_rate(schedule, t, props, A_branch) * 1000.0 / props.MW_voc


@dataclass(frozen=True)
class SensorModel:
    """Asymmetric first-order MOX response; output is proportional to G = 1/R."""
    tau_rise: float = 0.3
    tau_fall: float = 1.5
    gain: float = 1.0

    def __post_init__(self):
        if not (self.tau_rise > 0 and self.tau_fall > 0):
            raise ValidationError("sensor time constants must be positive")
        if self.tau_fall < self.tau_rise:
            raise ValidationError("tau_fall must be >= tau_rise")
        if not self.gain > 0:
            raise ValidationError("sensor gain must be positive")


def sensor_respond(values, dt, model=SensorModel()):
    """Integrate dS/dt = (gain*C - S)/tau with the input held over each interval.

    tau is ``tau_rise`` while the target exceeds the current output and
    ``tau_fall`` otherwise; each interval is stepped exactly.
    """
    c = np.asarray(values, dtype=float)
    out = np.empty_like(c)
    if c.size == 0:
        return out
    a_rise = math.exp(-dt / model.tau_rise)
    a_fall = math.exp(-dt / model.tau_fall)
    s = 0.0
    target = model.gain * c
    for i in range(c.size):
        out[i] = s
        tgt = target[i]
        a = a_rise if tgt > s else a_fall
        s = tgt + (s - tgt) * a
    return np.maximum(out, 0.0)


def normalize(values):
    """Divide by the global maximum.  Returns (normalized, was_zero)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValidationError("cannot normalize an empty trace")
    peak = v.max()
    if not peak > 0:
        return v.copy(), True
    return v / peak, False


def calibrate_peak(times, values):
    """Time of the global maximum of a single-pulse pilot trace (earliest on ties)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not v.max() > 0:
        raise ValidationError("pilot trace carries no signal; cannot calibrate the peak time")
    return float(np.asarray(times)[int(np.argmax(v))])


@dataclass(frozen=True)
class DecoderConfig:
    t_peak: float
    T_b: float
    N: int
    threshold: float = 0.5

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValidationError(f"threshold must lie in (0, 1), got {self.threshold}")
        if not self.t_peak > 0:
            raise ValidationError(f"t_peak must be > 0, got {self.t_peak}")
        if not self.T_b > 0 or self.N < 1:
            raise ValidationError("decoder needs T_b > 0 and N >= 1")


@dataclass
class DecodedResult:
    bits: np.ndarray
    sample_times: np.ndarray
    samples: np.ndarray
    reference: np.ndarray = None
    errors: int = field(default=None)
    ber: float = field(default=None)

    def score(self, reference):
        ref = np.asarray(reference, dtype=np.int8)
        self.reference = ref
        self.errors = int(np.count_nonzero(ref != self.bits))
        self.ber = ber(ref, self.bits)
        return self


def decode(times, normalized, cfg):
    """Sample at t_peak + n*T_b (nearest sample) and threshold.

    ``times`` must be uniformly spaced.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(normalized, dtype=float)
    if t.size < 2:
        raise ValidationError("trace needs at least two samples")
    dt = t[1] - t[0]
    ts = cfg.t_peak + np.arange(cfg.N) * cfg.T_b
    idx = np.rint((ts - t[0]) / dt).astype(np.int64)
    if idx[-1] >= t.size or idx[0] < 0:
        raise ValidationError(
            f"trace covers [{t[0]:.6g}, {t[-1]:.6g}] s but sampling needs up to "
            f"{ts[-1]:.6g} s; missing span ({t[-1]:.6g}, {ts[-1]:.6g}] s")
    samples = v[idx]
    return DecodedResult(bits=(samples >= cfg.threshold).astype(np.int8),
                         sample_times=ts, samples=samples)


def ber(tx, rx):
    tx = np.asarray(tx)
    rx = np.asarray(rx)
    if tx.shape != rx.shape:
        raise ValidationError(f"bit sequences differ in length: {tx.size} vs {rx.size}")
    if tx.size == 0:
        raise ValidationError("cannot compute BER of empty sequences")
    return np.count_nonzero(tx != rx) / tx.size


def random_bits(seed, N):
    """N equiprobable bits from numpy's PCG64 generator seeded with ``seed``."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.integers(0, 2, size=N, dtype=np.int8)


def dilution_factor(V1, V2, D1, D2):
    if min(V1, V2, D1, D2) <= 0:
        raise ValidationError("dilution factor needs positive velocities and diameters")
    return (V2 / V1) * (D2 / D1) ** 2
