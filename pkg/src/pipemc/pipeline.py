"""
End-to-end experiments shared by the CLI and the tests: flow-state caching,
channel simulation on either backend, pilot calibration, decoding and the
parameter sweeps.
"""

from dataclasses import replace
import hashlib
import logging
import os

import numpy as np

from .errors import ValidationError
from .flow import FlowBC, load_flow, save_flow, solve_steady_flow
from .geometry import build_mesh
from .link import (DecoderConfig, decode, duct_area, modulate, normalize, random_bits,
                   sensor_respond, calibrate_peak)
from .reduced import channel_from_config, sequence_response
from .transport import RxTrace, run_transmission

log = logging.getLogger(__name__)

__all__ = ["message_bits", "get_mesh", "flow_pair", "simulate", "receive", "pilot",
           "transmit", "run_ber", "sweep_point", "sweep"]

_meshes = {}


def message_bits(cfg):
    link = cfg.link
    if link.bits is not None:
        return np.array(link.bits, dtype=np.int8)
    return random_bits(link.seed, link.N)


def get_mesh(cfg):
    key = (cfg.spec, cfg.h)
    if key not in _meshes:
        _meshes[key] = build_mesh(cfg.spec, cfg.h)
    return _meshes[key]


def _flow_key(cfg, V1, V2, open2):
    text = repr((cfg.spec, cfg.h, cfg.props, cfg.consts, cfg.settings, cfg.intensity,
                 float(V1), float(V2), bool(open2)))
    return hashlib.sha256(text.encode()).hexdigest()[:20]


_flows = {}


def _flow(cfg, V1, V2, open2, cache_dir):
    key = _flow_key(cfg, V1, V2, open2)
    if key in _flows:
        return _flows[key]
    mesh = get_mesh(cfg)
    path = os.path.join(cache_dir, f"flow_{key}.npz") if cache_dir else None
    if path and os.path.exists(path):
        field = load_flow(path, mesh)
        log.info("loaded cached flow state %s", path)
    else:
        bc = FlowBC(V1=V1, V2_on=V2 if open2 else 0.0, intensity=cfg.intensity,
                    Dh_inlet1=cfg.spec.D1, Dh_inlet2=cfg.spec.D2)
        field = solve_steady_flow(mesh, bc, cfg.props, cfg.consts, cfg.settings, inlet2_open=open2)
        if path:
            os.makedirs(cache_dir, exist_ok=True)
            tmp = f"{path}.{os.getpid()}.tmp.npz"
            save_flow(tmp, field)
            os.replace(tmp, path)
    _flows[key] = field
    return field


def flow_pair(cfg, V1, V2, cache_dir=None):
    """(inlet 2 blowing at V2, inlet 2 closed) for carrier speed V1."""
    return _flow(cfg, V1, V2, True, cache_dir), _flow(cfg, V1, V2, False, cache_dir)


def simulate(cfg, bits, V1, V2, T_e, T_b, duration, cache_dir=None, on_snapshot=None,
             snapshot_every=None):
    """Probe trace for an OOK message on the configured channel."""
    schedule = modulate(bits, T_b, T_e, V2)
    dt = cfg.transport.dt
    if cfg.channel == "reduced1d":
        n = int(round(duration / dt))
        times = np.arange(1, n + 1) * dt
        ch = channel_from_config(cfg.spec, cfg.props, V1, cfg.cross_section)
        conc = sequence_response(ch, schedule, cfg.props, times,
                                 duct_area(cfg.spec.D2, cfg.cross_section))
        rho = cfg.props.rho_air
        trace = RxTrace(times=times, Y=conc / rho, conc=conc)
    else:
        fields = flow_pair(cfg, V1, V2, cache_dir)
        trace = run_transmission(get_mesh(cfg), fields, schedule, cfg.probe, cfg.transport,
                                 duration, cfg.props, snapshot_every=snapshot_every,
                                 on_snapshot=on_snapshot)
    trace.meta.update(V1=V1, V2=V2, T_e=T_e, T_b=T_b, channel=cfg.channel,
                      bits="".join(str(int(b)) for b in bits))
    return trace


def receive(cfg, trace):
    """(sensor output, normalized decoder input) for a probe trace."""
    if cfg.link.sensor:
        sensed = sensor_respond(trace.conc, trace.dt, cfg.sensor)
    else:
        sensed = trace.conc.copy()
    normed, _ = normalize(sensed)
    return sensed, normed


def pilot(cfg, V1=None, V2=None, T_e=None, T_b=None, cache_dir=None):
    """Single 1-bit run; returns (t_peak of the decoder input, trace, sensed)."""
    link = cfg.link
    V1 = link.V1 if V1 is None else V1
    V2 = link.V2 if V2 is None else V2
    T_e = link.T_e if T_e is None else T_e
    T_b = link.T_b if T_b is None else T_b
    trace = simulate(cfg, [1], V1, V2, T_e, T_b, T_b + link.tail, cache_dir)
    sensed, _ = receive(cfg, trace)
    return calibrate_peak(trace.times, sensed), trace, sensed


def transmit(cfg, bits=None, cache_dir=None, **kw):
    link = cfg.link
    bits = message_bits(cfg) if bits is None else np.asarray(bits, dtype=np.int8)
    duration = len(bits) * link.T_b + link.tail
    trace = simulate(cfg, bits, link.V1, link.V2, link.T_e, link.T_b, duration, cache_dir, **kw)
    return bits, trace


def run_ber(cfg, cache_dir=None):
    """Pilot calibration, message transmission and decoding.

    Returns (DecodedResult scored against the sent bits, trace, sensed, t_peak).
    """
    link = cfg.link
    t_peak = link.t_peak
    if t_peak is None:
        t_peak, _, _ = pilot(cfg, cache_dir=cache_dir)
    bits, trace = transmit(cfg, cache_dir=cache_dir)
    sensed, normed = receive(cfg, trace)
    dec_cfg = DecoderConfig(t_peak=t_peak, T_b=link.T_b, N=len(bits), threshold=link.threshold)
    result = decode(trace.times, normed, dec_cfg).score(bits)
    return result, trace, sensed, t_peak


_AXIS_FIELD = {"Te": "T_e", "V2": "V2", "V1": "V1", "Tb": "T_b"}


def sweep_point(cfg, axis, value, cache_dir=None):
    """Single-pulse response with one link parameter set to ``value``.

    Returns a dict with the raw probe peak (kg/m^3), its time, the sensed
    peak, and for the Tb axis the BER of the configured message.
    """
    if axis not in _AXIS_FIELD:
        raise ValidationError(f"unknown sweep axis {axis!r}")
    link = replace(cfg.link, **{_AXIS_FIELD[axis]: float(value)})
    point_cfg = replace(cfg, link=link)
    trace = simulate(point_cfg, [1], link.V1, link.V2, link.T_e, link.T_b,
                     link.T_b + link.tail, cache_dir)
    i = int(np.argmax(trace.conc))
    sensed, _ = receive(point_cfg, trace)
    row = {"axis": axis, "value": float(value), "peak_raw": float(trace.conc[i]),
           "t_peak": float(trace.times[i]), "sensor_peak": float(sensed.max()),
           "audit_error": trace.audit.rel_error if trace.audit is not None else 0.0,
           "ber": float("nan")}
    if axis == "Tb":
        row["ber"] = run_ber(point_cfg, cache_dir)[0].ber
    return row, trace


def sweep(cfg, axis, values, cache_dir=None, jobs=1):
    """Run every sweep point; rows come back in the order of ``values``.

    ``peak_norm`` is each raw peak divided by the largest raw peak of the sweep.
    """
    values = [float(v) for v in values]
    if jobs > 1 and len(values) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=min(jobs, len(values))) as pool:
            out = list(pool.map(sweep_point, [cfg] * len(values), [axis] * len(values),
                                values, [cache_dir] * len(values)))
    else:
        out = [sweep_point(cfg, axis, v, cache_dir) for v in values]
    rows = [r for r, _ in out]
    top = max(r["peak_raw"] for r in rows)
    for r in rows:
        r["peak_norm"] = r["peak_raw"] / top if top > 0 else 0.0
    return rows, [t for _, t in out]
