"""
Command-line interface.

    pipemc mesh-info  [--config F]
    pipemc flow       [--config F] [--out D] [--dump-fields]
    pipemc transmit   [--config F] [--out D] [--channel C] [--seed S] [--dump-fields]
    pipemc decode     TRACE [--config F] [--out D] [--seed S]
    pipemc ber        [--config F] [--out D] [--channel C] [--seed S]
    pipemc sweep      [--config F] [--out D] [--channel C] [--axis A] [--values V ...] [--jobs N]

Logging goes to stderr; data goes to files under --out (and short
summaries to stdout).  Exit status: 0 success, 1 invalid input, 2
numerical failure.
"""

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import pipeline
from .config import CHANNELS, SWEEP_AXES, RunConfig, parse_config
from .errors import NumericalError, ValidationError
from .flow import write_field_csv
from .geometry import INLET1, INLET2, OUTLET, mesh_report, probe_cell
from .link import DecoderConfig, decode, normalize
from .transport import read_trace_csv, write_snapshot_csv, write_trace_csv

log = logging.getLogger("pipemc")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % x


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _load_config(args):
    cfg = parse_config(args.config) if args.config else RunConfig()
    over = {}
    if getattr(args, "out", None):
        over["out_dir"] = args.out
    if getattr(args, "channel", None):
        over["channel"] = args.channel
    if getattr(args, "jobs", None) is not None:
        over["jobs"] = args.jobs
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    cfg = cfg.with_overrides(**over) if over else cfg
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg


def _cache(cfg):
    return os.path.join(cfg.out_dir, "flow_cache")


def cmd_mesh_info(cfg, args):
    mesh = pipeline.get_mesh(cfg)
    cell = probe_cell(mesh, cfg.probe)
    x, y, z = mesh.centers[cell]
    sys.stdout.write(mesh_report(mesh))
    print(f"probe: cell {cell} centred at ({x:.6g}, {y:.6g}, {z:.6g}) m")
    return EXIT_OK


def cmd_flow(cfg, args):
    link = cfg.link
    on, off = pipeline.flow_pair(cfg, link.V1, link.V2, _cache(cfg))
    rows = []
    for name, f in (("on", on), ("off", off)):
        rows.append([name, f.iterations, max(f.residuals.values()) if f.residuals else float("nan"),
                     f.clip_count, -f.boundary_flux(INLET1), -f.boundary_flux(INLET2),
                     f.boundary_flux(OUTLET), f.mass_imbalance(), f.outlet_mean_speed()])
        if args.dump_fields:
            write_field_csv(os.path.join(cfg.out_dir, f"field_{name}.csv"), f)
    path = os.path.join(cfg.out_dir, "flow_summary.csv")
    _write_rows(path, ["state", "iterations", "max_residual", "clip_count", "inlet1_kg_s",
                       "inlet2_kg_s", "outlet_kg_s", "imbalance", "outlet_mean_speed"], rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_transmit(cfg, args):
    kw = {}
    if args.dump_fields and cfg.channel == "solver3d":
        mesh = pipeline.get_mesh(cfg)
        snap_dir = os.path.join(cfg.out_dir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        kw["snapshot_every"] = max(1, int(round(cfg.link.T_b / cfg.transport.dt)))
        kw["on_snapshot"] = lambda t, Y: write_snapshot_csv(
            os.path.join(snap_dir, f"Y_t{t:010.4f}.csv"), mesh, Y, cfg.props.rho_air)
    bits, trace = pipeline.transmit(cfg, cache_dir=_cache(cfg), **kw)
    sensed, normed = pipeline.receive(cfg, trace)
    path = os.path.join(cfg.out_dir, "trace.csv")
    write_trace_csv(path, trace, {"sensor": sensed, "normalized": normed})
    _write_rows(os.path.join(cfg.out_dir, "bits_tx.csv"), ["n", "bit"],
                [[i, int(b)] for i, b in enumerate(bits)])
    if trace.audit is not None:
        a = trace.audit
        _write_rows(os.path.join(cfg.out_dir, "mass_audit.csv"),
                    ["injected_kg", "resident_kg", "outflowed_kg", "rel_error"],
                    [[a.injected, a.resident, a.outflowed, a.rel_error]])
    print(f"wrote {path} ({len(trace.times)} samples, {len(bits)} bits)")
    return EXIT_OK


def _decoded_rows(result):
    return [[n, ts, s, int(tx), int(rx)] for n, (ts, s, tx, rx) in enumerate(
        zip(result.sample_times, result.samples, result.reference, result.bits))]


def _report(cfg, result):
    _write_rows(os.path.join(cfg.out_dir, "decoded.csv"),
                ["n", "T_s", "sample_value", "bit_tx", "bit_rx"], _decoded_rows(result))
    n = len(result.bits)
    _write_rows(os.path.join(cfg.out_dir, "ber.csv"), ["N", "errors", "ber"],
                [[n, result.errors, result.ber]])
    print("N,errors,ber")
    print(f"{n},{result.errors},{_fmt(result.ber)}")


def cmd_decode(cfg, args):
    trace, extra = read_trace_csv(args.trace)
    column = extra.get("normalized")
    if column is None:
        column, _ = normalize(trace.conc)
    bits = pipeline.message_bits(cfg)
    t_peak = cfg.link.t_peak
    if t_peak is None:
        t_peak, _, _ = pipeline.pilot(cfg, cache_dir=_cache(cfg))
    dec_cfg = DecoderConfig(t_peak=t_peak, T_b=cfg.link.T_b, N=len(bits), threshold=cfg.link.threshold)
    result = decode(trace.times, column, dec_cfg).score(bits)
    _report(cfg, result)
    return EXIT_OK


def cmd_ber(cfg, args):
    result, trace, sensed, t_peak = pipeline.run_ber(cfg, cache_dir=_cache(cfg))
    log.info("pilot peak time %.4g s", t_peak)
    _report(cfg, result)
    return EXIT_OK


def cmd_sweep(cfg, args):
    axis = args.axis or cfg.sweep.axis
    if axis not in SWEEP_AXES:
        raise ValidationError(f"sweep axis must be one of {', '.join(SWEEP_AXES)}")
    values = args.values or cfg.sweep.values
    jobs = cfg.jobs or os.cpu_count() or 1
    rows, traces = pipeline.sweep(cfg, axis, values, cache_dir=_cache(cfg), jobs=jobs)
    cols = ["axis", "value", "peak_raw", "peak_norm", "t_peak", "sensor_peak", "audit_error", "ber"]
    path = os.path.join(cfg.out_dir, f"sweep_{axis}.csv")
    _write_rows(path, cols, [[r[c] for c in cols] for r in rows])
    for r, trace in zip(rows, traces):
        sensed, normed = pipeline.receive(cfg, trace)
        write_trace_csv(os.path.join(cfg.out_dir, f"sweep_{axis}_{r['value']:g}.csv"), trace,
                        {"sensor": sensed, "normalized": normed})
    print(",".join(cols))
    for r in rows:
        print(",".join(_fmt(r[c]) for c in cols))
    return EXIT_OK


COMMANDS = {"mesh-info": cmd_mesh_info, "flow": cmd_flow, "transmit": cmd_transmit,
            "decode": cmd_decode, "ber": cmd_ber, "sweep": cmd_sweep}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (default: [run] out_dir)")
    common.add_argument("--seed", type=int, metavar="U64", help="seed for the random message")
    common.add_argument("--jobs", type=int, metavar="N", help="worker processes for sweeps")
    common.add_argument("--channel", choices=CHANNELS, help="channel backend")
    common.add_argument("--dump-fields", action="store_true",
                        help="also write per-cell flow fields / concentration snapshots")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="pipemc", description=__doc__.split("\n\n")[0].strip(),
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("mesh-info", parents=[common], help="print grid statistics")
    sub.add_parser("flow", parents=[common], help="solve the two quasi-steady flow states")
    sub.add_parser("transmit", parents=[common], help="simulate a message and write the probe trace")
    d = sub.add_parser("decode", parents=[common], help="decode a trace CSV")
    d.add_argument("trace", help="trace CSV written by 'transmit'")
    sub.add_parser("ber", parents=[common], help="transmit, decode and report the bit error rate")
    s = sub.add_parser("sweep", parents=[common], help="single-pulse parameter sweep")
    s.add_argument("--axis", choices=SWEEP_AXES)
    s.add_argument("--values", type=float, nargs="+")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("pyamg").setLevel(max(level, logging.WARNING))
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
