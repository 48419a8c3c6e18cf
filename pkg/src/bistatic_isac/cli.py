"""Command-line entry point: ``isac {simulate,sense,eval,info}``.

Exit status is 0 on success, 2 for bad input (files, configuration) and 3
when processing fails on otherwise valid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .channel import synthesize_capture
from .config import load_config
from .errors import ConfigError, DelayAliased, InputError, IsacError
from .evaluate import evaluate, write_cdf_csv
from .fileio import (CaptureHeader, read_capture, read_header, read_records, read_truth_csv,
                     write_capture, write_records, write_truth_csv)
from .pipeline import sense
from .scene import SPEED_OF_LIGHT

EXIT_OK, EXIT_INPUT, EXIT_PROCESSING = 0, 2, 3

log = logging.getLogger("bistatic_isac")


def _simulate(args) -> int:
    cfg = load_config(args.scene, need_scene=True)
    sim = cfg.simulation
    seed = sim.seed if args.seed is None else args.seed
    num_packets = args.packets or sim.num_packets
    try:
        cap = synthesize_capture(cfg.scene, cfg.radio, num_packets, seed,
                                 sim.timing_offset_max, sim.phase_offset_max)
    except DelayAliased as exc:
        raise ConfigError(f"scene not representable: {exc}") from exc
    write_capture(args.out, CaptureHeader.for_radio(cfg.radio, num_packets), cap.samples())
    truth_path = args.truth or Path(args.out).with_suffix(".truth.csv")
    write_truth_csv(truth_path, cap.truth)
    log.info("wrote %d packets to %s, truth to %s", num_packets, args.out, truth_path)
    return EXIT_OK


def _check_header(header, radio) -> None:
    pairs = [("num_subcarriers", header.num_subcarriers, radio.num_subcarriers),
             ("num_antennas", header.num_antennas, radio.num_antennas),
             ("subcarrier_spacing", header.subcarrier_spacing, radio.subcarrier_spacing),
             ("carrier_frequency", header.carrier_frequency, radio.carrier_frequency),
             ("packet_period", header.packet_period, radio.packet_period)]
    bad = [f"{name}: capture {a} vs config {b}" for name, a, b in pairs if a != b]
    if bad:
        raise ConfigError("capture does not match [radio]: " + "; ".join(bad))


def _sense(args) -> int:
    cfg = load_config(args.config, need_sense=True)
    capture = read_capture(args.capture)
    _check_header(capture.header, cfg.radio)
    if args.dump_maps:
        Path(args.dump_maps).mkdir(parents=True, exist_ok=True)
    result = sense(capture.packets(), cfg.sense, dump_dir=args.dump_maps, keep_windows=False)
    write_records(args.out, result.records)
    confirmed = sum(t.state.value == "confirmed" for t in result.tracker.tracks)
    log.info("%d records, %d tracks (%d confirmed)", len(result.records), len(result.tracker.tracks), confirmed)
    return EXIT_OK


def _eval(args) -> int:
    report = evaluate(read_records(args.tracks), read_truth_csv(args.truth),
                      tolerance=args.tolerance, outliers=args.outliers)
    write_cdf_csv(args.out, report)
    print(json.dumps(report.summary(), indent=2))
    return EXIT_OK


def _info(args) -> int:
    h = read_header(args.capture)
    size = Path(args.capture).stat().st_size
    info = {
        "version": h.version,
        "num_subcarriers": h.num_subcarriers,
        "num_antennas": h.num_antennas,
        "num_packets": h.num_packets,
        "subcarrier_spacing_hz": h.subcarrier_spacing,
        "carrier_frequency_hz": h.carrier_frequency,
        "packet_period_s": h.packet_period,
        "duration_s": h.num_packets * h.packet_period,
        "unambiguous_range_m": SPEED_OF_LIGHT / h.subcarrier_spacing,
        "file_bytes": size,
    }
    read_capture(args.capture)  # full integrity check
    print(json.dumps(info, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    # -v is accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="synthesize a packet capture and ground truth")
    s.add_argument("--scene", required=True, help="TOML scene/radio config")
    s.add_argument("--out", required=True, help="capture file to write")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--packets", type=int, default=None, help="override [simulation] num_packets")
    s.add_argument("--truth", default=None, help="ground-truth CSV (default: <out>.truth.csv)")
    s.set_defaults(func=_simulate)

    s = sub.add_parser("sense", parents=[common], help="detect, localize and track targets in a capture")
    s.add_argument("--capture", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="JSON-lines track records")
    s.add_argument("--dump-maps", default=None, metavar="DIR",
                   help="write each window's delay-Doppler power map as CSV")
    s.set_defaults(func=_sense)

    s = sub.add_parser("eval", parents=[common], help="score track records against ground truth")
    s.add_argument("--tracks", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--out", required=True, help="error CDF as CSV")
    s.add_argument("--tolerance", type=float, default=None, help="timestamp alignment tolerance (s)")
    s.add_argument("--outliers", type=int, default=2, help="largest errors left out of the trimmed mean")
    s.set_defaults(func=_eval)

    s = sub.add_parser("info", parents=[common], help="print a capture header")
    s.add_argument("--capture", required=True)
    s.set_defaults(func=_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"isac {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IsacError as exc:
        print(f"isac {args.command}: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
