"""Operator command line for the capture/archive/dissemination pipeline.

Exit codes: 0 success, 1 usage error, 2 data/contract error, 3 I/O error.
Every subcommand streams records; none needs a whole trace in memory.
Reports go to stdout human-readable, or as JSON with ``--json``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import convert as conv
from .anonymize import CryptoPan, RecordAnonymizer, load_key
from .budget import DEFAULT_CAPACITY_BYTES, budget_report, parse_capacity
from .capture import RotationPolicy, TraceFileMeta, run_capture
from .catalog import Catalog
from .config import CONFIG_ENV_VAR, load_config
from .erf import read_records, write_records
from .errors import DuplicateEntry, MastsError
from .flows import FlowTable, sample_1_in_n, write_flow_csv
from .headers import parse_headers
from .pcap import read_pcap
from .series import timeseries, write_series_csv
from .synth import SynthConfig, synth_source
from .timefmt import parse_iso


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise UsageError(message)


def _record_stream(path: str):
    if path.endswith(".pcap"):
        return (conv.pcap_record_to_erf(rec) for rec in read_pcap(path))
    return read_records(path)


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    kwargs = dict(packets=args.packets, mean_rate_pps=args.rate, seed=args.seed,
                  spacing=args.spacing)
    if args.sizes:
        sizes = []
        for part in args.sizes.split(","):
            size, _, weight = part.partition(":")
            sizes.append((int(size), float(weight or 1.0)))
        kwargs["sizes"] = tuple(sizes)
    return SynthConfig(**kwargs)


def _emit(args: argparse.Namespace, payload: dict, human: str) -> None:
    print(json.dumps(payload, indent=2) if args.json else human)


# -- subcommand implementations ------------------------------------------------


def _cmd_capture(args: argparse.Namespace) -> int:
    if args.synth:
        records = synth_source(_synth_config(args))
    else:
        records = _record_stream(args.input)
    policy = RotationPolicy(max_bytes=args.max_bytes, max_interval=args.max_interval)
    anonymizer = None
    if args.key_file:
        anonymizer = RecordAnonymizer(CryptoPan(load_key(args.key_file)))
    metas, stats = run_capture(records, args.archive_root, args.probe, args.link,
                               policy=policy, anonymizer=anonymizer,
                               strip=not args.no_strip)
    payload = {"files_sealed": stats.files_sealed, "records": stats.records,
               "bytes_written": stats.bytes_written,
               "anonymize_skipped": stats.anonymize_skipped,
               "files": [m.file_name for m in metas]}
    _emit(args, payload,
          f"sealed {stats.files_sealed} files, {stats.records} records, "
          f"{stats.bytes_written} bytes")
    return 0


def _cmd_anonymize(args: argparse.Namespace) -> int:
    anonymizer = RecordAnonymizer(CryptoPan(load_key(args.key_file)))
    count = write_records(args.output,
                          (anonymizer.anonymize_record(rec)
                           for rec in _record_stream(args.input)))
    print(f"anonymized {count} records ({anonymizer.skipped} non-IP skipped)")
    return 0


def _cmd_convert(args: argparse.Namespace) -> int:
    src, dst = args.input, args.output
    if src.endswith(".erf") and dst.endswith(".pcap"):
        stats = conv.convert_erf_to_pcap(src, dst, snaplen=args.snaplen)
    elif src.endswith(".pcap") and dst.endswith(".erf"):
        stats = conv.convert_pcap_to_erf(src, dst)
    else:
        raise UsageError("conversion direction must be .erf->.pcap or .pcap->.erf")
    print(f"converted {stats.records} records "
          f"(total lost counter {stats.total_lost}, "
          f"{stats.rx_error_records} rx-error records kept)")
    return 0


def _cmd_flows(args: argparse.Namespace) -> int:
    table = FlowTable(active_timeout=args.active_timeout,
                      inactive_timeout=args.inactive_timeout)
    records = _record_stream(args.input)
    if args.sample_n > 1:
        records = sample_1_in_n(records, args.sample_n, seed=args.seed,
                                mode=args.sample_mode)
    done = []
    for rec in records:
        done.extend(table.update(parse_headers(rec.frame), rec.ts, rec.wlen))
    done.extend(table.flush())
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        count = write_flow_csv(done, out)
    finally:
        if args.output:
            out.close()
    print(f"exported {count} flows ({table.skipped_non_ip} non-IP packets skipped)",
          file=sys.stderr)
    return 0


def _cmd_series(args: argparse.Namespace) -> int:
    series = timeseries(_record_stream(args.input), args.bin)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        write_series_csv(series, out)
    finally:
        if args.output:
            out.close()
    return 0


def _cmd_budget(args: argparse.Namespace) -> int:
    capacity = parse_capacity(args.capacity)
    rows = budget_report(capacity)
    if args.json:
        print(json.dumps([{
            "tier": row.tier.name, "max_rate_bps": row.tier.max_rate_bps,
            "mean_rate_bps": row.tier.mean_rate_bps,
            "seconds": float(row.seconds), "days": row.days, "years": row.years,
            "label": row.label} for row in rows], indent=2))
        return 0
    print(f"{'tier':<20} {'max rate':>12} {'mean rate':>12} "
          f"{'exact':>12} {'time to fill':>14}")
    for row in rows:
        exact = f"{row.days:.3g} d" if row.days < 1000 else f"{row.years:.3g} y"
        print(f"{row.tier.name:<20} {_rate(row.tier.max_rate_bps):>12} "
              f"{_rate(row.tier.mean_rate_bps):>12} {exact:>12} {row.label:>14}")
    return 0


def _rate(bps: int) -> str:
    for unit, size in (("Gb/s", 10**9), ("Mb/s", 10**6), ("Kb/s", 10**3)):
        if bps >= size:
            value = bps / size
            return f"{value:g}{unit}"
    return f"{bps}b/s"


def _cmd_ingest(args: argparse.Namespace) -> int:
    with Catalog(args.archive_root, args.db) as catalog:
        if args.probe_config:
            config = catalog.ingest_probe_config(Path(args.probe_config).read_text())
            print(f"probe {config.probe_id} config version {config.version}")
        ingested = skipped = 0
        for sidecar in sorted(Path(args.archive_root).glob("*/*/*.meta.json")):
            meta = TraceFileMeta.from_json_dict(json.loads(sidecar.read_text()))
            try:
                catalog.ingest(meta, args.tier)
                ingested += 1
            except DuplicateEntry:
                skipped += 1
        _emit(args, {"ingested": ingested, "already_present": skipped},
              f"ingested {ingested} files ({skipped} already catalogued)")
    return 0


def _cmd_expire(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    policy = config.retention
    now = parse_iso(args.now) if args.now else None
    with Catalog(args.archive_root, args.db) as catalog:
        report = catalog.expire(policy, now=now)
        audit = catalog.audit(fix=True)
    payload = {"removed": report.removed,
               "failed": [{"file": name, "error": err} for name, err in report.failed],
               "audit_events": audit}
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(f"removed {len(report.removed)} files, {len(report.failed)} failures")
        for event in audit:  # audit report: one JSON object per line
            print(json.dumps(event))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.host:
        config.listen_host = args.host
    if args.port:
        config.listen_port = args.port
    from .service import run_service

    run_service(config)
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="masts", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("capture", help="ingest records into a rotated archive")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="ERF or pcap file to ingest")
    src.add_argument("--synth", action="store_true", help="use the synthetic source")
    p.add_argument("--archive-root", required=True)
    p.add_argument("--probe", required=True)
    p.add_argument("--link", required=True)
    p.add_argument("--key-file", help="anonymization key file (64 hex chars)")
    p.add_argument("--max-bytes", type=int, default=RotationPolicy().max_bytes)
    p.add_argument("--max-interval", type=float, default=RotationPolicy().max_interval)
    p.add_argument("--no-strip", action="store_true",
                   help="keep payloads (testing only)")
    p.add_argument("--packets", type=int, default=10_000)
    p.add_argument("--rate", type=float, default=1000.0, help="mean packets/s")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", help="wire sizes as SIZE:WEIGHT,SIZE:WEIGHT,...")
    p.add_argument("--spacing", choices=("poisson", "constant"), default="poisson")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_capture)

    p = sub.add_parser("anonymize", help="prefix-preservingly anonymize a trace file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--key-file", required=True)
    p.set_defaults(func=_cmd_anonymize)

    p = sub.add_parser("convert", help="convert between ERF and pcap")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--snaplen", type=int, default=65535)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("flows", help="aggregate a trace into flow records")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--sample-n", type=int, default=1, help="keep 1 in N packets")
    p.add_argument("--sample-mode", choices=("random", "stride"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--active-timeout", type=float, default=1800.0)
    p.add_argument("--inactive-timeout", type=float, default=15.0)
    p.set_defaults(func=_cmd_flows)

    p = sub.add_parser("series", help="bytes-per-bin time series CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--bin", default="0.001", help="bin width in seconds")
    p.set_defaults(func=_cmd_series)

    p = sub.add_parser("budget", help="storage fill-time table per tier")
    p.add_argument("--capacity", default=str(DEFAULT_CAPACITY_BYTES),
                   help="store size, e.g. 10TB (decimal units)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_budget)

    p = sub.add_parser("ingest", help="catalog sealed files under an archive root")
    p.add_argument("--archive-root", required=True)
    p.add_argument("--db", help="catalog database path (default: in the root)")
    p.add_argument("--tier", default="headers")
    p.add_argument("--probe-config", help="probe description XML to ingest")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("expire", help="retention pass: delete files, keep metadata")
    p.add_argument("--archive-root", required=True)
    p.add_argument("--db")
    p.add_argument("--config", help=f"TOML config (default ${CONFIG_ENV_VAR})")
    p.add_argument("--now", help="override the clock (ISO-8601, for testing)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_expire)

    p = sub.add_parser("serve", help="run the archive access service")
    p.add_argument("--config", help=f"TOML config (default ${CONFIG_ENV_VAR})")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=_cmd_serve)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help and --version exit through here
        return exc.code or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except MastsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
