#!/usr/bin/env python3
"""End-to-end desk run: synthesize traffic, capture, catalog, summarize.

Writes a disposable archive under ./demo-archive and prints what each stage
produced.  Start the access service on the result afterwards with:

    masts serve --config demo-archive/service.toml
"""

from __future__ import annotations

import io
import secrets
import shutil
from pathlib import Path

from masts.anonymize import CryptoPan, RecordAnonymizer
from masts.budget import budget_report
from masts.capture import RotationPolicy, run_capture
from masts.catalog import Catalog, RetentionPolicy
from masts.flows import FlowTable, write_flow_csv
from masts.headers import parse_headers
from masts.erf import read_records
from masts.series import timeseries
from masts.synth import SynthConfig, synth_source

ROOT = Path("demo-archive")


def main() -> None:
    if ROOT.exists():
        shutil.rmtree(ROOT)
    ROOT.mkdir()

    key_path = ROOT / "anon.key"
    key_path.write_text(secrets.token_bytes(32).hex() + "\n")
    key = bytes.fromhex(key_path.read_text().strip())

    config = SynthConfig(packets=20_000, mean_rate_pps=2_000.0, seed=1)
    policy = RotationPolicy(max_bytes=512 * 1024, max_interval=2.0)
    metas, stats = run_capture(synth_source(config), ROOT, "demo", "link0",
                               policy=policy,
                               anonymizer=RecordAnonymizer(CryptoPan(key)))
    print(f"capture: {stats.records} packets -> {stats.files_sealed} files, "
          f"{stats.bytes_written} bytes after stripping")

    with Catalog(ROOT) as catalog:
        for meta in metas:
            catalog.ingest(meta, "headers")
        catalog.ingest_probe_config(
            '<probe id="demo"><hardware>synthetic source</hardware>'
            '<software>demo_pipeline.py</software>'
            '<link id="link0" bandwidth_bps="1000000000"/></probe>')
        print(f"catalog: {catalog.count()} entries, "
              f"retention policy {list(RetentionPolicy().lifetimes)}")

        table = FlowTable()
        seen_bytes = 0
        for entry in catalog.search():
            path = catalog.trace_path(entry)
            for rec in read_records(path):
                table.update(parse_headers(rec.frame), rec.ts, rec.wlen)
                seen_bytes += rec.wlen
        flows = table.flush()
        out = io.StringIO()
        write_flow_csv(flows, out)
        (ROOT / "flows.csv").write_text(out.getvalue())
        print(f"flows: {len(flows)} flows over {seen_bytes} wire bytes "
              f"-> {ROOT / 'flows.csv'}")

        series = timeseries(read_records(catalog.trace_path(catalog.search()[0])),
                            "0.001")
        print(f"series: first file has {len(series.bins)} one-millisecond bins, "
              f"{series.total} bytes")

    (ROOT / "service.toml").write_text(
        f'archive_root = "{ROOT}"\nkey_path = "{key_path}"\n'
        "[listen]\nhost = \"127.0.0.1\"\nport = 8321\n")

    print("\nstorage budget at 10 TB per tier:")
    for row in budget_report():
        print(f"  {row.tier.name:<20} {row.label}")


if __name__ == "__main__":
    main()
