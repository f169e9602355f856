/** Pure view-model behavior: validation gates requests, staleness, empty state. */

import { describe, expect, test } from "vitest";

import type { ArchiveClient, TraceEntry } from "../src/api.js";
import { SearchView, validateWindow } from "../src/search.js";

function entry(name: string, present = true): TraceEntry {
  return {
    file_name: name, probe_id: "p1", link_id: "l1",
    t_start: "2008-01-10T00:00:00+00:00", t_end: "2008-01-10T00:00:01+00:00",
    packet_count: 10, byte_count: 720, lost_packets: 0, anonymized: true,
    state: present ? "sealed" : "expired", tier: "headers",
    ingested_at: "2008-01-10T01:00:00+00:00", file_present: present,
    pinned: false,
  };
}

describe("validateWindow", () => {
  test("accepts sensible windows", () => {
    expect(validateWindow("2008-01-01T00:00:00Z", "2008-01-02T00:00:00Z")).toBeNull();
    expect(validateWindow(undefined, undefined)).toBeNull();
    expect(validateWindow("2008-01-01T00:00:00Z", undefined)).toBeNull();
  });

  test("rejects inverted windows", () => {
    expect(validateWindow("2008-01-02T00:00:00Z", "2008-01-01T00:00:00Z"))
      .toMatch(/start is after/);
  });

  test("rejects unparseable timestamps", () => {
    expect(validateWindow("soon", undefined)).toMatch(/not a valid timestamp/);
  });
});

describe("SearchView", () => {
  test("invalid window blocks the request entirely", async () => {
    let calls = 0;
    const client = {
      searchTraces: async () => { calls += 1; return []; },
    } as unknown as ArchiveClient;
    const view = new SearchView(client);
    const ran = await view.run(
      { from: "2008-01-02T00:00:00Z", to: "2008-01-01T00:00:00Z" }, true);
    expect(ran).toBe(false);
    expect(calls).toBe(0);
    expect(view.state.validationError).toMatch(/start is after/);
  });

  test("empty result set is an explicit empty state", async () => {
    const client = {
      searchTraces: async () => [],
    } as unknown as ArchiveClient;
    const view = new SearchView(client);
    await view.run({}, true);
    expect(view.state.empty).toBe(true);
    expect(view.state.rows).toHaveLength(0);
    expect(view.state.validationError).toBeUndefined();
  });

  test("expired entries are rows without download controls", async () => {
    const client = {
      searchTraces: async () => [entry("a.erf"), entry("b.erf", false)],
    } as unknown as ArchiveClient;
    const view = new SearchView(client);
    await view.run({}, true);
    expect(view.state.rows.map((r) => r.downloadable)).toEqual([true, false]);
    expect(view.state.rows.map((r) => r.expired)).toEqual([false, true]);
  });

  test("authorization flag disables all download controls", async () => {
    const client = {
      searchTraces: async () => [entry("a.erf")],
    } as unknown as ArchiveClient;
    const view = new SearchView(client);
    await view.run({}, false);
    expect(view.state.rows[0]!.downloadable).toBe(false);
  });

  test("stale responses are dropped", async () => {
    const resolvers: Array<(value: TraceEntry[]) => void> = [];
    const client = {
      searchTraces: () =>
        new Promise<TraceEntry[]>((resolve) => resolvers.push(resolve)),
    } as unknown as ArchiveClient;
    const view = new SearchView(client);
    const first = view.run({ probe: "old" }, true);
    const second = view.run({ probe: "new" }, true);
    // The late arrival of the superseded search must not repaint.
    resolvers[1]!([entry("new.erf")]);
    await second;
    resolvers[0]!([entry("old.erf"), entry("older.erf")]);
    await first;
    expect(view.state.rows.map((r) => r.entry.file_name)).toEqual(["new.erf"]);
  });
});
