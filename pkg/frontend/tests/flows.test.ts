/**
 * The full user journeys, exercised against the live service on the fixture
 * archive: register -> AUP -> search -> download, the decline path, and the
 * expired-file and category edge cases.
 */

import { beforeAll, describe, expect, test } from "vitest";

import { ApiError, ArchiveClient } from "../src/api.js";
import { SearchView } from "../src/search.js";
import { SessionFlow } from "../src/session.js";
import { freshUser, readFixture, type Fixture } from "./fixture.js";

let fixture: Fixture;
let client: ArchiveClient;

beforeAll(() => {
  fixture = readFixture();
  client = new ArchiveClient(fixture.baseUrl);
});

describe("registration and download flow", () => {
  test("register, accept AUP, search, download", async () => {
    const flow = new SessionFlow(client);
    const name = freshUser("researcher");

    expect(await flow.register(name, "hunter-2", "external_packet")).toBe(true);
    expect(flow.state.phase).toBe("registered");
    expect(flow.canDownload).toBe(false); // AUP not yet accepted

    const aup = await flow.showAup();
    expect(aup.text).toContain("anonymisation");
    expect(aup.version).toBeTruthy();

    await flow.accept();
    expect(flow.state.phase).toBe("active");
    expect(flow.canDownload).toBe(true);

    const search = new SearchView(client);
    await search.run({ probe: fixture.probe }, flow.canDownload);
    expect(search.state.rows).toHaveLength(3); // the fixture's three files
    expect(search.state.rows.every((row) => row.downloadable)).toBe(true);

    const first = search.state.rows[0]!.entry.file_name;
    const payload = await client.downloadTrace(first, flow.token!);
    expect(payload.byteLength).toBeGreaterThan(0);
    const magic = new Uint8Array(payload.slice(0, 2));
    expect([...magic]).toEqual([0x50, 0x4b]); // zip container
  });

  test("declining the AUP keeps summaries browsable, downloads disabled", async () => {
    const flow = new SessionFlow(client);
    const name = freshUser("cautious");
    await flow.register(name, "pw", "external_packet");
    await flow.showAup();
    flow.decline();

    expect(flow.state.phase).toBe("summary_only");
    expect(flow.canDownload).toBe(false);
    expect(flow.canBrowseSummaries).toBe(true);

    // Search results render without download controls.
    const search = new SearchView(client);
    await search.run({ probe: fixture.probe }, flow.canDownload);
    expect(search.state.rows).toHaveLength(3);
    expect(search.state.rows.some((row) => row.downloadable)).toBe(false);

    // Summary data still flows.
    const file = fixture.files[0]!;
    const csv = await client.throughputCsv(
      { link: fixture.link, from: file.t_start, to: file.t_end },
      1,
    );
    expect(csv.startsWith("bin_start,bytes")).toBe(true);

    // And the server, not just the UI, refuses the download.
    await expect(
      client.downloadTrace(file.file_name, flow.token!),
    ).rejects.toSatisfy((err: unknown) =>
      err instanceof ApiError && err.kind === "aup_required");
  });

  test("duplicate username is an inline error, not a crash", async () => {
    const flow = new SessionFlow(client);
    const name = freshUser("dupe");
    expect(await flow.register(name, "pw", "external_packet")).toBe(true);

    const second = new SessionFlow(client);
    expect(await second.register(name, "pw", "external_packet")).toBe(false);
    expect(second.state.error).toContain("taken");
    expect(second.state.phase).toBe("anonymous");
  });

  test("summary-only category never gets download controls", async () => {
    const flow = new SessionFlow(client);
    const name = freshUser("summarist");
    await flow.register(name, "pw", "external_summary");
    await flow.showAup();
    await flow.accept();

    expect(flow.canDownload).toBe(false); // category rule, despite the AUP
    await expect(
      client.downloadTrace(fixture.files[0]!.file_name, flow.token!),
    ).rejects.toSatisfy((err: unknown) =>
      err instanceof ApiError && err.kind === "forbidden");
  });

  test("wrong password is an inline error", async () => {
    const flow = new SessionFlow(client);
    const name = freshUser("forgetful");
    await flow.register(name, "right", "external_packet");

    const retry = new SessionFlow(client);
    expect(await retry.login(name, "wrong")).toBe(false);
    expect(retry.state.error).toContain("wrong");
  });
});

describe("expired files", () => {
  test("render as metadata-only rows and answer 410 on download", async () => {
    const flow = new SessionFlow(client);
    await flow.register(freshUser("latecomer"), "pw", "external_packet");
    await flow.showAup();
    await flow.accept();

    const search = new SearchView(client);
    await search.run({ probe: "p2" }, flow.canDownload);
    expect(search.state.rows).toHaveLength(1);
    const row = search.state.rows[0]!;
    expect(row.entry.file_name).toBe(fixture.expiredFile);
    expect(row.expired).toBe(true);
    expect(row.downloadable).toBe(false); // no control despite authorization

    await expect(
      client.downloadTrace(fixture.expiredFile, flow.token!),
    ).rejects.toSatisfy((err: unknown) =>
      err instanceof ApiError && err.kind === "gone");
  });
});
