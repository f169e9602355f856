import { readFileSync } from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import type { TraceEntry } from "../src/api.js";

export interface Fixture {
  baseUrl: string;
  probe: string;
  link: string;
  packetsPerSecond: number;
  wireBytes: number;
  files: TraceEntry[];
  expiredFile: string;
}

export function readFixture(): Fixture {
  const here = path.dirname(fileURLToPath(import.meta.url));
  return JSON.parse(readFileSync(path.join(here, ".fixture.json"), "utf-8"));
}

let counter = 0;

/** Unique usernames so tests stay independent of execution order. */
export function freshUser(prefix: string): string {
  counter += 1;
  return `${prefix}-${process.pid}-${counter}`;
}
