/**
 * Metadata search view state: filter validation, result rows, empty states.
 *
 * Window validation happens before any request leaves the browser; an
 * invalid window is an inline error, never a round trip.  Stale responses
 * from superseded searches are dropped so concurrent submissions cannot
 * interleave.
 */

import { ArchiveClient, TraceEntry, TraceFilter } from "./api.js";

export interface ResultRow {
  entry: TraceEntry;
  /** Download control rendered only for present files and authorized users. */
  downloadable: boolean;
  /** Expired files stay listed as metadata-only rows. */
  expired: boolean;
}

export interface SearchViewState {
  rows: ResultRow[];
  pending: boolean;
  /** True after a completed search with no hits (explicit empty state). */
  empty: boolean;
  validationError?: string;
}

/** Returns an error message for an unusable window, or null when fine. */
export function validateWindow(from?: string, to?: string): string | null {
  for (const [label, value] of [["from", from], ["to", to]] as const) {
    if (value && Number.isNaN(Date.parse(value))) {
      return `"${label}" is not a valid timestamp`;
    }
  }
  if (from && to && Date.parse(from) > Date.parse(to)) {
    return "window start is after its end";
  }
  return null;
}

export class SearchView {
  state: SearchViewState = { rows: [], pending: false, empty: false };
  private generation = 0;

  constructor(private readonly client: ArchiveClient) {}

  /**
   * Validate, query, and map results.  Resolves false when validation
   * blocked the request.
   */
  async run(filter: TraceFilter, canDownload: boolean): Promise<boolean> {
    const problem = validateWindow(filter.from, filter.to);
    if (problem) {
      this.state = { rows: [], pending: false, empty: false, validationError: problem };
      return false;
    }
    const generation = ++this.generation;
    this.state = { ...this.state, pending: true, validationError: undefined };
    const entries = await this.client.searchTraces(filter);
    if (generation !== this.generation) {
      return true; // a newer search superseded this one; keep its state
    }
    this.state = {
      rows: entries.map((entry) => ({
        entry,
        downloadable: entry.file_present && canDownload,
        expired: !entry.file_present,
      })),
      pending: false,
      empty: entries.length === 0,
    };
    return true;
  }
}
