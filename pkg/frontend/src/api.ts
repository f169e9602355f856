/**
 * Typed client for the trace-archive access service.
 *
 * Pure API mapping, one method per documented route; every authorization
 * decision stays server-side and surfaces here as an ApiError with the
 * server's status code, so the UI can only ever reflect what the service
 * actually allows.
 */

export type UserCategory =
  | "operator"
  | "host_site"
  | "project_member"
  | "external_packet"
  | "external_summary";

export interface UserView {
  username: string;
  category: UserCategory;
  aup_accepted_at: string | null;
  aup_version: string | null;
}

export interface AupDoc {
  version: string;
  text: string;
}

export interface SessionToken {
  token: string;
  expires_at: string;
}

export interface TraceEntry {
  file_name: string;
  probe_id: string;
  link_id: string;
  t_start: string;
  t_end: string;
  packet_count: number;
  byte_count: number;
  lost_packets: number;
  anonymized: boolean;
  state: string;
  tier: string;
  ingested_at: string;
  file_present: boolean;
  pinned: boolean;
}

export interface ProbeInfo {
  probe_id: string;
  hardware: string;
  software: string;
  link_id: string;
  link_bandwidth_bps: number;
  version: number;
}

export interface TraceFilter {
  probe?: string;
  link?: string;
  from?: string;
  to?: string;
  tier?: string;
}

export interface SummaryWindow {
  link: string;
  from: string;
  to: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }

  /** Distinguishes "log in first" from "you may not" for the UI. */
  get kind(): "unauthenticated" | "aup_required" | "forbidden" | "gone" | "other" {
    if (this.status === 401) return "unauthenticated";
    if (this.status === 403) {
      return this.body.includes("AupRequired") ? "aup_required" : "forbidden";
    }
    if (this.status === 410) return "gone";
    return "other";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ArchiveClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(
    path: string,
    init: RequestInit = {},
    token?: string,
  ): Promise<Response> {
    const headers = new Headers(init.headers);
    if (token) headers.set("Authorization", `Bearer ${token}`);
    if (init.body) headers.set("Content-Type", "application/json");
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers,
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response;
  }

  async register(
    username: string,
    password: string,
    category: UserCategory,
  ): Promise<UserView> {
    const r = await this.request("/users", {
      method: "POST",
      body: JSON.stringify({ username, password, category }),
    });
    return r.json();
  }

  async login(username: string, password: string): Promise<SessionToken> {
    const r = await this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ username, password }),
    });
    return r.json();
  }

  async fetchAup(): Promise<AupDoc> {
    return (await this.request("/aup")).json();
  }

  async acceptAup(
    username: string,
    token: string,
    version?: string,
  ): Promise<UserView> {
    const r = await this.request(
      `/users/${encodeURIComponent(username)}/aup`,
      { method: "POST", body: JSON.stringify({ version: version ?? null }) },
      token,
    );
    return r.json();
  }

  async probes(): Promise<ProbeInfo[]> {
    return (await this.request("/probes")).json();
  }

  async searchTraces(filter: TraceFilter): Promise<TraceEntry[]> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filter)) {
      if (value) params.set(key, value);
    }
    const query = params.toString();
    const r = await this.request(`/traces${query ? "?" + query : ""}`);
    return r.json();
  }

  async downloadTrace(fileName: string, token: string): Promise<ArrayBuffer> {
    const r = await this.request(
      `/traces/${encodeURIComponent(fileName)}/download`,
      {},
      token,
    );
    return r.arrayBuffer();
  }

  async throughputCsv(window: SummaryWindow, binSeconds: number): Promise<string> {
    const params = new URLSearchParams({
      link: window.link,
      from: window.from,
      to: window.to,
      bin: String(binSeconds),
    });
    return (await this.request(`/summary/throughput?${params}`)).text();
  }

  async distinctSources(window: SummaryWindow): Promise<number> {
    const params = new URLSearchParams(window as unknown as Record<string, string>);
    const body = await (await this.request(`/summary/sources?${params}`)).json();
    return body.distinct_sources;
  }
}
