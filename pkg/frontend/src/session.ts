/**
 * Registration and AUP flow state.
 *
 * The server is the authority; this state machine only tracks which controls
 * to enable.  Declining the AUP drops the user into summary-only browsing:
 * search and charts stay available, downloads stay disabled until the AUP is
 * explicitly accepted.
 */

import { ApiError, ArchiveClient, AupDoc, UserCategory, UserView } from "./api.js";

export type SessionPhase =
  | "anonymous"
  | "registered" // logged in, AUP not yet shown
  | "aup_shown"
  | "active" // AUP accepted
  | "summary_only"; // AUP declined

export interface SessionState {
  phase: SessionPhase;
  username?: string;
  category?: UserCategory;
  token?: string;
  aup?: AupDoc;
  error?: string;
}

export class SessionFlow {
  state: SessionState = { phase: "anonymous" };

  constructor(private readonly client: ArchiveClient) {}

  /** Register then immediately log in; duplicate names become inline errors. */
  async register(
    username: string,
    password: string,
    category: UserCategory,
  ): Promise<boolean> {
    try {
      await this.client.register(username, password, category);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state = { ...this.state, error: `username "${username}" is taken` };
        return false;
      }
      throw err;
    }
    return this.login(username, password, category);
  }

  async login(
    username: string,
    password: string,
    category?: UserCategory,
  ): Promise<boolean> {
    try {
      const session = await this.client.login(username, password);
      this.state = {
        phase: "registered",
        username,
        category,
        token: session.token,
      };
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.state = { ...this.state, error: "wrong username or password" };
        return false;
      }
      throw err;
    }
  }

  /** Fetch and surface the AUP text; must happen before accept(). */
  async showAup(): Promise<AupDoc> {
    const aup = await this.client.fetchAup();
    this.state = { ...this.state, phase: "aup_shown", aup, error: undefined };
    return aup;
  }

  async accept(): Promise<UserView> {
    const { username, token, aup } = this.state;
    if (!username || !token || !aup) {
      throw new Error("AUP must be shown to a logged-in user before accepting");
    }
    const user = await this.client.acceptAup(username, token, aup.version);
    this.state = { ...this.state, phase: "active", category: user.category };
    return user;
  }

  decline(): void {
    this.state = { ...this.state, phase: "summary_only" };
  }

  /** Download controls: accepted AUP and a packet-data category. */
  get canDownload(): boolean {
    return this.state.phase === "active" && this.state.category !== "external_summary";
  }

  /** Summary data is open; every phase may browse it. */
  get canBrowseSummaries(): boolean {
    return true;
  }

  get token(): string | undefined {
    return this.state.token;
  }
}
