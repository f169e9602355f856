/**
 * DOM wiring: binds the view-model modules to the page.
 *
 * Everything stateful lives in SessionFlow/SearchView/ChartData, so this
 * layer only reads inputs, calls the models and repaints; a refresh loses
 * nothing the server cannot restore.
 */

import { ApiError, ArchiveClient, TraceFilter, UserCategory } from "./api.js";
import { BIN_MENU, buildChart, parseSeriesCsv, svgPath } from "./chart.js";
import { formatBytes, formatUtc } from "./format.js";
import { SearchView } from "./search.js";
import { SessionFlow } from "./session.js";

const apiBase =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8321";

const client = new ArchiveClient(apiBase);
const session = new SessionFlow(client);
const search = new SearchView(client);

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function setStatus(text: string): void {
  $("status").textContent = text;
}

function repaintSession(): void {
  const { phase, username, error } = session.state;
  $("session-phase").textContent = username ? `${username} (${phase})` : phase;
  $("register-error").textContent = error ?? "";
  ($("aup-panel") as HTMLDivElement).hidden = phase !== "aup_shown";
  if (session.state.aup) $("aup-text").textContent = session.state.aup.text;
}

async function onRegister(): Promise<void> {
  const username = ($("reg-username") as HTMLInputElement).value.trim();
  const password = ($("reg-password") as HTMLInputElement).value;
  const category = ($("reg-category") as HTMLSelectElement).value as UserCategory;
  if (!username || !password) {
    session.state.error = "username and password are required";
    repaintSession();
    return;
  }
  const ok = await session.register(username, password, category);
  if (ok) await session.showAup();
  repaintSession();
}

async function onAccept(): Promise<void> {
  await session.accept();
  repaintSession();
  await repaintResults();
}

async function onDecline(): Promise<void> {
  session.decline();
  repaintSession();
  await repaintResults();
}

function readFilter(): TraceFilter {
  const value = (id: string) => ($(id) as HTMLInputElement).value.trim() || undefined;
  return {
    probe: value("f-probe"),
    link: value("f-link"),
    from: value("f-from"),
    to: value("f-to"),
    tier: value("f-tier"),
  };
}

async function repaintResults(): Promise<void> {
  const ran = await search.run(readFilter(), session.canDownload);
  $("search-error").textContent = search.state.validationError ?? "";
  if (!ran) return;
  const tbody = $("results-body");
  tbody.replaceChildren();
  if (search.state.empty) {
    setStatus("no trace files match this filter");
    return;
  }
  setStatus(`${search.state.rows.length} trace files`);
  for (const row of search.state.rows) {
    const tr = document.createElement("tr");
    const cells = [
      row.entry.file_name,
      `${formatUtc(row.entry.t_start)} – ${formatUtc(row.entry.t_end)}`,
      String(row.entry.packet_count),
      formatBytes(row.entry.byte_count),
      row.entry.tier,
      row.expired ? "expired (metadata only)" : "on disk",
    ];
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    const actions = document.createElement("td");
    if (row.downloadable) {
      const button = document.createElement("button");
      button.textContent = "download";
      button.addEventListener("click", () => onDownload(row.entry.file_name));
      actions.appendChild(button);
    }
    tr.appendChild(actions);
    tbody.appendChild(tr);
  }
}

async function onDownload(fileName: string): Promise<void> {
  try {
    const payload = await client.downloadTrace(fileName, session.token ?? "");
    const blob = new Blob([payload], { type: "application/zip" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${fileName}.zip`;
    link.click();
    URL.revokeObjectURL(link.href);
  } catch (err) {
    if (err instanceof ApiError) {
      setStatus(`download refused: ${err.kind}`);
    } else {
      throw err;
    }
  }
}

async function onChart(): Promise<void> {
  const link = ($("c-link") as HTMLInputElement).value.trim();
  const from = ($("c-from") as HTMLInputElement).value.trim();
  const to = ($("c-to") as HTMLInputElement).value.trim();
  const bin = Number(($("c-bin") as HTMLSelectElement).value);
  if (!link || !from || !to) {
    $("chart-message").textContent = "link, from and to are required";
    return;
  }
  const csv = await client.throughputCsv({ link, from, to }, bin);
  const data = buildChart(parseSeriesCsv(csv), from, to, bin);
  $("chart-message").textContent = data.empty
    ? "empty window"
    : `total ${formatBytes(data.total)} across ${data.bins.length} bins` +
      (data.bins.some((b) => b.gap) ? " (gaps shown as zero)" : "");
  $("chart-path").setAttribute("d", svgPath(data, 800, 160));
}

export function wire(): void {
  const menu = $("c-bin") as HTMLSelectElement;
  for (const [label, seconds] of BIN_MENU) {
    const option = document.createElement("option");
    option.textContent = label;
    option.value = String(seconds);
    menu.appendChild(option);
  }
  menu.value = "1";
  $("register-go").addEventListener("click", () => void onRegister());
  $("aup-accept").addEventListener("click", () => void onAccept());
  $("aup-decline").addEventListener("click", () => void onDecline());
  $("search-go").addEventListener("click", () => void repaintResults());
  $("chart-go").addEventListener("click", () => void onChart());
  repaintSession();
  void repaintResults();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
