/** Display helpers shared by the table and chart views. */

export function formatBytes(n: number): string {
  const units = ["B", "KB", "MB", "GB", "TB"];
  let value = n;
  let i = 0;
  while (value >= 1000 && i < units.length - 1) {
    value /= 1000;
    i++;
  }
  return i === 0 ? `${n} B` : `${value.toFixed(1)} ${units[i]}`;
}

/** API timestamps are UTC; keep them that way, labelled. */
export function formatUtc(iso: string): string {
  return iso.replace("+00:00", "Z");
}
