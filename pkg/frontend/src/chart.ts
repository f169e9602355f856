/**
 * Throughput chart data: CSV parsing, window alignment, gap marking.
 *
 * The service returns dense bins for the requested window; the chart model
 * still treats any bin it did not receive as an explicit zero-valued gap so
 * a partial response can never be mistaken for silence on the wire.
 */

export interface SeriesPoint {
  binStart: string;
  bytes: number;
}

export interface ChartBin {
  index: number;
  binStart: string;
  bytes: number;
  gap: boolean;
}

export interface ChartData {
  bins: ChartBin[];
  total: number;
  maxBytes: number;
  empty: boolean;
}

/** The fixed bin-width menu, 1 ms up to 1 h. */
export const BIN_MENU: ReadonlyArray<readonly [string, number]> = [
  ["1 ms", 0.001],
  ["10 ms", 0.01],
  ["100 ms", 0.1],
  ["1 s", 1],
  ["10 s", 10],
  ["1 min", 60],
  ["10 min", 600],
  ["1 h", 3600],
];

export function parseSeriesCsv(text: string): SeriesPoint[] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0] !== "bin_start,bytes") {
    throw new Error(`unexpected series CSV header: ${lines[0] ?? "(empty)"}`);
  }
  return lines.slice(1).map((line) => {
    const comma = line.lastIndexOf(",");
    const bytes = Number(line.slice(comma + 1));
    if (comma < 0 || !Number.isFinite(bytes)) {
      throw new Error(`unparseable series row: ${line}`);
    }
    return { binStart: line.slice(0, comma), bytes };
  });
}

/**
 * Align points onto the requested window.  ``from``/``to`` are ISO strings;
 * bins the response did not cover come back zero with ``gap`` set.
 */
export function buildChart(
  points: SeriesPoint[],
  from: string,
  to: string,
  binSeconds: number,
): ChartData {
  const start = Date.parse(from);
  const end = Date.parse(to);
  if (Number.isNaN(start) || Number.isNaN(end) || end < start) {
    throw new Error("bad chart window");
  }
  const count = Math.ceil((end - start) / (binSeconds * 1000));
  const bins: ChartBin[] = [];
  let total = 0;
  let maxBytes = 0;
  for (let i = 0; i < count; i++) {
    const point = points[i];
    const covered = point !== undefined;
    const bytes = covered ? point.bytes : 0;
    bins.push({
      index: i,
      binStart: covered
        ? point.binStart
        : new Date(start + i * binSeconds * 1000).toISOString(),
      bytes,
      gap: !covered,
    });
    total += bytes;
    if (bytes > maxBytes) maxBytes = bytes;
  }
  return { bins, total, maxBytes, empty: count === 0 };
}

/** Polyline for an inline SVG rendering of the series. */
export function svgPath(data: ChartData, width: number, height: number): string {
  if (data.bins.length === 0) return "";
  const stepX = width / data.bins.length;
  const scaleY = data.maxBytes > 0 ? height / data.maxBytes : 0;
  return data.bins
    .map((bin, i) => {
      const x = (i * stepX).toFixed(2);
      const y = (height - bin.bytes * scaleY).toFixed(2);
      return `${i === 0 ? "M" : "L"}${x},${y}`;
    })
    .join(" ");
}
