/**
 * Strict reader for the simulator's metrics CSV.
 *
 * The contract: a header row of eleven fixed columns, then `sv_0..sv_{n-1}`
 * and `role_0..role_{n-1}` for one consistent device count n, then one row
 * per round.  Anything else is a load error — figures built from a silently
 * misread file would lie.
 */

import Papa from "papaparse";

export const FIXED_COLUMNS = [
  "round",
  "w",
  "v",
  "m",
  "winner_id",
  "accuracy",
  "mean_loss",
  "tx_bytes",
  "delay",
  "block_time",
  "hash_calls",
] as const;

export interface MetricsRow {
  round: number;
  w: number;
  v: number;
  m: number;
  winner_id: string;
  accuracy: number;
  mean_loss: number;
  tx_bytes: number;
  delay: number;
  block_time: number;
  hash_calls: number;
  /** per-device selection values, indexed by device number */
  sv: number[];
  /** per-device role labels, indexed by device number */
  roles: string[];
}

export interface MetricsTable {
  /** label used in legends and titles, normally the file stem */
  source: string;
  nDevices: number;
  rows: MetricsRow[];
}

export class MetricsFormatError extends Error {}

function deviceCount(header: string[]): number {
  const fixed = header.slice(0, FIXED_COLUMNS.length);
  if (fixed.join(",") !== FIXED_COLUMNS.join(",")) {
    throw new MetricsFormatError(
      `header must start with ${FIXED_COLUMNS.join(",")}; got ${fixed.join(",")}`,
    );
  }
  const rest = header.slice(FIXED_COLUMNS.length);
  if (rest.length === 0 || rest.length % 2 !== 0) {
    throw new MetricsFormatError(
      `expected sv_i and role_i column pairs after the fixed columns, got ${rest.length} columns`,
    );
  }
  const n = rest.length / 2;
  for (let i = 0; i < n; i++) {
    if (rest[i] !== `sv_${i}` || rest[n + i] !== `role_${i}`) {
      throw new MetricsFormatError(
        `device columns must be sv_0..sv_${n - 1},role_0..role_${n - 1}; ` +
          `got ${rest[i]},${rest[n + i]} at position ${i}`,
      );
    }
  }
  return n;
}

function num(raw: string | undefined, column: string, line: number): number {
  if (raw === undefined || raw === "") {
    throw new MetricsFormatError(`missing ${column} value on data row ${line}`);
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new MetricsFormatError(`${column} on data row ${line} is not a number: ${raw}`);
  }
  return value;
}

export function parseMetricsCsv(text: string, source = "run"): MetricsTable {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new MetricsFormatError(`unparseable CSV: ${first.message} (row ${first.row})`);
  }
  const [header, ...records] = parsed.data;
  if (!header) {
    throw new MetricsFormatError("empty CSV: no header row");
  }
  const n = deviceCount(header);
  if (records.length === 0) {
    throw new MetricsFormatError("no data rows after the header");
  }
  const rows = records.map((record, i) => {
    const line = i + 2;
    if (record.length !== header.length) {
      throw new MetricsFormatError(
        `data row ${line} has ${record.length} fields, header has ${header.length}`,
      );
    }
    const base = FIXED_COLUMNS.length;
    return {
      round: num(record[0], "round", line),
      w: num(record[1], "w", line),
      v: num(record[2], "v", line),
      m: num(record[3], "m", line),
      winner_id: record[4] ?? "",
      accuracy: num(record[5], "accuracy", line),
      mean_loss: num(record[6], "mean_loss", line),
      tx_bytes: num(record[7], "tx_bytes", line),
      delay: num(record[8], "delay", line),
      block_time: num(record[9], "block_time", line),
      hash_calls: num(record[10], "hash_calls", line),
      sv: Array.from({ length: n }, (_, d) => num(record[base + d], `sv_${d}`, line)),
      roles: Array.from({ length: n }, (_, d) => record[base + n + d] ?? ""),
    };
  });
  return { source, nDevices: n, rows };
}
