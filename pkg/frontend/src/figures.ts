/**
 * The five standard figures, as ECharts option objects.
 *
 * Builders group and restyle CSV values but never transform them: every
 * number plotted equals a cell of the input table.
 */

import type { EChartsOption, SeriesOption } from "echarts";

import type { MetricsTable } from "./csv.js";

export const FIGURE_NAMES = ["accuracy", "roles", "delay", "tx-bytes", "compare"] as const;
export type FigureName = (typeof FIGURE_NAMES)[number];

export class FigureError extends Error {}

function rounds(table: MetricsTable): number[] {
  return table.rows.map((r) => r.round);
}

function base(title: string, table: MetricsTable, yName: string): EChartsOption {
  return {
    animation: false,
    title: { text: title, subtext: table.source, left: "center" },
    tooltip: { trigger: "axis" },
    legend: { bottom: 0 },
    grid: { left: 70, right: 30, top: 70, bottom: 60 },
    xAxis: { type: "category", name: "round", data: rounds(table).map(String) },
    yAxis: { type: "value", name: yName },
  };
}

function line(name: string, data: number[]): SeriesOption {
  return { name, type: "line", showSymbol: false, data };
}

export function accuracyFigure(table: MetricsTable): EChartsOption {
  return {
    ...base("Global model accuracy per round", table, "accuracy"),
    yAxis: { type: "value", name: "accuracy", min: 0, max: 1 },
    series: [
      line("accuracy", table.rows.map((r) => r.accuracy)),
      line("mean training loss", table.rows.map((r) => r.mean_loss)),
    ],
  };
}

export function rolesFigure(table: MetricsTable): EChartsOption {
  return {
    ...base("Role counts per round", table, "devices"),
    series: [
      line("workers", table.rows.map((r) => r.w)),
      line("validators", table.rows.map((r) => r.v)),
      line("miners", table.rows.map((r) => r.m)),
    ],
  };
}

export function delayFigure(table: MetricsTable): EChartsOption {
  return {
    ...base("Simulated round delay", table, "seconds"),
    series: [
      line("round delay", table.rows.map((r) => r.delay)),
      line("block time", table.rows.map((r) => r.block_time)),
    ],
  };
}

export function txBytesFigure(table: MetricsTable): EChartsOption {
  return {
    ...base("Transaction bytes per round", table, "bytes"),
    series: [
      {
        name: "tx bytes",
        type: "bar",
        data: table.rows.map((r) => r.tx_bytes),
      },
    ],
  };
}

export function compareFigure(table: MetricsTable, other: MetricsTable): EChartsOption {
  return {
    ...base("Accuracy comparison", table, "accuracy"),
    title: { text: "Accuracy comparison", subtext: `${table.source} vs ${other.source}`, left: "center" },
    yAxis: { type: "value", name: "accuracy", min: 0, max: 1 },
    series: [
      line(table.source, table.rows.map((r) => r.accuracy)),
      line(other.source, other.rows.map((r) => r.accuracy)),
    ],
  };
}

export function buildFigure(
  name: string,
  table: MetricsTable,
  compare?: MetricsTable,
): EChartsOption {
  switch (name) {
    case "accuracy":
      return accuracyFigure(table);
    case "roles":
      return rolesFigure(table);
    case "delay":
      return delayFigure(table);
    case "tx-bytes":
      return txBytesFigure(table);
    case "compare":
      if (!compare) {
        throw new FigureError("the compare figure needs a second CSV (--compare)");
      }
      return compareFigure(table, compare);
    default:
      throw new FigureError(
        `unknown figure name ${JSON.stringify(name)}; known: ${FIGURE_NAMES.join(", ")}`,
      );
  }
}
