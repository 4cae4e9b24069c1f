import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { parseMetricsCsv } from "../src/csv.js";
import {
  FIGURE_NAMES,
  FigureError,
  buildFigure,
  compareFigure,
  rolesFigure,
} from "../src/figures.js";

const fixed = parseMetricsCsv(
  readFileSync(new URL("./fixtures/fixed_ratio.csv", import.meta.url), "utf8"),
  "fixed_ratio",
);
const random = parseMetricsCsv(
  readFileSync(new URL("./fixtures/random.csv", import.meta.url), "utf8"),
  "random",
);

type Series = { name?: string; data: unknown[] };

function seriesOf(option: object): Series[] {
  return (option as { series: Series[] }).series;
}

describe("buildFigure", () => {
  it("builds every documented figure from the reference run", () => {
    for (const name of FIGURE_NAMES) {
      const option = buildFigure(name, fixed, random);
      expect(seriesOf(option).length).toBeGreaterThan(0);
      for (const series of seriesOf(option)) {
        expect(series.data).toHaveLength(fixed.rows.length);
      }
    }
  });

  it("rejects unknown figure names", () => {
    expect(() => buildFigure("pie", fixed)).toThrow(FigureError);
    expect(() => buildFigure("pie", fixed)).toThrow(/unknown figure name/);
  });

  it("requires a second table for the comparison figure", () => {
    expect(() => buildFigure("compare", fixed)).toThrow(/second CSV/);
  });
});

describe("roles figure", () => {
  it("shows the fixed 5/2/1 split as three constant series", () => {
    const option = rolesFigure(fixed);
    const byName = Object.fromEntries(seriesOf(option).map((s) => [s.name, s.data]));
    expect(byName["workers"]).toEqual(Array(20).fill(5));
    expect(byName["validators"]).toEqual(Array(20).fill(2));
    expect(byName["miners"]).toEqual(Array(20).fill(1));
  });
});

describe("plotted values equal CSV values", () => {
  it("accuracy series is the accuracy column verbatim", () => {
    const option = buildFigure("accuracy", fixed);
    expect(seriesOf(option)[0]!.data).toEqual(fixed.rows.map((r) => r.accuracy));
  });

  it("tx-bytes series is the tx_bytes column verbatim", () => {
    const option = buildFigure("tx-bytes", fixed);
    expect(seriesOf(option)[0]!.data).toEqual(fixed.rows.map((r) => r.tx_bytes));
  });

  it("comparison overlays both runs' accuracy columns", () => {
    const option = compareFigure(fixed, random);
    const [ours, theirs] = seriesOf(option);
    expect(ours!.name).toBe("fixed_ratio");
    expect(theirs!.name).toBe("random");
    expect(ours!.data).toEqual(fixed.rows.map((r) => r.accuracy));
    expect(theirs!.data).toEqual(random.rows.map((r) => r.accuracy));
  });
});
