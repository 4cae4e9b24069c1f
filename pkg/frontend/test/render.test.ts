import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { runCli } from "../src/cli.js";
import { parseMetricsCsv } from "../src/csv.js";
import { FIGURE_NAMES, buildFigure } from "../src/figures.js";
import { renderSvg } from "../src/render.js";

const fixedPath = fileURLToPath(new URL("./fixtures/fixed_ratio.csv", import.meta.url));
const randomPath = fileURLToPath(new URL("./fixtures/random.csv", import.meta.url));
const fixed = parseMetricsCsv(readFileSync(fixedPath, "utf8"), "fixed_ratio");
const random = parseMetricsCsv(readFileSync(randomPath, "utf8"), "random");

describe("renderSvg", () => {
  it("renders every figure to parseable SVG markup", () => {
    for (const name of FIGURE_NAMES) {
      const svg = renderSvg(buildFigure(name, fixed, random));
      expect(svg.startsWith("<svg"), name).toBe(true);
      expect(svg.endsWith("</svg>"), name).toBe(true);
      expect(svg).toContain("<path");
    }
  });

  it("honours the requested size", () => {
    const svg = renderSvg(buildFigure("roles", fixed), { width: 400, height: 300 });
    expect(svg).toContain('width="400"');
    expect(svg).toContain('height="300"');
  });
});

describe("runCli", () => {
  it("writes an SVG for each figure name", async () => {
    const out = mkdtempSync(join(tmpdir(), "plotkit-"));
    for (const name of FIGURE_NAMES) {
      const target = join(out, `${name}.svg`);
      const argv = [fixedPath, name, target];
      if (name === "compare") argv.push("--compare", randomPath);
      expect(await runCli(argv)).toBe(0);
      expect(readFileSync(target, "utf8")).toContain("</svg>");
    }
  });

  it("fails usefully on an unknown figure", async () => {
    const out = mkdtempSync(join(tmpdir(), "plotkit-"));
    await expect(runCli([fixedPath, "sparkline", join(out, "x.svg")])).rejects.toThrow(
      /unknown figure name/,
    );
  });
});
