/**
 * plotkit <metrics.csv> <figure-name> <out.svg> [--compare other.csv]
 *
 * Figure names: accuracy, roles, delay, tx-bytes, compare.
 */

import { readFile, writeFile } from "node:fs/promises";
import { basename } from "node:path";

import yargs from "yargs";

import { parseMetricsCsv, MetricsFormatError } from "./csv.js";
import { buildFigure, FigureError, FIGURE_NAMES } from "./figures.js";
import { renderSvg } from "./render.js";

function stem(path: string): string {
  return basename(path).replace(/\.[^.]*$/, "");
}

export async function runCli(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .usage("plotkit <csv> <figure-name> <out.svg>")
    .command("$0 <csv> <figure> <out>", "render one figure from a metrics CSV", (cmd) =>
      cmd
        .positional("csv", { type: "string", demandOption: true, describe: "metrics CSV file" })
        .positional("figure", {
          type: "string",
          demandOption: true,
          describe: `one of: ${FIGURE_NAMES.join(", ")}`,
        })
        .positional("out", { type: "string", demandOption: true, describe: "output SVG path" }),
    )
    .option("compare", { type: "string", describe: "second metrics CSV (compare figure)" })
    .option("width", { type: "number", default: 880 })
    .option("height", { type: "number", default: 520 })
    .strict()
    .fail((msg) => {
      throw new FigureError(msg);
    })
    .exitProcess(false)
    .parse();

  const table = parseMetricsCsv(await readFile(args.csv as string, "utf8"), stem(args.csv as string));
  const compare = args.compare
    ? parseMetricsCsv(await readFile(args.compare, "utf8"), stem(args.compare))
    : undefined;
  const option = buildFigure(args.figure as string, table, compare);
  const svg = renderSvg(option, { width: args.width, height: args.height });
  await writeFile(args.out as string, svg, "utf8");
  console.log(`wrote ${args.out} (${svg.length} bytes, ${table.rows.length} rounds)`);
  return 0;
}

export async function main(): Promise<void> {
  try {
    process.exitCode = await runCli(process.argv.slice(2));
  } catch (err) {
    if (err instanceof FigureError || err instanceof MetricsFormatError) {
      console.error(`usage error: ${err.message}`);
      process.exitCode = 1;
    } else if (err instanceof Error && "code" in err) {
      console.error(`i/o error: ${err.message}`);
      process.exitCode = 2;
    } else {
      throw err;
    }
  }
}
