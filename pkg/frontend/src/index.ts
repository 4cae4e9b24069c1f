export { FIXED_COLUMNS, MetricsFormatError, parseMetricsCsv } from "./csv.js";
export type { MetricsRow, MetricsTable } from "./csv.js";
export {
  FIGURE_NAMES,
  FigureError,
  accuracyFigure,
  buildFigure,
  compareFigure,
  delayFigure,
  rolesFigure,
  txBytesFigure,
} from "./figures.js";
export type { FigureName } from "./figures.js";
export { renderSvg } from "./render.js";
export { runCli } from "./cli.js";
