/** Server-side SVG rendering of figure options (no browser, no canvas). */

import * as echarts from "echarts";
import type { EChartsOption } from "echarts";

export interface RenderSize {
  width?: number;
  height?: number;
}

export function renderSvg(option: EChartsOption, size: RenderSize = {}): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: size.width ?? 880,
    height: size.height ?? 520,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}
