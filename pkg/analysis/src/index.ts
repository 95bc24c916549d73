export { parseResultsCsv, flagged, RESULT_COLUMNS } from "./schema.js";
export type { ResultRow } from "./schema.js";
export { quantileInc, boxStats } from "./stats.js";
export type { BoxStats } from "./stats.js";
export { buildFigure, figureStats, statsCsv, FIGURE_KINDS } from "./figures.js";
export type { FigureData, BoxGroup, FigureKind, StatsRecord } from "./figures.js";
export { renderSvg } from "./boxplot.js";
export { analyze } from "./cli.js";
