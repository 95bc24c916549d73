#!/usr/bin/env node
// analyze <results.csv> --figure {fig2|fig3|fig4a|fig4b} --out <dir>

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";

import { renderSvg } from "./boxplot.js";
import { FIGURE_KINDS, FigureKind, buildFigure, figureStats, statsCsv }
    from "./figures.js";
import { parseResultsCsv } from "./schema.js";

export function analyze(csvPath: string, figure: FigureKind,
    outDir: string): { svgPath: string; statsPath: string } {
    const rows = parseResultsCsv(readFileSync(csvPath, "utf8"));
    const fig = buildFigure(figure, rows);
    mkdirSync(outDir, { recursive: true });
    const svgPath = join(outDir, `${figure}.svg`);
    const statsPath = join(outDir, `${figure}_stats.csv`);
    writeFileSync(svgPath, renderSvg(fig));
    writeFileSync(statsPath, statsCsv(figureStats(fig)));
    return { svgPath, statsPath };
}

export function main(argv: string[]): number {
    let parsed;
    try {
        parsed = parseArgs({
            args: argv,
            allowPositionals: true,
            options: {
                figure: { type: "string" },
                out: { type: "string", default: "figures" },
            },
        });
    } catch (err) {
        console.error(`argument error: ${(err as Error).message}`);
        return 2;
    }
    const csv = parsed.positionals[0];
    const figure = parsed.values.figure as string | undefined;
    if (!csv || !figure) {
        console.error("usage: analyze <results.csv> --figure " +
            `{${FIGURE_KINDS.join("|")}} [--out DIR]`);
        return 2;
    }
    if (!FIGURE_KINDS.includes(figure as FigureKind)) {
        console.error(`unknown figure ${figure}; expected one of ` +
            FIGURE_KINDS.join(", "));
        return 2;
    }
    try {
        const out = analyze(csv, figure as FigureKind,
            parsed.values.out as string);
        console.error(`wrote ${out.svgPath} and ${out.statsPath}`);
        return 0;
    } catch (err) {
        console.error(`error: ${(err as Error).message}`);
        return 1;
    }
}

// invoked directly (not imported by tests)
if (process.argv[1] && /cli\.js$/.test(process.argv[1])) {
    process.exit(main(process.argv.slice(2)));
}
