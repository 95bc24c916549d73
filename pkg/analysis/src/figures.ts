import { BoxStats, boxStats } from "./stats.js";
import { ResultRow, flagged } from "./schema.js";

export type FigureKind = "fig2" | "fig3" | "fig4a" | "fig4b";

export const FIGURE_KINDS: FigureKind[] = ["fig2", "fig3", "fig4a", "fig4b"];

const PLANNER_ORDER = ["RB", "CA-G", "CA-Co"];
const ENV_ORDER = ["continuous", "distributed", "uniform"];
const ENV_COLORS: Record<string, string> = {
    continuous: "#4477cc",
    distributed: "#cc4444",
    uniform: "#778899",
};

export interface BoxGroup {
    panel: string;          // panel caption (strategy, or environment for fig3)
    label: string;          // box caption within the panel
    color: string;
    values: number[];       // plotted sample
    excluded: number;       // flagged rows left out of the sample
    total: number;          // all rows belonging to the group
}

export interface FigureData {
    kind: FigureKind;
    yLabel: string;
    panels: string[];
    groups: BoxGroup[];
    groundTruth: number | null;  // dashed reference line (estimates only)
}

function ordered(values: string[], order: string[]): string[] {
    const present = new Set(values);
    const head = order.filter(v => present.has(v));
    const tail = [...present].filter(v => !order.includes(v)).sort();
    return [...head, ...tail];
}

/**
 * Convergence-time figure: one panel per strategy, one box per
 * planner x environment. Rows that failed to converge or converged on the
 * wrong feature are excluded from the boxes and surface in the counts.
 */
function convergenceFigure(kind: FigureKind, rows: ResultRow[]): FigureData {
    const strategies = ordered(rows.map(r => r.strategy),
        ["DC", "DMMD", "MFDM"]);
    const planners = ordered(rows.map(r => r.planner), PLANNER_ORDER);
    const envs = ordered(rows.map(r => r.envKind), ENV_ORDER);
    const groups: BoxGroup[] = [];
    for (const strategy of strategies) {
        for (const planner of planners) {
            for (const env of envs) {
                const cell = rows.filter(r => r.strategy === strategy &&
                    r.planner === planner && r.envKind === env);
                if (cell.length === 0) {
                    continue;  // combination absent from the table
                }
                const good = cell.filter(r => !flagged(r));
                groups.push({
                    panel: strategy,
                    label: envs.length > 1 ? `${planner}\n${env}` : planner,
                    color: ENV_COLORS[env] ?? "#777777",
                    values: good.map(r => r.convergenceTime as number),
                    excluded: cell.length - good.length,
                    total: cell.length,
                });
            }
        }
    }
    return {
        kind,
        yLabel: "time to convergence (steps)",
        panels: strategies,
        groups,
        groundTruth: null,
    };
}

/**
 * Estimate figure (DC strategy): one panel per environment, one box per
 * planner. Every replicate contributes its swarm mean estimate; the dashed
 * line marks the true fill ratio.
 */
function estimatesFigure(rows: ResultRow[]): FigureData {
    const dc = rows.filter(r => r.strategy === "DC");
    if (dc.length === 0) {
        throw new Error("estimates figure needs DC rows");
    }
    const envs = ordered(dc.map(r => r.envKind), ENV_ORDER);
    const planners = ordered(dc.map(r => r.planner), PLANNER_ORDER);
    const groups: BoxGroup[] = [];
    for (const env of envs) {
        for (const planner of planners) {
            const cell = dc.filter(r => r.envKind === env &&
                r.planner === planner);
            if (cell.length === 0) {
                continue;
            }
            groups.push({
                panel: env,
                label: planner,
                color: ENV_COLORS[env] ?? "#777777",
                values: cell.map(r => r.meanEstimate),
                excluded: 0,
                total: cell.length,
            });
        }
    }
    const truths = new Set(dc.map(r => r.rF));
    if (truths.size !== 1) {
        throw new Error(`estimates figure expects one r_f, got ` +
            `${[...truths].join(", ")}`);
    }
    return {
        kind: "fig3",
        yLabel: "estimated fill ratio",
        panels: envs,
        groups,
        groundTruth: dc[0].rF,
    };
}

export function buildFigure(kind: FigureKind, rows: ResultRow[]): FigureData {
    if (rows.length === 0) {
        throw new Error("no rows to plot");
    }
    if (kind === "fig3") {
        return estimatesFigure(rows);
    }
    return convergenceFigure(kind, rows);
}

export interface StatsRecord {
    figure: FigureKind;
    panel: string;
    label: string;
    nPlotted: number;
    nExcluded: number;
    stats: BoxStats | null;
}

export function figureStats(fig: FigureData): StatsRecord[] {
    return fig.groups.map(g => ({
        figure: fig.kind,
        panel: g.panel,
        label: g.label.replace("\n", "/"),
        nPlotted: g.values.length,
        nExcluded: g.excluded,
        stats: boxStats(g.values),
    }));
}

export function statsCsv(records: StatsRecord[]): string {
    const lines = ["figure,panel,group,n_plotted,n_excluded,min,q1,median,q3,max"];
    for (const r of records) {
        const s = r.stats;
        const nums = s === null ? ",,,," :
            [s.min, s.q1, s.median, s.q3, s.max].map(v => String(v)).join(",");
        lines.push(`${r.figure},${r.panel},${r.label},${r.nPlotted},` +
            `${r.nExcluded},${nums}`);
    }
    return lines.join("\n") + "\n";
}
